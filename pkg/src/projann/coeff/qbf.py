"""Quantified Boolean formulas and their arithmetization with projection gates.

File format, one item per line ('#' starts a comment):

    free x1 x2          (optional; unquantified variables)
    forall y1
    exists y2
    matrix and y1 or not y2 x1

The matrix is in prefix notation over and/or/not/0/1 and variable names.
Quantifier lines are listed outermost first.
"""

from __future__ import annotations

import itertools
import random
import re
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple, Union

from ..circuit.builder import Builder
from ..circuit.ir import Circuit

Node = Union[str, int, Tuple]
_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_OPS = {"and": 2, "or": 2, "not": 1}


class QBFError(ValueError):
    pass


@dataclass
class QBF:
    free: List[str]
    prefix: List[Tuple[str, str]]      # (quantifier, variable), outermost first
    matrix: Node

    def variables(self) -> List[str]:
        return list(self.free) + [v for _, v in self.prefix]


def parse_matrix(tokens: Sequence[str]) -> Node:
    pos = 0

    def walk() -> Node:
        nonlocal pos
        if pos >= len(tokens):
            raise QBFError("matrix ends early")
        tok = tokens[pos]
        pos += 1
        if tok in ("0", "1"):
            return int(tok)
        if tok in _OPS:
            return (tok,) + tuple(walk() for _ in range(_OPS[tok]))
        if _NAME.match(tok):
            return tok
        raise QBFError(f"bad token {tok!r}")

    node = walk()
    if pos != len(tokens):
        raise QBFError(f"trailing tokens after matrix: {' '.join(tokens[pos:])}")
    return node


def format_matrix(node: Node) -> str:
    if isinstance(node, int):
        return str(node)
    if isinstance(node, str):
        return node
    return " ".join([node[0]] + [format_matrix(c) for c in node[1:]])


def _matrix_vars(node: Node, out: set):
    if isinstance(node, str):
        out.add(node)
    elif isinstance(node, tuple):
        for c in node[1:]:
            _matrix_vars(c, out)


def parse_qbf(text: str) -> QBF:
    free: List[str] = []
    prefix: List[Tuple[str, str]] = []
    matrix = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        try:
            if head == "free":
                free.extend(rest)
            elif head in ("forall", "exists"):
                if len(rest) != 1:
                    raise QBFError(f"{head} takes one variable")
                prefix.append((head, rest[0]))
            elif head == "matrix":
                if matrix is not None:
                    raise QBFError("second matrix line")
                matrix = parse_matrix(rest)
            else:
                raise QBFError(f"unknown keyword {head!r}")
        except QBFError as e:
            raise QBFError(f"line {line_no}: {e}") from None
    if matrix is None:
        raise QBFError("missing matrix line")
    q = QBF(free, prefix, matrix)
    names = q.variables()
    for v in names:
        if not _NAME.match(v) or v in _OPS:
            raise QBFError(f"bad variable name {v!r}")
    if len(set(names)) != len(names):
        raise QBFError("a variable is declared twice")
    used: set = set()
    _matrix_vars(matrix, used)
    unbound = sorted(used - set(names))
    if unbound:
        raise QBFError(f"unbound variable {unbound[0]}")
    return q


def format_qbf(q: QBF) -> str:
    lines = []
    if q.free:
        lines.append("free " + " ".join(q.free))
    lines += [f"{k} {v}" for k, v in q.prefix]
    lines.append("matrix " + format_matrix(q.matrix))
    return "\n".join(lines) + "\n"


def _eval_matrix(node: Node, env: Dict[str, int]) -> int:
    if isinstance(node, int):
        return node
    if isinstance(node, str):
        return env[node]
    op = node[0]
    if op == "not":
        return 1 - _eval_matrix(node[1], env)
    a, b = _eval_matrix(node[1], env), _eval_matrix(node[2], env)
    return a & b if op == "and" else a | b


def evaluate_qbf(q: QBF, free_values: Dict[str, int] | None = None) -> int:
    """Brute-force truth value."""
    env = dict(free_values or {})
    missing = [v for v in q.free if v not in env]
    if missing:
        raise QBFError(f"no value for free variable {missing[0]}")

    def go(k: int) -> int:
        if k == len(q.prefix):
            return _eval_matrix(q.matrix, env)
        kind, v = q.prefix[k]
        vals = []
        for bit in (0, 1):
            env[v] = bit
            vals.append(go(k + 1))
        del env[v]
        return min(vals) if kind == "forall" else max(vals)

    return go(0)


def arithmetize_qbf(q: QBF) -> Tuple[Circuit, Dict[str, int]]:
    """Circuit whose value on Boolean free inputs is the truth value of `q`.

    and -> product, not -> 1 - x, or -> 1 - (1-a)(1-b); forall -> product of the
    two projections, exists -> 1 - (1 - P0)(1 - P1). Returns the circuit and the
    variable numbering (free variables first, in declaration order).
    """
    names = q.variables()
    index = {v: i + 1 for i, v in enumerate(names)}
    b = Builder(len(names))

    def lor(x, y):
        return b.one_minus(b.mul(b.one_minus(x), b.one_minus(y)))

    def walk(node):
        if isinstance(node, int):
            return b.one() if node else b.zero()
        if isinstance(node, str):
            return b.input(index[node])
        op = node[0]
        if op == "not":
            return b.one_minus(walk(node[1]))
        x, y = walk(node[1]), walk(node[2])
        return b.mul(x, y) if op == "and" else lor(x, y)

    g = walk(q.matrix)
    for kind, v in reversed(q.prefix):
        if kind == "forall":
            g = b.prod(index[v], g)
        else:
            g = lor(b.proj(index[v], 0, g), b.proj(index[v], 1, g))
    return b.build([g]), index


def random_qbf(rng: random.Random, nquant: int = 3, nfree: int = 0, size: int = 8) -> QBF:
    names = [f"x{i + 1}" for i in range(nfree)] + [f"y{i + 1}" for i in range(nquant)]

    def grow(budget: int) -> Node:
        if budget <= 1 or rng.random() < 0.2:
            return rng.choice(names) if names and rng.random() < 0.9 else rng.randint(0, 1)
        op = rng.choice(["and", "or", "not"])
        if op == "not":
            return ("not", grow(budget - 1))
        left = rng.randint(1, budget - 1)
        return (op, grow(left), grow(budget - left))

    prefix = [(rng.choice(["forall", "exists"]), names[nfree + i]) for i in range(nquant)]
    return QBF(names[:nfree], prefix, grow(size))


def all_assignments(names: Sequence[str]):
    for bits in itertools.product((0, 1), repeat=len(names)):
        yield dict(zip(names, bits))
