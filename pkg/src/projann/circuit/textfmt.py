"""Line-oriented circuit files.

    vars 2
    g0 = input x1
    g1 = input x2
    g2 = add g0 g1
    outputs g2

Gate labels in canonical files are g0, g1, ... in order. The parser accepts
any distinct labels as long as each is defined before it is used.
"""

from __future__ import annotations

import re
from typing import Dict, List

from .ir import (ADD, CDIV, INPUT, MINUS_ONE, MUL, ONE, PROD, PROJ, SUM, Circuit, CircuitError,
                 Gate, find_violation)


class CircuitFormatError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


_LABEL = re.compile(r"^g(\d+)$")
_VAR = re.compile(r"^x(\d+)$")


def format_gate(i: int, g: Gate) -> str:
    if g.op == INPUT:
        rhs = f"input x{g.var}"
    elif g.op == ONE:
        rhs = "one"
    elif g.op == MINUS_ONE:
        rhs = "minusone"
    elif g.op in (CDIV, ADD, MUL):
        rhs = f"{g.op} g{g.a} g{g.b}"
    elif g.op == PROJ:
        rhs = f"proj x{g.var} {g.bit} g{g.a}"
    else:
        rhs = f"{g.op} x{g.var} g{g.a}"
    return f"g{i} = {rhs}"


def format_circuit(c: Circuit) -> str:
    lines = [f"vars {c.nvars}"]
    lines.extend(format_gate(i, g) for i, g in enumerate(c.gates))
    lines.append("outputs " + " ".join(f"g{o}" for o in c.outputs))
    return "\n".join(lines) + "\n"


def parse_circuit(text: str) -> Circuit:
    nvars = None
    gates: List[Gate] = []
    labels: Dict[str, int] = {}
    outputs = None
    last_line = 0

    def ref(tok: str, no: int) -> int:
        if not _LABEL.match(tok):
            raise CircuitFormatError(no, f"expected a gate label, got {tok!r}")
        if tok not in labels:
            raise CircuitFormatError(no, f"gate {tok} used before definition")
        return labels[tok]

    def var(tok: str, no: int) -> int:
        m = _VAR.match(tok)
        if not m:
            raise CircuitFormatError(no, f"expected a variable x<k>, got {tok!r}")
        k = int(m.group(1))
        if not 1 <= k <= nvars:
            raise CircuitFormatError(no, f"variable {tok} outside x1..x{nvars}")
        return k

    for no, raw in enumerate(text.splitlines(), start=1):
        last_line = no
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if nvars is None:
            if len(toks) != 2 or toks[0] != "vars" or not toks[1].isdigit():
                raise CircuitFormatError(no, "expected header `vars n`")
            nvars = int(toks[1])
            continue
        if outputs is not None:
            raise CircuitFormatError(no, "content after `outputs` line")
        if toks[0] == "outputs":
            if len(toks) < 2:
                raise CircuitFormatError(no, "`outputs` needs at least one gate")
            outputs = [ref(t, no) for t in toks[1:]]
            continue
        if len(toks) < 3 or toks[1] != "=":
            raise CircuitFormatError(no, "expected `g<i> = <gate>`")
        label = toks[0]
        if not _LABEL.match(label):
            raise CircuitFormatError(no, f"bad gate label {label!r}")
        if label in labels:
            raise CircuitFormatError(no, f"gate {label} defined twice")
        op, args = toks[2], toks[3:]
        arity = {INPUT: 1, ONE: 0, MINUS_ONE: 0, CDIV: 2, ADD: 2, MUL: 2,
                 PROJ: 3, SUM: 2, PROD: 2}
        if op not in arity:
            raise CircuitFormatError(no, f"unknown gate kind {op!r}")
        if len(args) != arity[op]:
            raise CircuitFormatError(no, f"`{op}` takes {arity[op]} arguments, got {len(args)}")
        if op == INPUT:
            g = Gate(INPUT, var=var(args[0], no))
        elif op in (ONE, MINUS_ONE):
            g = Gate(op)
        elif op in (CDIV, ADD, MUL):
            g = Gate(op, ref(args[0], no), ref(args[1], no))
        elif op == PROJ:
            if args[1] not in ("0", "1"):
                raise CircuitFormatError(no, f"projection bit must be 0 or 1, got {args[1]!r}")
            g = Gate(PROJ, ref(args[2], no), var=var(args[0], no), bit=int(args[1]))
        else:
            g = Gate(op, ref(args[1], no), var=var(args[0], no))
        labels[label] = len(gates)
        gates.append(g)
    if nvars is None:
        raise CircuitFormatError(max(last_line, 1), "missing header `vars n`")
    if outputs is None:
        raise CircuitFormatError(max(last_line, 1), "missing `outputs` line")
    c = Circuit(nvars, gates, outputs)
    err = find_violation(c)
    if err is not None:
        raise CircuitFormatError(max(last_line, 1), str(err))
    return c


__all__ = ["CircuitFormatError", "CircuitError", "format_circuit", "parse_circuit"]
