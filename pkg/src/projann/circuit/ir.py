"""Gates, circuits, structural checks and size accounting."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, NamedTuple, Optional, Sequence, Tuple

INPUT, ONE, MINUS_ONE, CDIV, ADD, MUL, PROJ, SUM, PROD = (
    "input", "one", "minusone", "cdiv", "add", "mul", "proj", "sum", "prod")

BINARY = (CDIV, ADD, MUL)
BINDERS = (PROJ, SUM, PROD)
LEAVES = (INPUT, ONE, MINUS_ONE)
ALL_OPS = LEAVES + BINARY + BINDERS


class Gate(NamedTuple):
    """One gate. `a`/`b` are child indices, `var` a 1-based variable id, `bit` 0/1 for proj."""
    op: str
    a: int = -1
    b: int = -1
    var: int = 0
    bit: int = 0

    @property
    def children(self) -> Tuple[int, ...]:
        if self.op in BINARY:
            return (self.a, self.b)
        if self.op in BINDERS:
            return (self.a,)
        return ()

    @property
    def fan_in(self) -> int:
        return len(self.children)


class Instance(NamedTuple):
    """A contiguous block of gates produced by inlining a named subcircuit."""
    tag: str
    start: int
    end: int          # inclusive
    output: int       # gate index of the block's (first) output


class CircuitError(ValueError):
    """A structural violation; `kind` names it."""

    def __init__(self, kind: str, message: str, gate: int | None = None):
        super().__init__(f"{kind}: {message}")
        self.kind = kind
        self.gate = gate


@dataclass(frozen=True)
class Circuit:
    nvars: int
    gates: Tuple[Gate, ...]
    outputs: Tuple[int, ...]
    instances: Tuple[Instance, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "instances", tuple(self.instances))

    @property
    def size(self) -> int:
        return size(self)

    def __len__(self):
        return len(self.gates)

    def count_instances(self, tag: str) -> int:
        return sum(1 for inst in self.instances if inst.tag == tag)

    def with_outputs(self, outputs: Sequence[int]) -> "Circuit":
        return Circuit(self.nvars, self.gates, tuple(outputs), self.instances)


def size(c: Circuit) -> int:
    """Wire count: the sum of gate fan-ins."""
    return sum(g.fan_in for g in c.gates)


def find_violation(c: Circuit) -> Optional[CircuitError]:
    """First structural problem, or None when the circuit is well formed."""
    if c.nvars < 0:
        return CircuitError("arity", "negative variable count")
    const = [False] * len(c.gates)
    for i, g in enumerate(c.gates):
        if g.op not in ALL_OPS:
            return CircuitError("unknown-op", f"gate g{i} has unknown operation {g.op!r}", i)
        for ch in g.children:
            if not isinstance(ch, int) or ch < 0:
                return CircuitError("dangling", f"gate g{i} references a missing gate", i)
            if ch >= i:
                return CircuitError("order", f"gate g{i} references g{ch}, which does not precede it", i)
        if g.op in (INPUT,) + BINDERS:
            if not 1 <= g.var <= c.nvars:
                return CircuitError("variable", f"gate g{i} uses x{g.var} outside 1..{c.nvars}", i)
        if g.op == PROJ and g.bit not in (0, 1):
            return CircuitError("bit", f"gate g{i} projects to {g.bit}, not 0 or 1", i)
        if g.op in (ONE, MINUS_ONE):
            const[i] = True
        elif g.op in (ADD, MUL):
            const[i] = const[g.a] and const[g.b]
        elif g.op == CDIV:
            if not (const[g.a] and const[g.b]):
                return CircuitError("constancy", f"division gate g{i} has a variable operand", i)
            const[i] = True
        elif g.op in BINDERS:
            const[i] = const[g.a]
    for o in c.outputs:
        if not 0 <= o < len(c.gates):
            return CircuitError("output", f"output g{o} does not exist")
    if c.gates and not c.outputs:
        return CircuitError("output", "circuit has no outputs")
    return None


def validate(c: Circuit) -> Circuit:
    err = find_violation(c)
    if err is not None:
        raise err
    return c


def constant_gates(c: Circuit) -> List[bool]:
    """Which gates compute variable-free values (binders count as variable-free if the child is)."""
    const = [False] * len(c.gates)
    for i, g in enumerate(c.gates):
        if g.op in (ONE, MINUS_ONE, CDIV):
            const[i] = True
        elif g.op in (ADD, MUL):
            const[i] = const[g.a] and const[g.b]
        elif g.op in BINDERS:
            const[i] = const[g.a]
    return const


def constant_free_check(c: Circuit) -> bool:
    """True iff constants are built only from 1, -1 and constant-by-constant division.

    With this gate set that is true of every well-formed circuit; the check
    exists so callers can assert it after transformations.
    """
    return find_violation(c) is None and all(g.op in ALL_OPS for g in c.gates)


def is_projection_free(c: Circuit) -> bool:
    return all(g.op not in BINDERS for g in c.gates)


def vars_below(c: Circuit) -> List[FrozenSet[int]]:
    """Variables read by some input gate reachable from each gate."""
    out: List[FrozenSet[int]] = []
    empty: FrozenSet[int] = frozenset()
    for g in c.gates:
        if g.op == INPUT:
            out.append(frozenset((g.var,)))
        elif g.op in BINARY:
            a, b = out[g.a], out[g.b]
            out.append(a if b <= a else (b if a <= b else a | b))
        elif g.op in BINDERS:
            out.append(out[g.a])
        else:
            out.append(empty)
    return out


def free_vars(c: Circuit) -> List[FrozenSet[int]]:
    """Variables a gate's value depends on once binders are accounted for."""
    out: List[FrozenSet[int]] = []
    empty: FrozenSet[int] = frozenset()
    for g in c.gates:
        if g.op == INPUT:
            out.append(frozenset((g.var,)))
        elif g.op in BINARY:
            out.append(out[g.a] | out[g.b])
        elif g.op in BINDERS:
            out.append(out[g.a] - {g.var})
        else:
            out.append(empty)
    return out


def degree_bounds(c: Circuit) -> List[int]:
    """Syntactic upper bound on the total degree of every gate."""
    deg: List[int] = []
    for g in c.gates:
        if g.op == INPUT:
            deg.append(1)
        elif g.op in (ONE, MINUS_ONE, CDIV):
            deg.append(0)
        elif g.op == ADD:
            deg.append(max(deg[g.a], deg[g.b]))
        elif g.op == MUL:
            deg.append(deg[g.a] + deg[g.b])
        elif g.op in (PROJ, SUM):
            deg.append(deg[g.a])
        else:
            deg.append(2 * deg[g.a])
    return deg


def var_degree_bounds(c: Circuit, var: int) -> List[int]:
    """Syntactic upper bound on each gate's degree in one variable."""
    deg: List[int] = []
    for g in c.gates:
        if g.op == INPUT:
            deg.append(1 if g.var == var else 0)
        elif g.op in (ONE, MINUS_ONE, CDIV):
            deg.append(0)
        elif g.op == ADD:
            deg.append(max(deg[g.a], deg[g.b]))
        elif g.op == MUL:
            deg.append(deg[g.a] + deg[g.b])
        elif g.var == var:
            deg.append(0)
        elif g.op == PROD:
            deg.append(2 * deg[g.a])
        else:
            deg.append(deg[g.a])
    return deg


def reachable(c: Circuit, roots: Sequence[int] | None = None) -> List[bool]:
    seen = [False] * len(c.gates)
    stack = list(c.outputs if roots is None else roots)
    while stack:
        i = stack.pop()
        if seen[i]:
            continue
        seen[i] = True
        stack.extend(c.gates[i].children)
    return seen


def prune(c: Circuit) -> Circuit:
    """Drop gates no output depends on. Instance annotations are remapped or dropped."""
    keep = reachable(c)
    remap: Dict[int, int] = {}
    gates: List[Gate] = []
    for i, g in enumerate(c.gates):
        if not keep[i]:
            continue
        remap[i] = len(gates)
        gates.append(g._replace(a=remap.get(g.a, -1), b=remap.get(g.b, -1)))
    insts = []
    for inst in c.instances:
        inside = [remap[i] for i in range(inst.start, inst.end + 1) if i in remap]
        if inside and inst.output in remap:
            insts.append(Instance(inst.tag, inside[0], inside[-1], remap[inst.output]))
    return Circuit(c.nvars, gates, [remap[o] for o in c.outputs], insts)
