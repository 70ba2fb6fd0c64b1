"""Incremental circuit construction with structural sharing and subcircuit inlining."""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence

from .ir import (ADD, CDIV, INPUT, MINUS_ONE, MUL, ONE, PROD, PROJ, SUM, Circuit, Gate,
                 Instance, validate)


class Builder:
    """Append-only gate list. Identical gates are shared unless emitted inside `inline`."""

    def __init__(self, nvars: int):
        self.nvars = nvars
        self.gates: List[Gate] = []
        self._cache: Dict[Gate, int] = {}
        self._const: Dict[object, int] = {}
        self.instances: List[Instance] = []
        self._open: List[tuple] = []

    # ---------------------------------------------------------------- core
    def _emit(self, g: Gate, share: bool = True) -> int:
        if share:
            hit = self._cache.get(g)
            if hit is not None:
                return hit
        idx = len(self.gates)
        self.gates.append(g)
        self._cache.setdefault(g, idx)
        return idx

    def new_var(self) -> int:
        self.nvars += 1
        return self.nvars

    def input(self, var: int) -> int:
        if not 1 <= var <= self.nvars:
            raise ValueError(f"x{var} outside 1..{self.nvars}")
        return self._emit(Gate(INPUT, var=var))

    def one(self) -> int:
        return self._emit(Gate(ONE))

    def minus_one(self) -> int:
        return self._emit(Gate(MINUS_ONE))

    def zero(self) -> int:
        return self.add(self.one(), self.minus_one())

    def add(self, a: int, b: int) -> int:
        return self._emit(Gate(ADD, a, b))

    def mul(self, a: int, b: int) -> int:
        return self._emit(Gate(MUL, a, b))

    def cdiv(self, a: int, b: int) -> int:
        return self._emit(Gate(CDIV, a, b))

    def proj(self, var: int, bit: int, a: int) -> int:
        return self._emit(Gate(PROJ, a, var=var, bit=bit))

    def sum(self, var: int, a: int) -> int:
        return self._emit(Gate(SUM, a, var=var))

    def prod(self, var: int, a: int) -> int:
        return self._emit(Gate(PROD, a, var=var))

    # ---------------------------------------------------------------- derived
    def neg(self, a: int) -> int:
        return self.mul(self.minus_one(), a)

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def one_minus(self, a: int) -> int:
        return self.add(self.one(), self.neg(a))

    def double(self, a: int) -> int:
        return self.add(a, a)

    def const(self, value) -> int:
        """Integer or rational constant from 1 and -1 by doubling; rationals use a division gate."""
        value = Fraction(value)
        key = value
        if key in self._const:
            return self._const[key]
        if value.denominator != 1:
            g = self.cdiv(self.const(value.numerator), self.const(value.denominator))
        else:
            n = value.numerator
            if n == 0:
                g = self.zero()
            else:
                unit = self.one() if n > 0 else self.minus_one()
                bits = bin(abs(n))[3:]
                g = unit
                for bit in bits:
                    g = self.add(g, g)
                    if bit == "1":
                        g = self.add(g, unit)
        self._const[key] = g
        return g

    def bit_const(self, bit: int) -> int:
        return self.one() if bit else self.zero()

    def add_list(self, items: Sequence[int]) -> int:
        items = list(items)
        if not items:
            return self.zero()
        while len(items) > 1:
            nxt = [self.add(items[i], items[i + 1]) for i in range(0, len(items) - 1, 2)]
            if len(items) % 2:
                nxt.append(items[-1])
            items = nxt
        return items[0]

    def mul_list(self, items: Sequence[int]) -> int:
        items = list(items)
        if not items:
            return self.one()
        while len(items) > 1:
            nxt = [self.mul(items[i], items[i + 1]) for i in range(0, len(items) - 1, 2)]
            if len(items) % 2:
                nxt.append(items[-1])
            items = nxt
        return items[0]

    def power(self, a: int, k: int) -> int:
        """a**k by square-and-multiply."""
        if k < 0:
            raise ValueError("negative power")
        if k == 0:
            return self.one()
        result: Optional[int] = None
        base = a
        while k:
            if k & 1:
                result = base if result is None else self.mul(result, base)
            k >>= 1
            if k:
                base = self.mul(base, base)
        return result

    def sum_over(self, variables: Sequence[int], a: int) -> int:
        """Nested summation gates; the first variable ends up outermost."""
        for v in reversed(list(variables)):
            a = self.sum(v, a)
        return a

    def proj_all(self, assignment: Mapping[int, int], a: int) -> int:
        for v, bit in assignment.items():
            a = self.proj(v, bit, a)
        return a

    # ---------------------------------------------------------------- instances
    def begin_instance(self, tag: str):
        self._open.append((tag, len(self.gates)))

    def end_instance(self, output: int):
        tag, start = self._open.pop()
        end = len(self.gates) - 1
        if end < start:
            raise ValueError(f"instance {tag!r} emitted no gates")
        self.instances.append(Instance(tag, start, end, output))

    def inline(self, donor: Circuit, wiring: Mapping[int, int] | None = None,
               var_map: Mapping[int, int] | None = None, tag: str | None = None) -> List[int]:
        """Copy `donor` into this circuit as one contiguous block.

        `wiring` maps donor variables to host gate ids; other donor variables
        are renamed through `var_map` (identity by default). Returns the host
        ids of the donor's outputs.
        """
        wiring = dict(wiring or {})
        var_map = dict(var_map or {})
        for v in wiring:
            if not 1 <= v <= donor.nvars:
                raise ValueError(f"wiring names x{v}, donor has {donor.nvars} variables")
        for h in wiring.values():
            if not 0 <= h < len(self.gates):
                raise ValueError(f"wiring target g{h} does not exist yet")
        start = len(self.gates)
        remap: Dict[int, int] = {}
        for i, g in enumerate(donor.gates):
            if g.op == INPUT and g.var in wiring:
                remap[i] = wiring[g.var]
                continue
            if g.op in (INPUT, PROJ, SUM, PROD):
                if g.var in wiring:
                    raise ValueError(f"donor binds wired variable x{g.var}")
                nv = var_map.get(g.var, g.var)
                if not 1 <= nv <= self.nvars:
                    raise ValueError(f"donor variable x{g.var} maps outside the host")
                g = g._replace(var=nv)
            g = g._replace(a=remap.get(g.a, -1), b=remap.get(g.b, -1))
            remap[i] = self._emit(g, share=False)
        end = len(self.gates) - 1
        for inst in donor.instances:
            inside = [remap[i] for i in range(inst.start, inst.end + 1)
                      if remap.get(i, -1) >= start]
            if inside:
                self.instances.append(Instance(inst.tag, inside[0], inside[-1], remap[inst.output]))
        outs = [remap[o] for o in donor.outputs]
        if tag is not None:
            if end < start:
                raise ValueError("inlined donor produced no gates")
            self.instances.append(Instance(tag, start, end, outs[0]))
        return outs

    def build(self, outputs: Sequence[int], check: bool = True) -> Circuit:
        c = Circuit(self.nvars, tuple(self.gates), tuple(outputs), tuple(self.instances))
        return validate(c) if check else c


def splice(host: Circuit, socket: int, donor: Circuit, wiring: Mapping[int, object],
           tag: str = "donor") -> Circuit:
    """Replace gate `socket` of `host` by the single output of `donor`.

    `wiring` maps every donor variable to either a host gate id (int) or a
    host variable given as the string `x<k>`. Gates of the host that precede
    the socket keep their indices; the donor block is inserted just before it.
    """
    if len(donor.outputs) != 1:
        raise ValueError("donor must have exactly one output")
    if not 0 <= socket < len(host.gates):
        raise ValueError(f"socket g{socket} does not exist")
    if set(wiring) != set(range(1, donor.nvars + 1)):
        raise ValueError(f"wiring must cover donor variables 1..{donor.nvars}, got {sorted(wiring)}")
    b = Builder(host.nvars)
    remap: Dict[int, int] = {}
    gate_wiring = {}
    var_map = {}
    for v, target in wiring.items():
        if isinstance(target, str):
            var_map[v] = int(target.lstrip("x"))
        else:
            if target >= socket:
                raise ValueError(f"wiring target g{target} does not precede the socket")
            gate_wiring[v] = target
    for i, g in enumerate(host.gates):
        if i == socket:
            wired = {v: remap[t] for v, t in gate_wiring.items()}
            remap[i] = b.inline(donor, wired, var_map, tag=tag)[0]
            continue
        g = g._replace(a=remap.get(g.a, -1), b=remap.get(g.b, -1))
        remap[i] = b._emit(g, share=False)
    for inst in host.instances:
        inside = [remap[i] for i in range(inst.start, inst.end + 1) if i in remap]
        if inside:
            b.instances.append(Instance(inst.tag, min(inside), max(inside), remap[inst.output]))
    return b.build([remap[o] for o in host.outputs])
