"""Coefficient functions of circuits with projection gates, in both directions.

circuit -> coefficient function: split C = C1 - C2 with C1, C2 monotone, then
answer a coefficient bit by a recursive streaming computation over the gates:
sums via streaming addition, Proj_{z=1} via a list sum over the powers of z,
products via convolution of streaming products.

coefficient function -> circuit: given a circuit CF(y, i) for the i-th bit of
the coefficient of x^y, rebuild the polynomial with summation gates over y and i.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from ..circuit.builder import Builder
from ..circuit.evaluate import evaluate
from ..circuit.ir import (ADD, CDIV, INPUT, MINUS_ONE, MUL, ONE, PROD, PROJ, SUM, Circuit,
                          constant_gates, prune, var_degree_bounds)
from ..gadgets import (BIT1, b_and, b_not, b_select, check_gates, const_bits, eq_bits, gate,
                       mon_gates)
from .streaming import (AddOracle, BitOracle, IntOracle, MulOracle, NegOracle, WorkspaceMeter,
                        ZeroOracle, stream_list_sum)

Exponent = Tuple[int, ...]


# ------------------------------------------------------------------ monotone split

@dataclass
class MonotoneSplit:
    """C = pos - neg; either side is None when it is the zero polynomial."""
    pos: Optional[Circuit]
    neg: Optional[Circuit]


def _const_value(c: Circuit, g: int) -> Fraction:
    return Fraction(evaluate(c.with_outputs([g]), {})[0])


def monotone_split(c: Circuit, output: int = 0) -> MonotoneSplit:
    """Two-rail rewrite: every gate becomes (P, N) with value P - N and P, N monotone.

    The rails use only one, input, add, mul and projection gates. Summation and
    production gates are expanded into their two projections. Constant
    divisions must yield integers and are replaced by their value.
    """
    b = Builder(c.nvars)
    is_const = constant_gates(c)
    rails: List[Tuple[Optional[int], Optional[int]]] = []

    def add(x, y):
        if x is None:
            return y
        if y is None:
            return x
        return b.add(x, y)

    def mul(x, y):
        if x is None or y is None:
            return None
        return b.mul(x, y)

    def proj(v, bit, x):
        return None if x is None else b.proj(v, bit, x)

    def const_rails(q: Fraction):
        if q.denominator != 1:
            raise ValueError(f"constant division yields the non-integer {q}")
        k = q.numerator
        if k == 0:
            return (None, None)
        mag = _positive_const(b, abs(k))
        return (mag, None) if k > 0 else (None, mag)

    for i, g in enumerate(c.gates):
        if g.op == INPUT:
            r = (b.input(g.var), None)
        elif g.op == ONE:
            r = (b.one(), None)
        elif g.op == MINUS_ONE:
            r = (None, b.one())
        elif g.op == CDIV:
            if not is_const[i]:
                raise ValueError(f"gate g{i}: division of a non-constant cannot be split")
            r = const_rails(_const_value(c, i))
        elif g.op == ADD:
            (pa, na), (pb, nb) = rails[g.a], rails[g.b]
            r = (add(pa, pb), add(na, nb))
        elif g.op == MUL:
            (pa, na), (pb, nb) = rails[g.a], rails[g.b]
            r = (add(mul(pa, pb), mul(na, nb)), add(mul(pa, nb), mul(na, pb)))
        elif g.op == PROJ:
            p, n = rails[g.a]
            r = (proj(g.var, g.bit, p), proj(g.var, g.bit, n))
        elif g.op == SUM:
            p, n = rails[g.a]
            r = (add(proj(g.var, 0, p), proj(g.var, 1, p)),
                 add(proj(g.var, 0, n), proj(g.var, 1, n)))
        elif g.op == PROD:
            p, n = rails[g.a]
            p0, p1 = proj(g.var, 0, p), proj(g.var, 1, p)
            n0, n1 = proj(g.var, 0, n), proj(g.var, 1, n)
            r = (add(mul(p0, p1), mul(n0, n1)), add(mul(p0, n1), mul(n0, p1)))
        else:
            raise ValueError(f"unsupported gate {g.op}")
        rails.append(r)
    pos, neg = rails[c.outputs[output]]
    gates = list(b.gates)

    def side(root):
        if root is None:
            return None
        return prune(Circuit(c.nvars, tuple(gates), (root,)))
    return MonotoneSplit(side(pos), side(neg))


def _positive_const(b: Builder, k: int) -> int:
    """k >= 1 from the constant 1 by doubling, without negative constants."""
    one = b.one()
    g = one
    for bit in bin(k)[3:]:
        g = b.add(g, g)
        if bit == "1":
            g = b.add(g, one)
    return g


# ------------------------------------------------------------------ circuit -> CF

def _s_for(bound: int) -> int:
    """Smallest s with bound < 2^(2^s)."""
    s = 0
    while bound >= (1 << (1 << s)):
        s += 1
    return s


class MonotoneCoefficients:
    """Coefficient oracles of every gate of a monotone circuit.

    All coefficients are nonnegative and bounded by the gate's value at the
    all-ones point, which fixes each oracle's declared width.
    """

    def __init__(self, c: Circuit):
        self.c = c
        n = c.nvars
        ones = {v: 1 for v in range(1, n + 1)}
        self.bound = [int(v) for v in evaluate(c, ones, outputs=list(range(len(c.gates))))]
        self.s = [_s_for(x) for x in self.bound]
        self.vdeg = {v: var_degree_bounds(c, v) for v in range(1, n + 1)}
        self._memo: Dict[Tuple[int, Exponent], BitOracle] = {}

    def oracle(self, g: int, e: Exponent) -> BitOracle:
        key = (g, e)
        hit = self._memo.get(key)
        if hit is None:
            hit = self._build(g, e)
            self._memo[key] = hit
        return hit

    def _fits(self, g: int, e: Exponent) -> bool:
        return all(x <= self.vdeg[v + 1][g] for v, x in enumerate(e))

    def _build(self, g: int, e: Exponent) -> BitOracle:
        gt = self.c.gates[g]
        s = self.s[g]
        if not self._fits(g, e):
            return ZeroOracle(0)
        if gt.op == INPUT:
            unit = tuple(1 if k + 1 == gt.var else 0 for k in range(len(e)))
            return IntOracle(1 if e == unit else 0, 0)
        if gt.op == ONE:
            return IntOracle(1 if not any(e) else 0, 0)
        if gt.op == ADD:
            return AddOracle(self.oracle(gt.a, e), self.oracle(gt.b, e), s)
        if gt.op == MUL:
            terms = []
            for ea in itertools.product(*[range(x + 1) for x in e]):
                eb = tuple(x - y for x, y in zip(e, ea))
                if self._fits(gt.a, ea) and self._fits(gt.b, eb):
                    terms.append(MulOracle(self.oracle(gt.a, ea), self.oracle(gt.b, eb), s))
            if not terms:
                return ZeroOracle(0)
            return stream_list_sum(terms, s)
        if gt.op == PROJ:
            z = gt.var - 1
            if e[z]:
                return ZeroOracle(0)
            if gt.bit == 0:
                return self.oracle(gt.a, e)
            top = self.vdeg[gt.var][gt.a]
            terms = [self.oracle(gt.a, e[:z] + (a,) + e[z + 1:]) for a in range(top + 1)]
            return stream_list_sum(terms, s)
        raise ValueError(f"gate {gt.op} is not allowed in a monotone circuit")


class CoeffFunction:
    """Phi(e, i): bit i of the coefficient of x^e, sign-magnitude with bit 0 the sign.

    Bits 1..2^b - 1 are magnitude bits from most to least significant.
    Exponents above the individual-degree bound d have coefficient 0.
    """

    def __init__(self, c: Circuit, output: int = 0):
        self.n = c.nvars
        split = monotone_split(c, output)
        self.sides = [None if side is None else MonotoneCoefficients(side)
                      for side in (split.pos, split.neg)]
        self.split = split
        s = 0
        d = 0
        for mc in self.sides:
            if mc is not None:
                root = mc.c.outputs[0]
                s = max(s, mc.s[root])
                d = max([d] + [mc.vdeg[v][root] for v in range(1, self.n + 1)])
        self.mag_s = s
        self.d = d
        self.b = s + 1              # 2^b - 1 >= 2^s magnitude bits plus the sign index
        self.meter = WorkspaceMeter()
        self._roots: Dict[Exponent, BitOracle] = {}

    @property
    def bits(self) -> int:
        return 1 << self.b

    def _oracle(self, e: Exponent) -> BitOracle:
        hit = self._roots.get(e)
        if hit is not None:
            return hit
        parts = []
        for mc in self.sides:
            parts.append(ZeroOracle(0) if mc is None else mc.oracle(mc.c.outputs[0], e))
        o = AddOracle(parts[0], NegOracle(parts[1]), self.mag_s)
        self._roots[e] = o
        return o

    def query(self, e: Sequence[int], i: int, meter: WorkspaceMeter | None = None) -> int:
        e = tuple(int(x) for x in e)
        if len(e) != self.n:
            raise ValueError(f"exponent has {len(e)} entries, expected {self.n}")
        if not 0 <= i < self.bits:
            raise IndexError(f"bit index {i} outside 0..{self.bits - 1}")
        if any(x < 0 for x in e):
            raise ValueError("negative exponent")
        if any(x > self.d for x in e):
            return 0
        meter = self.meter if meter is None else meter
        o = self._oracle(e)
        if i == 0:
            return o.query(0, meter)
        return o.mag(self.bits - 1 - i, meter)

    def coefficient(self, e: Sequence[int], meter: WorkspaceMeter | None = None) -> int:
        value = 0
        for i in range(1, self.bits):
            value = 2 * value + self.query(e, i, meter)
        return -value if self.query(e, 0, meter) else value

    def support_box(self) -> List[Exponent]:
        """Exponents that can carry a nonzero coefficient (bound variables are fixed at 0)."""
        ranges = []
        for v in range(1, self.n + 1):
            top = 0
            for mc in self.sides:
                if mc is not None:
                    top = max(top, mc.vdeg[v][mc.c.outputs[0]])
            ranges.append(range(top + 1))
        return [tuple(e) for e in itertools.product(*ranges)]


def coeff_fn_of_circuit(c: Circuit, output: int = 0) -> CoeffFunction:
    return CoeffFunction(c, output)


# ------------------------------------------------------------------ CF -> circuit

def dbits_for(d: int) -> int:
    return max(1, int(d).bit_length())


def cf_table_circuit(cf: CoeffFunction, dbits: int | None = None,
                     cbits: int | None = None) -> Tuple[Circuit, int, int]:
    """Projection-free circuit CF(y, i) tabulating every nonzero bit of `cf`.

    Variables: n blocks of dbits exponent bits (MSB first), then cbits index
    bits. Returns (circuit, dbits, cbits).
    """
    n = cf.n
    if dbits is None:
        dbits = dbits_for(cf.d)
    if cbits is None:
        cbits = cf.b
    if cbits < cf.b:
        raise ValueError(f"{cbits} index bits cannot address {cf.bits} coefficient bits")
    b = Builder(n * dbits + cbits)
    ybits = [[b.input(1 + a * dbits + t) for t in range(dbits)] for a in range(n)]
    ibits = [b.input(1 + n * dbits + t) for t in range(cbits)]
    shift = (1 << cbits) - (1 << cf.b)    # extra leading zero bits when cbits > b
    terms = []
    for e in cf.support_box():
        if any(x >= (1 << dbits) for x in e):
            raise ValueError(f"exponent {e} does not fit in {dbits} bits")
        coeff = cf.coefficient(e)
        if coeff == 0:
            continue
        ey = gate(b, _and_all(b, [eq_bits(b, ybits[a], const_bits(e[a], dbits))
                                  for a in range(n)]))
        active = [0] if coeff < 0 else []
        mag = abs(coeff)
        W = cf.bits - 1
        active += [shift + i for i in range(1, cf.bits) if (mag >> (W - i)) & 1]
        for i in active:
            sel = gate(b, eq_bits(b, ibits, const_bits(i, cbits)))
            terms.append(b.mul(ey, sel))
    out = b.add_list(terms) if terms else b.zero()
    return b.build([out]), dbits, cbits


def _and_all(b: Builder, bits):
    acc = BIT1
    for x in bits:
        acc = b_and(b, acc, x)
    return acc


def circuit_from_coeff_fn(cf_circuit: Circuit, n: int, dbits: int, cbits: int,
                          degree: int | None = None) -> Circuit:
    """f(x) = sum_y (1 - 2 CF(y, 0)) * (sum_{i != 0} 2^(W - i) CF(y, i)) * check(y) * x^y.

    W = 2^cbits - 1. Variables: x_1..x_n, then the summed y and i bits. The
    optional `degree` bound adds check(y) = [sum of exponents <= degree].
    """
    if cf_circuit.nvars != n * dbits + cbits:
        raise ValueError(f"CF circuit has {cf_circuit.nvars} variables, "
                         f"expected {n} * {dbits} + {cbits}")
    if len(cf_circuit.outputs) != 1:
        raise ValueError("CF circuit must have one output")
    total = n + n * dbits + cbits
    b = Builder(total)
    xs = [b.input(k + 1) for k in range(n)]
    yvars = [n + 1 + t for t in range(n * dbits)]
    ivars = [n + n * dbits + 1 + t for t in range(cbits)]
    cf = b.inline(cf_circuit, var_map={v: n + v for v in range(1, cf_circuit.nvars + 1)},
                  tag="CF")[0]
    ybits = [[b.input(v) for v in yvars[a * dbits:(a + 1) * dbits]] for a in range(n)]
    ibits = [b.input(v) for v in ivars]

    sign_bit = b.proj_all({v: 0 for v in ivars}, cf)
    sign = b.one_minus(b.double(sign_bit))

    # pow(i) = 2^(W - i) = prod over bit weights 2^l of (i_l ? 1 : 2^(2^l))
    factors = []
    big = b.add(b.one(), b.one())
    for l in range(cbits):
        factors.append(b_select(b, ibits[cbits - 1 - l], b.one(), big))
        big = b.mul(big, big)
    nonzero = gate(b, b_not(b, eq_bits(b, ibits, const_bits(0, cbits))))
    weighted = b.mul(b.mul(cf, nonzero), b.mul_list(factors))
    magnitude = b.sum_over(ivars, weighted)

    term = b.mul(magnitude, sign)
    if degree is not None:
        term = b.mul(term, gate(b, check_gates(b, ybits, degree)))
    term = b.mul(term, mon_gates(b, xs, ybits))
    return b.build([b.sum_over(yvars, term)])
