"""Constant-free gadget circuits: comparators, increment, powering, monomial selection.

Bit-vectors are lists ordered most significant bit first. Builder-level
helpers accept either gate ids or the constant markers `BIT0` / `BIT1`, which
lets comparisons against fixed integers fold away without extra gates.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .circuit.builder import Builder
from .circuit.ir import ADD, CDIV, INPUT, MINUS_ONE, MUL, ONE, Circuit, is_projection_free


class ConstBit:
    __slots__ = ("value",)

    def __init__(self, value: int):
        self.value = value

    def __repr__(self):
        return f"BIT{self.value}"


BIT0 = ConstBit(0)
BIT1 = ConstBit(1)
Bit = Union[int, ConstBit]


def const_bits(value: int, width: int) -> List[ConstBit]:
    if value < 0 or value >= (1 << width):
        raise ValueError(f"{value} does not fit in {width} bits")
    return [BIT1 if (value >> (width - 1 - t)) & 1 else BIT0 for t in range(width)]


def bit_width(count: int) -> int:
    """Bits needed to index `count` items (at least one)."""
    return max(1, (count - 1).bit_length())


def gate(b: Builder, x: Bit) -> int:
    if isinstance(x, ConstBit):
        return b.one() if x.value else b.zero()
    return x


def b_not(b: Builder, x: Bit) -> Bit:
    if isinstance(x, ConstBit):
        return BIT0 if x.value else BIT1
    return b.one_minus(x)


def b_and(b: Builder, x: Bit, y: Bit) -> Bit:
    if isinstance(x, ConstBit):
        return y if x.value else BIT0
    if isinstance(y, ConstBit):
        return x if y.value else BIT0
    return b.mul(x, y)


def b_xnor(b: Builder, x: Bit, y: Bit) -> Bit:
    """1 - x - y + 2xy."""
    if isinstance(x, ConstBit):
        return y if x.value else b_not(b, y)
    if isinstance(y, ConstBit):
        return x if y.value else b_not(b, x)
    xy = b.mul(x, y)
    return b.add(b.add(b.one(), b.neg(b.add(x, y))), b.add(xy, xy))


def b_xor(b: Builder, x: Bit, y: Bit) -> Bit:
    """x + y - 2xy."""
    if isinstance(x, ConstBit):
        return b_not(b, y) if x.value else y
    if isinstance(y, ConstBit):
        return b_not(b, x) if y.value else x
    xy = b.mul(x, y)
    return b.add(b.add(x, y), b.neg(b.add(xy, xy)))


def b_or(b: Builder, x: Bit, y: Bit) -> Bit:
    return b_not(b, b_and(b, b_not(b, x), b_not(b, y)))


def b_select(b: Builder, s: Bit, x: int, otherwise: int | None = None) -> int:
    """s*x + (1-s)*otherwise, where `otherwise` defaults to the constant 1."""
    if isinstance(s, ConstBit):
        if s.value:
            return x
        return b.one() if otherwise is None else otherwise
    alt = b.one() if otherwise is None else otherwise
    return b.add(b.mul(s, x), b.mul(b.one_minus(s), alt))


# ---------------------------------------------------------------- comparators

def eq_bits(b: Builder, xs: Sequence[Bit], ys: Sequence[Bit]) -> Bit:
    if len(xs) != len(ys):
        raise ValueError("bit-width mismatch")
    acc: Bit = BIT1
    for x, y in zip(xs, ys):
        acc = b_and(b, acc, b_xnor(b, x, y))
    return acc


def gt_bits(b: Builder, xs: Sequence[Bit], ys: Sequence[Bit]) -> Bit:
    """Sum over positions t of [x, y agree above t] * x_t * (1 - y_t)."""
    if len(xs) != len(ys):
        raise ValueError("bit-width mismatch")
    prefix: Bit = BIT1
    terms: List[Bit] = []
    for x, y in zip(xs, ys):
        t = b_and(b, prefix, b_and(b, x, b_not(b, y)))
        if not (isinstance(t, ConstBit) and t.value == 0):
            terms.append(t)
        prefix = b_and(b, prefix, b_xnor(b, x, y))
        if isinstance(prefix, ConstBit) and prefix.value == 0:
            break
    if not terms:
        return BIT0
    if any(isinstance(t, ConstBit) for t in terms):
        # a constant-1 term means the comparison is decided; others are then 0
        return BIT1
    return b.add_list(terms)


def lt_bits(b: Builder, xs: Sequence[Bit], ys: Sequence[Bit]) -> Bit:
    return gt_bits(b, ys, xs)


def lt_const(b: Builder, xs: Sequence[Bit], bound: int) -> Bit:
    """[x < bound] for a fixed integer bound; constant 1 when the bound exceeds the range."""
    if bound >= (1 << len(xs)):
        return BIT1
    if bound <= 0:
        return BIT0
    return lt_bits(b, xs, const_bits(bound, len(xs)))


def inc_bits(b: Builder, xs: Sequence[Bit]) -> List[Bit]:
    """Bits of x + 1 modulo 2^width, via the carry chain from the low end."""
    carry: Bit = BIT1
    out: List[Bit] = [BIT0] * len(xs)
    for t in range(len(xs) - 1, -1, -1):
        out[t] = b_xor(b, xs[t], carry)
        carry = b_and(b, xs[t], carry)
    return out


def add_bits(b: Builder, xs: Sequence[Bit], ys: Sequence[Bit]) -> List[Bit]:
    """Ripple-carry sum of two MSB-first vectors; the result is one bit wider."""
    w = max(len(xs), len(ys))
    xs = [BIT0] * (w - len(xs)) + list(xs)
    ys = [BIT0] * (w - len(ys)) + list(ys)
    carry: Bit = BIT0
    out: List[Bit] = []
    for t in range(w - 1, -1, -1):
        x, y = xs[t], ys[t]
        s = b_xor(b, b_xor(b, x, y), carry)
        carry = b_or(b, b_and(b, x, y), b_and(b, carry, b_xor(b, x, y)))
        out.append(s)
    out.append(carry)
    return out[::-1]


def _inputs(b: Builder, first: int, count: int) -> List[int]:
    return [b.input(first + t) for t in range(count)]


def _finish(b: Builder, outs: Sequence[Bit]) -> Circuit:
    return b.build([gate(b, o) for o in outs])


def build_EQ(width: int) -> Circuit:
    """Variables x1..x_w hold a, x_{w+1}..x_{2w} hold b; output [a == b]."""
    if width < 1:
        raise ValueError("width must be at least 1")
    b = Builder(2 * width)
    xs, ys = _inputs(b, 1, width), _inputs(b, width + 1, width)
    return _finish(b, [eq_bits(b, xs, ys)])


def build_GT(width: int) -> Circuit:
    if width < 1:
        raise ValueError("width must be at least 1")
    b = Builder(2 * width)
    xs, ys = _inputs(b, 1, width), _inputs(b, width + 1, width)
    return _finish(b, [gt_bits(b, xs, ys)])


def build_LT(width: int) -> Circuit:
    if width < 1:
        raise ValueError("width must be at least 1")
    b = Builder(2 * width)
    xs, ys = _inputs(b, 1, width), _inputs(b, width + 1, width)
    return _finish(b, [lt_bits(b, xs, ys)])


def build_INC(width: int) -> Circuit:
    """Outputs the bits of a + 1; the all-ones input wraps to zero."""
    if width < 1:
        raise ValueError("width must be at least 1")
    b = Builder(width)
    return _finish(b, inc_bits(b, _inputs(b, 1, width)))


# ---------------------------------------------------------------- powering

def power_table(alpha: int, delta: int, m: int, L: int) -> Dict[Tuple[int, int], Circuit]:
    """Constant circuits for alpha^(2^l * delta^k), l < L, k < m, by repeated squaring."""
    table = {}
    for k in range(m):
        b = Builder(0)
        g = b.power(b.const(alpha), delta ** k)
        for l in range(L):
            table[(l, k)] = b.build([g])
            g = b.mul(g, g)
    return table


def pow_gates(b: Builder, i_bits: Sequence[Bit], base: Sequence[Sequence[int]]) -> List[int]:
    """Output k is prod_l (i_l * base[k][l] + (1 - i_l)), bit l having weight 2^l.

    `base[k][l]` are host gates holding the precomputed powers.
    """
    L = len(i_bits)
    outs = []
    for row in base:
        if len(row) < L:
            raise ValueError("power table has too few entries")
        factors = [b_select(b, i_bits[L - 1 - l], row[l]) for l in range(L)]
        outs.append(b.mul_list(factors))
    return outs


def build_pow(L: int, base_table: Mapping[Tuple[int, int], Circuit], m: int | None = None) -> Circuit:
    """Circuit in the L bits of i (MSB first) with output k equal to alpha^(i * delta^k)."""
    if m is None:
        m = 1 + max((k for (_, k) in base_table), default=-1)
    b = Builder(L)
    i_bits = _inputs(b, 1, L)
    rows = []
    for k in range(m):
        row = []
        for l in range(L):
            if (l, k) not in base_table:
                raise KeyError(f"power table lacks entry (l={l}, k={k})")
            row.append(b.inline(base_table[(l, k)])[0])
        rows.append(row)
    return b.build(pow_gates(b, i_bits, rows))


# ---------------------------------------------------------------- monomials

def mon_gates(b: Builder, xs: Sequence[int], e_bits: Sequence[Sequence[Bit]]) -> int:
    """x^e via prod_a prod_t (e_{a,t} * x_a^(2^t) + (1 - e_{a,t})); e bits MSB first."""
    factors = []
    for x, bits in zip(xs, e_bits):
        sq = x
        for t in range(len(bits) - 1, -1, -1):
            factors.append(b_select(b, bits[t], sq))
            if t:
                sq = b.mul(sq, sq)
    return b.mul_list(factors)


def build_mon(n: int, dbits: int) -> Circuit:
    """Variables x1..xn, then dbits exponent bits per coordinate; output x^e."""
    b = Builder(n + n * dbits)
    xs = _inputs(b, 1, n)
    e_bits = [_inputs(b, n + 1 + a * dbits, dbits) for a in range(n)]
    return b.build([mon_gates(b, xs, e_bits)])


def check_gates(b: Builder, e_bits: Sequence[Sequence[Bit]], d: int) -> Bit:
    """[sum of the exponent coordinates <= d]."""
    total: List[Bit] = [BIT0]
    for bits in e_bits:
        total = add_bits(b, total, bits)
    return lt_const(b, total, d + 1)


def build_check(n: int, dbits: int, d: int) -> Circuit:
    b = Builder(n * dbits)
    e_bits = [_inputs(b, 1 + a * dbits, dbits) for a in range(n)]
    return _finish(b, [check_gates(b, e_bits, d)])


# ---------------------------------------------------------------- universal template

@dataclass(frozen=True)
class UniversalTemplate:
    """U(x, y): x in variables 1..n, parameters y in n+1..n+r.

    Values h_0 = 1, h_1..h_n = x, then one product slot per multiplication:
    v_t = (sum_j yL[t,j] h_j) * (sum_j yR[t,j] h_j) over earlier values, and
    U = sum_j w_j h_j. Every value is carried as homogeneous parts of degree
    0..d, so deg_x(U) <= d, and parts above d are discarded.
    """
    n: int
    d: int
    s: int
    slots: int
    circuit: Circuit
    param_index: Dict[Tuple, int]   # ('L', t, j) / ('R', t, j) / ('w', j) -> variable id

    @property
    def r(self) -> int:
        return len(self.param_index)

    @property
    def deg_y(self) -> int:
        # slot t has y-degree 2^(t+2) - 2; the output weights add one
        return (1 << (self.slots + 1)) - 1 if self.slots else 1


def build_universal(n: int, d: int, s: int) -> UniversalTemplate:
    if min(n, d, s) < 1:
        raise ValueError("n, d, s must be positive")
    T = s // 2
    pidx: Dict[Tuple, int] = {}
    nxt = n + 1
    for t in range(T):
        for side in ("L", "R"):
            for j in range(n + 1 + t):
                pidx[(side, t, j)] = nxt
                nxt += 1
    for j in range(n + 1 + T):
        pidx[("w", j)] = nxt
        nxt += 1
    b = Builder(nxt - 1)
    zero = None

    def strat_linear(coeff_var: int, parts: List[Optional[int]]) -> List[Optional[int]]:
        y = b.input(coeff_var)
        return [None if p is None else b.mul(y, p) for p in parts]

    def strat_add(xs, ys):
        return [x if y is None else (y if x is None else b.add(x, y)) for x, y in zip(xs, ys)]

    def strat_mul(xs, ys):
        out = []
        for k in range(d + 1):
            terms = [b.mul(xs[i], ys[k - i]) for i in range(k + 1)
                     if xs[i] is not None and ys[k - i] is not None]
            out.append(b.add_list(terms) if terms else None)
        return out

    values: List[List[Optional[int]]] = [[b.one()] + [None] * d]
    for k in range(1, n + 1):
        values.append([None, b.input(k)] + [None] * (d - 1))
    for t in range(T):
        forms = []
        for side in ("L", "R"):
            acc = [None] * (d + 1)
            for j, parts in enumerate(values):
                acc = strat_add(acc, strat_linear(pidx[(side, t, j)], parts))
            forms.append(acc)
        values.append(strat_mul(*forms))
    out = [None] * (d + 1)
    for j, parts in enumerate(values):
        out = strat_add(out, strat_linear(pidx[("w", j)], parts))
    terms = [p for p in out if p is not None]
    if not terms:
        zero = b.zero()
    root = b.add_list(terms) if terms else zero
    return UniversalTemplate(n, d, s, T, b.build([root]), pidx)


def universal_witness(template: UniversalTemplate, target: Circuit) -> Dict[int, object]:
    """Parameter assignment with U(x, a) equal to the projection-free `target`.

    Each gate of the target is tracked as a linear combination of template
    values; every multiplication takes the next free slot.
    """
    if not is_projection_free(target):
        raise ValueError("witness generation needs a projection-free target")
    if target.nvars > template.n:
        raise ValueError("target uses more variables than the template")
    if len(target.outputs) != 1:
        raise ValueError("target must have one output")
    from .circuit.evaluate import evaluate
    n = template.n
    assign: Dict[int, object] = {v: 0 for v in template.param_index.values()}
    reps: List[Dict[int, object]] = []
    used = 0
    for i, g in enumerate(target.gates):
        if g.op == ONE:
            reps.append({0: 1})
        elif g.op == MINUS_ONE:
            reps.append({0: -1})
        elif g.op == INPUT:
            reps.append({g.var: 1})
        elif g.op == ADD:
            r = dict(reps[g.a])
            for j, c in reps[g.b].items():
                r[j] = r.get(j, 0) + c
            reps.append({j: c for j, c in r.items() if c})
        elif g.op == CDIV:
            sub = target.with_outputs([i])
            reps.append({0: evaluate(sub, {})[0]})
        elif g.op == MUL:
            if used >= template.slots:
                raise ValueError(f"target needs more than {template.slots} multiplications")
            for side, rep in (("L", reps[g.a]), ("R", reps[g.b])):
                for j, c in rep.items():
                    assign[template.param_index[(side, used, j)]] = c
            reps.append({n + 1 + used: 1})
            used += 1
        else:
            raise ValueError(f"unsupported gate {g.op}")
    for j, c in reps[target.outputs[0]].items():
        assign[template.param_index[("w", j)]] = c
    return assign


def grid_points(n: int, d: int) -> List[Tuple[int, ...]]:
    """I_{n,d}: points of {0..d}^n with coordinate sum at most d, in graded-lex order."""
    from .algebra.poly import monomials_glex
    pts = list(monomials_glex(n, max_total=d))
    assert len(pts) == comb(n + d, n)
    return pts
