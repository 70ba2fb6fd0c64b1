"""Bit-streaming integer arithmetic with metered workspace.

Integers are sign-magnitude bit oracles: index 0 is the sign, indices 1..W
are magnitude bits from most to least significant, with W = 2**s. Each
derived oracle answers a bit query by re-querying its inputs and never stores
an input or the result; the only state it keeps are a few counters and bits,
which it charges to a WorkspaceMeter for the duration of the query.

Carries are found without scanning up from the least significant bit: the
carry into position k equals the common bit at the highest position j < k
where both addends agree (a generate or kill), or 0 if there is none.
"""

from __future__ import annotations

from math import ceil, log2
from typing import List, Sequence


class MagnitudeBoundError(ArithmeticError):
    """A result does not fit in the declared number of magnitude bits."""


class WorkspaceMeter:
    """Tracks auxiliary bits held by active queries (inputs and outputs are not counted)."""

    def __init__(self):
        self.current = 0
        self.peak = 0
        self.queries = 0

    def reset(self):
        self.current = 0
        self.peak = 0
        self.queries = 0

    def alloc(self, bits: int):
        self.current += bits
        if self.current > self.peak:
            self.peak = self.current

    def free(self, bits: int):
        self.current -= bits
        if self.current < 0:
            raise RuntimeError("workspace released twice")


_NULL = WorkspaceMeter()


def counter_bits(limit: int) -> int:
    """Bits of a counter ranging over 0..limit."""
    return max(1, int(limit).bit_length())


class BitOracle:
    """Base class: subclasses implement `_bit(i, meter)` for 0 <= i <= W."""

    def __init__(self, s: int, width: int | None = None):
        if s < 0:
            raise ValueError("s must be nonnegative")
        self.s = s
        # internal nodes may use a narrower significant width than 2^s
        self.width = (1 << s) if width is None else width
        if not 1 <= self.width <= (1 << s):
            raise ValueError(f"width {self.width} outside 1..2^{s}")

    def query(self, i: int, meter: WorkspaceMeter | None = None) -> int:
        meter = meter if meter is not None else _NULL
        meter.queries += 1
        if i < 0:
            raise IndexError("negative bit index")
        if i > self.width:
            return 0
        return self._bit(i, meter)

    def mag(self, k: int, meter: WorkspaceMeter) -> int:
        """Magnitude bit of weight 2^k (0 beyond the width)."""
        if k < 0 or k >= self.width:
            return 0
        return self.query(self.width - k, meter)

    def _bit(self, i: int, meter: WorkspaceMeter) -> int:
        raise NotImplementedError

    def to_int(self, meter: WorkspaceMeter | None = None) -> int:
        """Read every bit (test and tabulation helper; keeps the result in memory)."""
        value = 0
        for i in range(1, self.width + 1):
            value = 2 * value + self.query(i, meter)
        return -value if self.query(0, meter) else value


class IntOracle(BitOracle):
    """Input oracle over a Python integer."""

    def __init__(self, value: int, s: int):
        super().__init__(s)
        if abs(value) >= (1 << self.width):
            raise MagnitudeBoundError(f"|{value}| needs more than {self.width} bits")
        self.value = value

    def _bit(self, i, meter):
        if i == 0:
            return 1 if self.value < 0 else 0
        return (abs(self.value) >> (self.width - i)) & 1


def from_int(value: int, s: int | None = None) -> IntOracle:
    if s is None:
        s = 0
        while abs(value) >= (1 << (1 << s)):
            s += 1
    return IntOracle(value, s)


class ZeroOracle(BitOracle):
    def _bit(self, i, meter):
        return 0


def _is_zero(x: BitOracle, meter: WorkspaceMeter) -> bool:
    meter.alloc(counter_bits(x.width))
    try:
        for k in range(x.width):
            if x.mag(k, meter):
                return False
        return True
    finally:
        meter.free(counter_bits(x.width))


def _compare_mag(x: BitOracle, y: BitOracle, width: int, meter: WorkspaceMeter) -> int:
    """Sign of |x| - |y| by scanning from the top."""
    meter.alloc(counter_bits(width))
    try:
        for k in range(width - 1, -1, -1):
            a, b = x.mag(k, meter), y.mag(k, meter)
            if a != b:
                return 1 if a else -1
        return 0
    finally:
        meter.free(counter_bits(width))


def _carry_in(x: BitOracle, y: BitOracle, k: int, meter: WorkspaceMeter) -> int:
    """Carry into position k of |x| + |y|."""
    meter.alloc(counter_bits(k) + 2)
    try:
        for j in range(k - 1, -1, -1):
            a, b = x.mag(j, meter), y.mag(j, meter)
            if a == b:
                return a
        return 0
    finally:
        meter.free(counter_bits(k) + 2)


def _borrow_in(x: BitOracle, y: BitOracle, k: int, meter: WorkspaceMeter) -> int:
    """Borrow into position k of |x| - |y| (with |x| >= |y|)."""
    meter.alloc(counter_bits(k) + 2)
    try:
        for j in range(k - 1, -1, -1):
            a, b = x.mag(j, meter), y.mag(j, meter)
            if a != b:
                return b
        return 0
    finally:
        meter.free(counter_bits(k) + 2)


class NegOracle(BitOracle):
    def __init__(self, x: BitOracle):
        super().__init__(x.s)
        self.x = x

    def _bit(self, i, meter):
        if i:
            return self.x.query(i, meter)
        if _is_zero(self.x, meter):
            return 0
        return 1 - self.x.query(0, meter)


class AddOracle(BitOracle):
    """x + y in sign-magnitude with s result bits; overflow raises on any query."""

    def __init__(self, x: BitOracle, y: BitOracle, s: int | None = None,
                 width: int | None = None):
        super().__init__(max(x.s, y.s) if s is None else s, width)
        self.x, self.y = x, y
        self._checked = False   # the bound check runs on the first query only
        self._cached = None

    def _plan(self, meter):
        """(mode, sign) where mode is 'add', 'xy' (|x|-|y|) or 'yx'.

        The plan is computed on the first query and kept: three persistent bits,
        charged to the meter once, instead of a magnitude comparison per query.
        """
        if self._cached is None:
            self._cached = self._compute_plan(meter)
            meter.alloc(3)
        return self._cached

    def _compute_plan(self, meter):
        sx, sy = self.x.query(0, meter), self.y.query(0, meter)
        if sx == sy:
            return "add", sx
        c = _compare_mag(self.x, self.y, max(self.x.width, self.y.width), meter)
        if c >= 0:
            return "xy", (sx if c > 0 else 0)
        return "yx", sy

    def _mag_bit(self, mode, k, meter):
        if mode == "add":
            return self.x.mag(k, meter) ^ self.y.mag(k, meter) ^ _carry_in(self.x, self.y, k, meter)
        a, b = (self.x, self.y) if mode == "xy" else (self.y, self.x)
        return a.mag(k, meter) ^ b.mag(k, meter) ^ _borrow_in(a, b, k, meter)

    def _bit(self, i, meter):
        W = self.width
        meter.alloc(3)
        try:
            mode, sign = self._plan(meter)
            if not self._checked:
                # a nonzero bit at or above position W violates the declared bound
                top = max(self.x.width, self.y.width) + (1 if mode == "add" else 0)
                for k in range(W, top):
                    if self._mag_bit(mode, k, meter):
                        raise MagnitudeBoundError(f"sum needs more than {W} magnitude bits")
                self._checked = True
            if i == 0:
                if mode == "add" and sign and _is_zero(self.x, meter) and _is_zero(self.y, meter):
                    return 0
                return sign
            return self._mag_bit(mode, W - i, meter)
        finally:
            meter.free(3)


def stream_add(x: BitOracle, y: BitOracle, s: int | None = None) -> BitOracle:
    return AddOracle(x, y, s)


def stream_sub(x: BitOracle, y: BitOracle, s: int | None = None) -> BitOracle:
    return AddOracle(x, NegOracle(y), s)


def _width_bits(width: int) -> int:
    return max(0, ceil(log2(width)))


def stream_list_sum(items: Sequence[BitOracle], s: int | None = None) -> BitOracle:
    """Balanced tree of additions; each level holds O(s) bits during a query.

    Inner nodes carry one more significant bit than their widest child; the
    root answers with the declared 2^s bits.
    """
    items = list(items)
    if s is None:
        need = max((x.width for x in items), default=1) + ceil(log2(max(1, len(items))))
        s = _width_bits(need)
    if not items:
        return ZeroOracle(s)
    if len(items) == 1:
        return AddOracle(items[0], ZeroOracle(0), s)
    while len(items) > 2:
        nxt = []
        for t in range(0, len(items) - 1, 2):
            w = min(1 << s, max(items[t].width, items[t + 1].width) + 1)
            nxt.append(AddOracle(items[t], items[t + 1], _width_bits(w), w))
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return AddOracle(items[0], items[1], s)


class MulOracle(BitOracle):
    """School multiplication: column sums swept from the low end, keeping only the carry."""

    def __init__(self, x: BitOracle, y: BitOracle, s: int | None = None):
        super().__init__(max(x.s, y.s) + 1 if s is None else s)
        self.x, self.y = x, y
        self._checked = False

    def _column(self, k, meter):
        """Number of pairs (a, b) with a + b = k and both bits set."""
        total = 0
        for a in range(max(0, k - self.y.width + 1), min(k, self.x.width - 1) + 1):
            if self.x.mag(a, meter) and self.y.mag(k - a, meter):
                total += 1
        return total

    def _mag_bit(self, k, meter):
        """Bit k of |x|*|y|, with the carry recomputed from column 0."""
        wx, wy = self.x.width, self.y.width
        # column and inner counters, running carry, column total
        bits = 2 * counter_bits(wx + wy) + 2 * counter_bits(2 * min(wx, wy))
        meter.alloc(bits)
        try:
            carry = 0
            for col in range(k):
                carry = (self._column(col, meter) + carry) >> 1
            return (self._column(k, meter) + carry) & 1
        finally:
            meter.free(bits)

    def _bit(self, i, meter):
        W = self.width
        if i == 0:
            if _is_zero(self.x, meter) or _is_zero(self.y, meter):
                return 0
            return self.x.query(0, meter) ^ self.y.query(0, meter)
        if not self._checked:
            for k in range(W, self.x.width + self.y.width):
                if self._mag_bit(k, meter):
                    raise MagnitudeBoundError(f"product needs more than {W} magnitude bits")
            self._checked = True
        return self._mag_bit(W - i, meter)


def stream_mul(x: BitOracle, y: BitOracle, s: int | None = None) -> BitOracle:
    return MulOracle(x, y, s)


def workspace_bounds(s: int, count: int = 2) -> dict:
    """Engineering ceilings asserted by the test suite."""
    return {"add": 16 * max(1, s), "sub": 16 * max(1, s),
            "list_sum": 16 * max(1, ceil(log2(max(2, count)))) * max(1, s),
            "mul": 64 * max(1, s) ** 3}


def read_all(x: BitOracle, meter: WorkspaceMeter | None = None) -> List[int]:
    return [x.query(i, meter) for i in range(x.width + 1)]
