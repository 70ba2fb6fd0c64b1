"""Exact scalars: Python ints, Fractions, and prime-field residues."""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

MERSENNE_61 = (1 << 61) - 1


def normalize(q):
    """Collapse an integral Fraction to int; leave everything else alone."""
    if isinstance(q, Fraction) and q.denominator == 1:
        return q.numerator
    return q


def parse_rational(text: str):
    """Parse `-12` or `3/4` into an int or a Fraction in lowest terms."""
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        den_i = int(den)
        if den_i == 0:
            raise ValueError(f"zero denominator in {text!r}")
        return normalize(Fraction(int(num), den_i))
    return int(text)


def format_rational(q) -> str:
    q = normalize(q)
    if isinstance(q, Fraction):
        return f"{q.numerator}/{q.denominator}"
    return str(int(q))


class Fp:
    """Element of the prime field F_p. Both operands of a binary op must share p."""

    __slots__ = ("value", "p")

    def __init__(self, value: int, p: int):
        if p < 2:
            raise ValueError("modulus must be at least 2")
        self.p = p
        if isinstance(value, Fp):
            value = value.value
        if isinstance(value, Rational) and not isinstance(value, int):
            value = Fraction(value)
            self.value = value.numerator % p * pow(value.denominator % p, -1, p) % p
        else:
            self.value = int(value) % p

    def _coerce(self, other) -> "Fp":
        if isinstance(other, Fp):
            if other.p != self.p:
                raise ValueError(f"mixed moduli {self.p} and {other.p}")
            return other
        return Fp(other, self.p)

    def __add__(self, other):
        o = self._coerce(other)
        return Fp(self.value + o.value, self.p)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return Fp(self.value - o.value, self.p)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        return Fp(self.value * o.value, self.p)

    __rmul__ = __mul__

    def __neg__(self):
        return Fp(-self.value, self.p)

    def inverse(self) -> "Fp":
        if self.value == 0:
            raise ZeroDivisionError("inverse of zero in F_p")
        return Fp(pow(self.value, -1, self.p), self.p)

    def __truediv__(self, other):
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        return Fp(pow(self.value, k, self.p), self.p)

    def __eq__(self, other):
        if isinstance(other, Fp):
            return self.p == other.p and self.value == other.value
        if isinstance(other, Rational):
            return self.value == Fp(other, self.p).value
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.p))

    def __bool__(self):
        return self.value != 0

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"Fp({self.value}, {self.p})"


def is_probable_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for n < 3.3e24, which covers every modulus we use."""
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
    for q in small:
        if n % q == 0:
            return n == q
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def previous_prime(n: int) -> int:
    """Largest prime strictly below n."""
    k = n - 1
    while k >= 2 and not is_probable_prime(k):
        k -= 1
    if k < 2:
        raise ValueError("no prime below bound")
    return k
