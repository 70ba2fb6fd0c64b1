"""Sparse multivariate polynomials with exact coefficients.

Exponent vectors are plain tuples of non-negative ints. Iteration order is
graded-lex: lower total degree first, and within one degree the vector with
the larger x1 exponent first (then x2, and so on). So in two variables the
order begins 1, x1, x2, x1^2, x1*x2, x2^2.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, Iterator, Mapping, Sequence, Tuple

from .scalars import format_rational, normalize, parse_rational

Exponent = Tuple[int, ...]


def glex_key(e: Exponent):
    return (sum(e), tuple(-x for x in e))


def compositions(total: int, parts: int, cap: int | None = None) -> Iterator[Exponent]:
    """Exponent vectors of the given total degree, in graded-lex order."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    hi = total if cap is None else min(total, cap)
    for first in range(hi, -1, -1):
        rest = total - first
        if cap is not None and rest > cap * (parts - 1):
            continue
        for tail in compositions(rest, parts - 1, cap):
            yield (first,) + tail


def monomials_glex(nvars: int, max_individual: int | None = None,
                   max_total: int | None = None) -> Iterator[Exponent]:
    """All exponent vectors in graded-lex order.

    Bounded by individual degree, total degree, or both. Without a total
    bound the stream stops once every vector with individual degree at most
    `max_individual` has been produced.
    """
    if max_total is None:
        if max_individual is None:
            raise ValueError("need at least one degree bound")
        max_total = max_individual * nvars
    for t in range(max_total + 1):
        yield from compositions(t, nvars, max_individual)


class SparsePoly:
    """Immutable polynomial: exponent tuple -> nonzero int/Fraction coefficient."""

    __slots__ = ("nvars", "_terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[Exponent, object] | None = None):
        self.nvars = int(nvars)
        clean: Dict[Exponent, object] = {}
        if terms:
            for e, c in terms.items():
                e = tuple(int(x) for x in e)
                if len(e) != self.nvars:
                    raise ValueError(f"exponent {e} has arity {len(e)}, expected {self.nvars}")
                if any(x < 0 for x in e):
                    raise ValueError(f"negative exponent in {e}")
                if c:
                    clean[e] = normalize(c) if isinstance(c, Fraction) else c
        self._terms = clean
        self._hash = None

    # construction helpers -------------------------------------------------
    @classmethod
    def _raw(cls, nvars: int, terms: Dict[Exponent, object]) -> "SparsePoly":
        p = cls.__new__(cls)
        p.nvars = nvars
        p._terms = terms
        p._hash = None
        return p

    @classmethod
    def zero(cls, nvars: int) -> "SparsePoly":
        return cls._raw(nvars, {})

    @classmethod
    def constant(cls, nvars: int, c) -> "SparsePoly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def var(cls, nvars: int, k: int) -> "SparsePoly":
        """The variable x_k, with k counted from 1."""
        if not 1 <= k <= nvars:
            raise ValueError(f"variable x{k} outside 1..{nvars}")
        e = [0] * nvars
        e[k - 1] = 1
        return cls._raw(nvars, {tuple(e): 1})

    @classmethod
    def monomial(cls, e: Sequence[int], c=1) -> "SparsePoly":
        return cls(len(e), {tuple(e): c})

    # inspection -----------------------------------------------------------
    @property
    def terms(self) -> Dict[Exponent, object]:
        return dict(self._terms)

    def items(self):
        """(exponent, coefficient) pairs in graded-lex order."""
        return sorted(self._terms.items(), key=lambda kv: glex_key(kv[0]))

    def coeff(self, e: Sequence[int]):
        return self._terms.get(tuple(e), 0)

    def is_zero(self) -> bool:
        return not self._terms

    def __len__(self):
        return len(self._terms)

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def individual_degree(self) -> int:
        return max((max(e, default=0) for e in self._terms), default=-1)

    def degree_in(self, k: int) -> int:
        return max((e[k - 1] for e in self._terms), default=-1)

    def support(self):
        return [e for e, _ in self.items()]

    def is_multilinear(self) -> bool:
        return all(x <= 1 for e in self._terms for x in e)

    # arithmetic -----------------------------------------------------------
    def _check(self, other: "SparsePoly"):
        if self.nvars != other.nvars:
            raise ValueError(f"arity mismatch: {self.nvars} vs {other.nvars}")

    def _lift(self, other) -> "SparsePoly":
        if isinstance(other, SparsePoly):
            self._check(other)
            return other
        return SparsePoly.constant(self.nvars, other)

    def __add__(self, other):
        other = self._lift(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            s = out.get(e, 0) + c
            if s:
                out[e] = normalize(s) if isinstance(s, Fraction) else s
            else:
                out.pop(e, None)
        return SparsePoly._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return SparsePoly._raw(self.nvars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def scale(self, c) -> "SparsePoly":
        if not c:
            return SparsePoly.zero(self.nvars)
        out = {}
        for e, v in self._terms.items():
            w = v * c
            out[e] = normalize(w) if isinstance(w, Fraction) else w
        return SparsePoly._raw(self.nvars, out)

    def __mul__(self, other):
        if not isinstance(other, SparsePoly):
            return self.scale(other)
        self._check(other)
        a, b = self._terms, other._terms
        if not a or not b:
            return SparsePoly.zero(self.nvars)
        if len(a) < len(b):
            a, b = b, a
        out: Dict[Exponent, object] = {}
        get = out.get
        for eb, cb in b.items():
            for ea, ca in a.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                out[e] = get(e, 0) + ca * cb
        out = {e: (normalize(c) if isinstance(c, Fraction) else c) for e, c in out.items() if c}
        return SparsePoly._raw(self.nvars, out)

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, k: int) -> "SparsePoly":
        if k < 0:
            raise ValueError("negative power")
        result = SparsePoly.constant(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, SparsePoly):
            return self.nvars == other.nvars and self._terms == other._terms
        if other == 0:
            return not self._terms
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self._terms.items())))
        return self._hash

    # evaluation / substitution --------------------------------------------
    def evaluate(self, point: Sequence):
        """Value at a point; works for ints, Fractions, Fp, or anything ring-like."""
        if len(point) != self.nvars:
            raise ValueError(f"point has {len(point)} coordinates, expected {self.nvars}")
        cache: Dict[Tuple[int, int], object] = {}
        total = 0
        for e, c in self._terms.items():
            term = c
            for k, x in enumerate(e):
                if x:
                    key = (k, x)
                    pw = cache.get(key)
                    if pw is None:
                        pw = point[k] ** x
                        cache[key] = pw
                    term = term * pw
            total = total + term
        return normalize(total) if isinstance(total, Fraction) else total

    def evaluate_mod(self, point: Sequence[int], p: int) -> int:
        total = 0
        for e, c in self._terms.items():
            if isinstance(c, Fraction):
                term = c.numerator * pow(c.denominator, -1, p)
            else:
                term = c
            for k, x in enumerate(e):
                if x:
                    term = term * pow(point[k], x, p) % p
            total += term
        return total % p

    def compose(self, subs: Sequence["SparsePoly"]) -> "SparsePoly":
        return poly_compose(self, subs)

    def pad(self, nvars: int) -> "SparsePoly":
        """Embed into a ring with more variables appended at the end."""
        if nvars < self.nvars:
            raise ValueError("cannot pad to fewer variables")
        extra = (0,) * (nvars - self.nvars)
        return SparsePoly._raw(nvars, {e + extra: c for e, c in self._terms.items()})

    def primitive(self) -> "SparsePoly":
        """Integer multiple with coprime integer coefficients and positive leading term.

        The leading term is the last one in graded-lex order.
        """
        if not self._terms:
            return self
        from math import gcd, lcm
        den = 1
        for c in self._terms.values():
            if isinstance(c, Fraction):
                den = lcm(den, c.denominator)
        ints = {e: int(c * den) for e, c in self._terms.items()}
        g = 0
        for v in ints.values():
            g = gcd(g, v)
        lead = max(ints, key=glex_key)
        if ints[lead] < 0:
            g = -g
        return SparsePoly._raw(self.nvars, {e: v // g for e, v in ints.items()})

    def __repr__(self):
        return f"SparsePoly({self.nvars}, {self.to_string()!r})"

    def to_string(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for e, c in self.items():
            mono = "*".join(
                f"x{k + 1}" + (f"^{x}" if x > 1 else "") for k, x in enumerate(e) if x
            )
            cs = format_rational(c)
            if not mono:
                parts.append(cs)
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{cs}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")


def poly_mul(a: SparsePoly, b: SparsePoly) -> SparsePoly:
    return a * b


def poly_compose(a: SparsePoly, subs: Sequence[SparsePoly]) -> SparsePoly:
    """Substitute subs[k] for x_{k+1} in a."""
    if len(subs) != a.nvars:
        raise ValueError(f"need {a.nvars} substitutions, got {len(subs)}")
    if not subs:
        return a
    m = subs[0].nvars
    for s in subs:
        if s.nvars != m:
            raise ValueError("substitutions must share one arity")
    powers: Dict[Tuple[int, int], SparsePoly] = {}

    def power(k: int, x: int) -> SparsePoly:
        key = (k, x)
        if key not in powers:
            if x == 1:
                powers[key] = subs[k]
            else:
                half = power(k, x // 2)
                sq = half * half
                powers[key] = sq * subs[k] if x % 2 else sq
        return powers[key]

    total = SparsePoly.zero(m)
    for e, c in a.items():
        term = SparsePoly.constant(m, c)
        for k, x in enumerate(e):
            if x:
                term = term * power(k, x)
        total = total + term
    return total


# --------------------------------------------------------------------------
# text format:  header `vars n`, then `<coeff> : e1 e2 ... en` per term
# --------------------------------------------------------------------------

class PolyFormatError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def format_poly(p: SparsePoly) -> str:
    lines = [f"vars {p.nvars}"]
    for e, c in p.items():
        lines.append(f"{format_rational(c)} : {' '.join(str(x) for x in e)}".rstrip())
    return "\n".join(lines) + "\n"


def parse_poly(text: str) -> SparsePoly:
    nvars = None
    terms: Dict[Exponent, object] = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if nvars is None:
            parts = line.split()
            if len(parts) != 2 or parts[0] != "vars":
                raise PolyFormatError(no, "expected header `vars n`")
            try:
                nvars = int(parts[1])
            except ValueError:
                raise PolyFormatError(no, f"bad variable count {parts[1]!r}") from None
            if nvars < 0:
                raise PolyFormatError(no, "negative variable count")
            continue
        if ":" not in line:
            raise PolyFormatError(no, "expected `<coeff> : <exponents>`")
        cs, es = line.split(":", 1)
        try:
            c = parse_rational(cs)
            e = tuple(int(x) for x in es.split())
        except (ValueError, ZeroDivisionError) as exc:
            raise PolyFormatError(no, str(exc)) from None
        if len(e) != nvars:
            raise PolyFormatError(no, f"expected {nvars} exponents, got {len(e)}")
        if any(x < 0 for x in e):
            raise PolyFormatError(no, "negative exponent")
        if e in terms:
            raise PolyFormatError(no, f"duplicate monomial {e}")
        terms[e] = c
    if nvars is None:
        raise PolyFormatError(0, "empty polynomial file")
    return SparsePoly(nvars, terms)


def from_dict(nvars: int, terms: Iterable[Tuple[Sequence[int], object]]) -> SparsePoly:
    acc = SparsePoly.zero(nvars)
    for e, c in terms:
        acc = acc + SparsePoly.monomial(e, c)
    return acc
