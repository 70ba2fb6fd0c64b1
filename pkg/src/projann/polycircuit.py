"""Sum-of-monomials circuits for explicit polynomials."""

from __future__ import annotations

from .algebra.poly import SparsePoly
from .circuit.builder import Builder
from .circuit.ir import Circuit


def poly_gates(b: Builder, p: SparsePoly, var_of=None) -> int:
    """Gate computing p; `var_of(k)` gives the host gate of variable k (default: input k)."""
    if var_of is None:
        var_of = b.input
    terms = []
    for e, c in p.items():
        factors = [b.power(var_of(k + 1), ek) for k, ek in enumerate(e) if ek]
        mono = b.mul_list(factors) if factors else None
        if mono is None:
            terms.append(b.const(c))
        elif c == 1:
            terms.append(mono)
        else:
            terms.append(b.mul(b.const(c), mono))
    return b.add_list(terms)


def circuit_from_poly(p: SparsePoly) -> Circuit:
    b = Builder(p.nvars)
    return b.build([poly_gates(b, p)])


def circuit_from_polys(ps) -> Circuit:
    ps = list(ps)
    n = max(p.nvars for p in ps)
    b = Builder(n)
    return b.build([poly_gates(b, p.pad(n) if p.nvars < n else p) for p in ps])
