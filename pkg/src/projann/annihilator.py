"""Annihilators of explicit polynomial maps.

Pipeline for G = (g_1, ..., g_n) in m variables z:

1. keep the first 2m outputs and pick the individual-degree budget D;
2. scan product columns G^e in graded-lex order until the first one that
   depends on its predecessors; its certificate gives the monic annihilator
   x^{e_K} - sum_j f_j x^{e_j};
3. compress the rows with the rank extractor E_alpha (evaluation at
   v_{alpha,i} = (alpha^i, alpha^{i*Delta}, ...)), keeping K-1 rows;
4. the K x K matrix M~ (those rows plus a symbolic last row of signed
   monomials) has det(M~) = (-1)^{K-1} * c * A_monic, and an encoder circuit
   for M~ goes through the determinant compiler to give a projection circuit.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, log2
from typing import Dict, List, Optional, Sequence, Tuple

import flint

from .algebra._kernels import rank_profile_mod_p
from .algebra.matrix import ExactMatrix, exact_rank, exact_rank_and_first_dependency
from .algebra.poly import SparsePoly, glex_key, monomials_glex, poly_compose
from .algebra.scalars import MERSENNE_61, parse_rational, format_rational, previous_prime
from .circuit.builder import Builder
from .circuit.evaluate import ResourceLimitError, evaluate_mod, expand
from .circuit.ir import Circuit, size
from .circuit.textfmt import CircuitFormatError, format_circuit, parse_circuit
from .config import ceiling
from .detcompiler import det_circuit
from .gadgets import (BIT0, b_select, bit_width, const_bits, eq_bits, gate, lt_const,
                      pow_gates, power_table, build_universal, grid_points)

Exponent = Tuple[int, ...]

KERNEL_PRIMES = (2147483629, 2147483587, 2147483579)   # largest primes below 2^31


class AnnihilatorError(RuntimeError):
    """An internal consistency check failed; indicates a bug, not bad input."""


# ------------------------------------------------------------------ explicit maps

@dataclass
class ExplicitMap:
    """Map given by an encoder C(z, y) and assignments: g_i(z) = C(z, a_i).

    Variables of the encoder are z_1..z_m, then y_1..y_k.
    """
    m: int
    circuit: Circuit
    assignments: List[Tuple[Fraction, ...]]
    d: Optional[int] = None
    components: Optional[List[SparsePoly]] = None

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("a map needs at least one input variable")
        if len(self.circuit.outputs) != 1:
            raise ValueError("encoder must have a single output")
        k = self.circuit.nvars - self.m
        if k < 0:
            raise ValueError("encoder has fewer variables than map inputs")
        for i, a in enumerate(self.assignments):
            if len(a) != k:
                raise ValueError(f"assignment {i + 1} has {len(a)} values, encoder expects {k}")
        self.assignments = [tuple(Fraction(v) for v in a) for a in self.assignments]
        if self.d is None:
            self.d = max(1, max((g.degree() for g in self.materialize()), default=1))

    @property
    def n(self) -> int:
        return len(self.assignments)

    @classmethod
    def from_polys(cls, polys: Sequence[SparsePoly], d: int | None = None) -> "ExplicitMap":
        """Generic encoder sum_mono y_mono * z^mono over monomials of degree <= d."""
        polys = list(polys)
        if not polys:
            raise ValueError("empty map")
        m = polys[0].nvars
        if any(p.nvars != m for p in polys):
            raise ValueError("components live in different rings")
        if d is None:
            d = max(1, max(p.degree() for p in polys))
        monos = list(monomials_glex(m, max_total=d))
        b = Builder(m + len(monos))
        terms = []
        for t, e in enumerate(monos):
            factors = [b.power(b.input(k + 1), ek) for k, ek in enumerate(e) if ek]
            y = b.input(m + 1 + t)
            terms.append(b.mul(y, b.mul_list(factors)) if factors else y)
        circuit = b.build([b.add_list(terms)])
        assigns = [tuple(Fraction(p.coeff(e)) for e in monos) for p in polys]
        return cls(m, circuit, assigns, d, [p for p in polys])

    def specialize(self, i: int) -> Circuit:
        """Encoder with y fixed to a_i: a circuit in z only."""
        b = Builder(self.m)
        out = self.component_gates(b, [b.input(k + 1) for k in range(self.m)], [i])[0]
        return b.build([out])

    def component_gates(self, b: Builder, z: Sequence[int],
                        which: Sequence[int] | None = None) -> List[int]:
        """Inline the encoder once per requested assignment, with z wired to host gates."""
        if which is None:
            which = range(self.n)
        outs = []
        for i in which:
            wiring = {k + 1: z[k] for k in range(self.m)}
            for t, v in enumerate(self.assignments[i]):
                wiring[self.m + 1 + t] = b.const(v)
            outs.append(b.inline(self.circuit, wiring)[0])
        return outs

    def materialize(self) -> List[SparsePoly]:
        if self.components is None:
            comps = []
            for i in range(self.n):
                p = expand(self.specialize(i), max_terms=ceiling())[0]
                comps.append(p)
            self.components = comps
        return self.components

    def truncate(self, count: int) -> "ExplicitMap":
        comps = None if self.components is None else self.components[:count]
        return ExplicitMap(self.m, self.circuit, self.assignments[:count], self.d, comps)


def format_map(G: ExplicitMap) -> str:
    lines = [format_circuit(G.circuit).rstrip("\n"), f"inputs {G.m}"]
    for i, a in enumerate(G.assignments, start=1):
        lines.append(f"assign {i} : " + " ".join(format_rational(v) for v in a))
    return "\n".join(lines) + "\n"


def parse_map(text: str) -> ExplicitMap:
    """Circuit file for C(z, y), an optional `inputs m` line, then `assign i : v1 v2 ...`."""
    circ_lines, assigns, m = [], {}, None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line.startswith("assign"):
            head, sep, rest = line.partition(":")
            toks = head.split()
            if not sep or len(toks) != 2 or not toks[1].isdigit():
                raise CircuitFormatError(no, "expected `assign i : v1 v2 ...`")
            i = int(toks[1])
            if i in assigns:
                raise CircuitFormatError(no, f"assignment {i} given twice")
            try:
                assigns[i] = tuple(parse_rational(t) for t in rest.split())
            except ValueError as exc:
                raise CircuitFormatError(no, str(exc)) from None
        elif line.startswith("inputs"):
            toks = line.split()
            if len(toks) != 2 or not toks[1].isdigit():
                raise CircuitFormatError(no, "expected `inputs m`")
            m = int(toks[1])
        else:
            if assigns:
                raise CircuitFormatError(no, "circuit lines after assignments")
            circ_lines.append(raw)
    circuit = parse_circuit("\n".join(circ_lines))
    if not assigns:
        raise CircuitFormatError(len(text.splitlines()), "map file has no assignments")
    if sorted(assigns) != list(range(1, len(assigns) + 1)):
        raise CircuitFormatError(len(text.splitlines()), "assignments must be numbered 1..n")
    vals = [assigns[i] for i in range(1, len(assigns) + 1)]
    k = len(vals[0])
    if m is None:
        m = circuit.nvars - k
    try:
        return ExplicitMap(m, circuit, vals)
    except ValueError as exc:
        raise CircuitFormatError(len(text.splitlines()), str(exc)) from None


# ------------------------------------------------------------------ parameters

def _ceil_root(value: int, k: int) -> int:
    """Smallest integer t >= 0 with t**k >= value."""
    if value <= 0:
        return 0
    t = max(1, int(round(value ** (1.0 / k))))
    while t ** k < value:
        t += 1
    while t > 1 and (t - 1) ** k >= value:
        t -= 1
    return t


def degree_bound(m: int, n: int, d: int) -> int:
    """D = ceil((nd)^(m/(n-m))) + 1, checked against (ndD)^m < D^n."""
    if n <= m:
        raise ValueError(f"need more outputs than inputs, got n={n}, m={m}")
    if m < 1 or d < 1:
        raise ValueError("m and d must be positive")
    D = _ceil_root((n * d) ** m, n - m) + 1
    if not (n * d * D) ** m < D ** n:
        raise AnnihilatorError(f"dimension count fails for D={D}")
    return D


def monomial_count_bound(m: int, n: int, d: int, D: int) -> int:
    """Number of z-monomials of total degree <= d*n*(D-1), the true row space of the products."""
    return comb(d * n * (D - 1) + m, m)


@dataclass
class AnnihilatorParams:
    m: int
    n: int                  # outputs actually used
    d: int
    D: int
    K: int
    alpha: int
    labels: List[Exponent]  # e^(1) .. e^(K)

    @property
    def Delta(self) -> int:
        return self.n * self.d * self.D

    @property
    def delta(self) -> int:
        return bit_width(self.D)

    @property
    def L(self) -> int:
        return bit_width(self.K)

    @property
    def R(self) -> int:
        return self.Delta ** self.m


@dataclass
class DependencyCertificate:
    coefficients: List[Fraction]     # f_{e^(1)} .. f_{e^(K-1)}
    labels: List[Exponent]           # e^(1) .. e^(K); the last one is dependent

    @property
    def K(self) -> int:
        return len(self.labels)

    def monic(self, nvars: int) -> SparsePoly:
        terms = {self.labels[-1]: 1}
        for e, f in zip(self.labels, self.coefficients):
            if f:
                terms[e] = -f
        return SparsePoly(nvars, terms)


# ------------------------------------------------------------------ product columns

class ProductMatrix:
    """Columns G^e for e of individual degree <= D-1, produced lazily in graded-lex order.

    Row labels are z-monomials; only monomials that actually occur are
    materialized (the remaining rows of the formal Delta^m-row matrix are zero).
    """

    def __init__(self, components: Sequence[SparsePoly], D: int):
        self.g = list(components)
        self.n = len(self.g)
        self.m = self.g[0].nvars
        self.D = D
        self._cache: Dict[Exponent, SparsePoly] = {(0,) * self.n: SparsePoly.constant(self.m, 1)}

    def labels(self):
        return monomials_glex(self.n, max_individual=self.D - 1)

    def column(self, e: Exponent) -> SparsePoly:
        e = tuple(e)
        hit = self._cache.get(e)
        if hit is not None:
            return hit
        a = max(k for k, x in enumerate(e) if x)
        prev = list(e)
        prev[a] -= 1
        col = self.column(tuple(prev)) * self.g[a]
        self._cache[e] = col
        return col

    def to_exact(self, labels: Sequence[Exponent], max_cells: int | None = None) -> ExactMatrix:
        cols = [self.column(e) for e in labels]
        rows = sorted({z for c in cols for z in c.terms}, key=glex_key)
        cap = ceiling() if max_cells is None else max_cells
        if len(rows) * len(cols) > cap:
            raise ResourceLimitError(f"product matrix {len(rows)}x{len(cols)} exceeds {cap} cells")
        index = {z: r for r, z in enumerate(rows)}
        data = [[0] * len(cols) for _ in rows]
        for j, c in enumerate(cols):
            for z, v in c.terms.items():
                data[index[z]][j] = v
        return ExactMatrix(data, row_labels=rows, col_labels=list(labels))


def build_product_matrix(G, D: int) -> ProductMatrix:
    comps = G.materialize() if isinstance(G, ExplicitMap) else list(G)
    return ProductMatrix(comps, D)


def _mod_matrix(cols: Sequence[SparsePoly], p: int):
    import numpy as np
    rows = sorted({z for c in cols for z in c.terms}, key=glex_key)
    index = {z: r for r, z in enumerate(rows)}
    A = np.zeros((len(rows), len(cols)), dtype=np.int64)
    for j, c in enumerate(cols):
        for z, v in c.terms.items():
            if isinstance(v, Fraction):
                v = v.numerator * pow(v.denominator, -1, p)
            A[index[z], j] = v % p
    return A, rows


def _verify_certificate(P: ProductMatrix, cert: DependencyCertificate) -> bool:
    acc = P.column(cert.labels[-1])
    for e, f in zip(cert.labels, cert.coefficients):
        if f:
            acc = acc - P.column(e).scale(f)
    return acc.is_zero()


def first_dependency(P: ProductMatrix, small_cells: int = 2500,
                     max_cells: int | None = None) -> DependencyCertificate:
    """Smallest K such that column e^(K) depends on e^(1) .. e^(K-1), with exact coefficients.

    Columns are scanned block by block (one total degree at a time). Small
    instances use fraction-free elimination directly. Larger ones locate K by
    rank modulo a prime (independence mod p implies independence over Q) and
    then solve for the coefficients exactly; the recombination is always
    checked exactly before returning.
    """
    cap = ceiling() if max_cells is None else max_cells
    labels: List[Exponent] = []
    gen = P.labels()
    pending = next(gen, None)
    while pending is not None:
        block_deg = sum(pending)
        while pending is not None and sum(pending) == block_deg:
            labels.append(pending)
            pending = next(gen, None)
        cols = [P.column(e) for e in labels]
        nrows = len({z for c in cols for z in c.terms})
        if nrows >= len(cols) and pending is not None and nrows * len(cols) > small_cells:
            # cheap necessary check: a dependency needs rank < number of columns
            A, _ = _mod_matrix(cols, KERNEL_PRIMES[0])
            r, _, _ = rank_profile_mod_p(A, KERNEL_PRIMES[0])
            if r == len(cols):
                continue
        if nrows * len(cols) <= small_cells:
            res = exact_rank_and_first_dependency(P.to_exact(labels, cap))
            if res.K is None:
                continue
            K = res.K
            cert = DependencyCertificate([Fraction(c) for c in res.coefficients], labels[:K])
        else:
            cert = _first_dependency_modular(P, labels, cap)
            if cert is None:
                continue
        if not _verify_certificate(P, cert):
            raise AnnihilatorError("dependency certificate does not recombine")
        return cert
    raise AnnihilatorError("no dependency among the product columns; degree budget too small")


def _first_dependency_modular(P: ProductMatrix, labels: List[Exponent], cap: int
                              ) -> Optional[DependencyCertificate]:
    cols = [P.column(e) for e in labels]
    rows_all = sorted({z for c in cols for z in c.terms}, key=glex_key)
    if len(rows_all) * len(cols) > cap:
        raise ResourceLimitError(f"product matrix {len(rows_all)}x{len(cols)} exceeds {cap} cells")
    for p in KERNEL_PRIMES:
        A, rows = _mod_matrix(cols, p)
        r, pcols, prows = rank_profile_mod_p(A, p)
        if r == len(cols):
            return None   # independent mod p, hence over Q
        pset = set(int(c) for c in pcols)
        K = next(j for j in range(len(cols)) if j not in pset) + 1
        # rows chosen for the first K-1 pivots give an invertible square block mod p
        sel = [int(prows[t]) for t in range(len(pcols)) if int(pcols[t]) < K - 1]
        index = {z: i for i, z in enumerate(rows)}
        if K == 1:
            if cols[0].is_zero():
                return DependencyCertificate([], labels[:1])
            continue
        sub = flint.fmpq_mat(K - 1, K - 1)
        rhs = flint.fmpq_mat(K - 1, 1)
        sel_labels = [rows[i] for i in sel]
        for a, z in enumerate(sel_labels):
            for j in range(K - 1):
                sub[a, j] = _fq(cols[j].coeff(z))
            rhs[a, 0] = _fq(cols[K - 1].coeff(z))
        try:
            sol = sub.solve(rhs)
        except ZeroDivisionError:
            continue
        coeffs = [Fraction(int(sol[j, 0].p), int(sol[j, 0].q)) for j in range(K - 1)]
        cert = DependencyCertificate(coeffs, labels[:K])
        if _verify_certificate(P, cert):
            return cert
        # column K is independent over Q although dependent mod p: try another prime
    raise AnnihilatorError("could not certify the first dependency with the available primes")


def _fq(v) -> flint.fmpq:
    v = Fraction(v)
    return flint.fmpq(v.numerator, v.denominator)


# ------------------------------------------------------------------ rank extractor

def extractor_point(alpha: int, i: int, Delta: int, m: int, p: int | None = None) -> List[int]:
    """v_{alpha,i} = (alpha^(i), alpha^(i*Delta), ..., alpha^(i*Delta^(m-1)))."""
    if p is None:
        return [alpha ** (i * Delta ** c) for c in range(m)]
    return [pow(alpha, i * Delta ** c, p) for c in range(m)]


def _compressed_mod(components, labels, alpha, Delta, rows, p):
    import numpy as np
    m = components[0].nvars
    A = np.zeros((rows, len(labels)), dtype=np.int64)
    for i in range(rows):
        v = extractor_point(alpha, i, Delta, m, p)
        gv = [g.evaluate_mod(v, p) for g in components]
        for j, e in enumerate(labels):
            acc = 1
            for a, x in enumerate(e):
                if x:
                    acc = acc * pow(gv[a], x, p) % p
            A[i, j] = acc
    return A


def compressed_rows_exact(components, labels, alpha, Delta, rows) -> List[List[int]]:
    """Rows i < rows of E_alpha * M: entry (i, e) = G(v_{alpha,i})^e, exactly."""
    m = components[0].nvars
    out = []
    for i in range(rows):
        v = extractor_point(alpha, i, Delta, m)
        gv = [g.evaluate(v) for g in components]
        row = []
        for e in labels:
            acc = 1
            for a, x in enumerate(e):
                if x:
                    acc *= gv[a] ** x
            row.append(acc)
        out.append(row)
    return out


def _entry_bits(components, labels, alpha, Delta, rows) -> float:
    """Rough size in bits of the compressed K-1 x K block."""
    m = components[0].nvars
    d = max(g.degree() for g in components)
    norms = [log2(max(1, sum(abs(c) for c in g.terms.values())) + 1) for g in components]
    la = log2(max(alpha, 2))
    top = Delta ** (m - 1)
    total = 0.0
    for i in range(rows):
        per = [nrm + d * i * top * la for nrm in norms]
        for e in labels:
            total += 1 + sum(x * per[a] for a, x in enumerate(e))
    return total


def find_alpha(components: Sequence[SparsePoly], cert: DependencyCertificate, Delta: int,
               bound: int | None = None, exact_bits: float = 2e5) -> Tuple[int, bool]:
    """Smallest alpha >= 1 whose extractor keeps the first K-1 columns independent.

    Full rank modulo a prime certifies full rank over Q. When the block is
    small (estimated size below `exact_bits`), a candidate that is deficient
    modulo the first prime is settled by exact rank; otherwise it is rejected
    after a second prime also reports deficiency. Returns (alpha, exact_checked).
    """
    components = list(components)
    K = cert.K
    m = components[0].nvars
    labels = cert.labels
    if bound is None:
        bound = Delta ** m * max(1, K - 1)
    if K == 1:
        return 1, True
    for alpha in range(1, bound + 1):
        small = _entry_bits(components, labels[:-1], alpha, Delta, K - 1) <= exact_bits
        ok = False
        for p in KERNEL_PRIMES[:2]:
            A = _compressed_mod(components, labels[:-1], alpha, Delta, K - 1, p)
            r, _, _ = rank_profile_mod_p(A, p)
            if r == K - 1:
                ok = True
                break
            if small:
                exact = compressed_rows_exact(components, labels[:-1], alpha, Delta, K - 1)
                ok = exact_rank(ExactMatrix(exact)) == K - 1
                break
        if ok:
            _check_extracted_certificate(components, cert, alpha, Delta, small)
            return alpha, small
    raise AnnihilatorError(f"no alpha <= {bound} preserves rank {K - 1}")


def _check_extracted_certificate(components, cert, alpha, Delta, exact: bool):
    """The dependency of column K carries over to the compressed rows."""
    K = cert.K
    if exact:
        rows = compressed_rows_exact(components, cert.labels, alpha, Delta, K - 1)
        for row in rows:
            if sum(f * row[j] for j, f in enumerate(cert.coefficients)) != row[K - 1]:
                raise AnnihilatorError("certificate does not recombine after compression")
        return
    p = KERNEL_PRIMES[2]
    if any(f.denominator % p == 0 for f in cert.coefficients):
        return
    A = _compressed_mod(components, cert.labels, alpha, Delta, K - 1, p)
    f = [f.numerator * pow(f.denominator, -1, p) % p for f in cert.coefficients]
    for i in range(K - 1):
        lhs = sum(int(A[i, j]) * f[j] for j in range(K - 1)) % p
        if lhs != int(A[i, K - 1]):
            raise AnnihilatorError("certificate does not recombine after compression")


def rank_extractor(alpha: int, rows: int, n: int) -> List[List[int]]:
    """E_alpha[i][j] = alpha^(i*j) for 1 <= i <= rows, 1 <= j <= n.

    Indices start at 1 here; with 0-based indices a single row is all ones,
    which kills every column summing to zero whatever alpha is.
    """
    return [[alpha ** (i * j) for j in range(1, n + 1)] for i in range(1, rows + 1)]


def find_alpha_for_matrix(M: Sequence[Sequence], r: int | None = None) -> int:
    """Smallest alpha with rank(E_alpha * M) = rank(M), E_alpha having rank(M) rows."""
    Mx = ExactMatrix(M)
    if r is None:
        r = exact_rank(Mx)
    n = Mx.nrows
    for alpha in range(1, n * r + 1):
        E = ExactMatrix(rank_extractor(alpha, r, n))
        if exact_rank(E @ Mx) == r:
            return alpha
    raise AnnihilatorError(f"no alpha <= {n * r} preserves rank {r}")


# ------------------------------------------------------------------ the matrix M~

@dataclass
class MTilde:
    """K x K matrix: K-1 integer rows G(v_{alpha,i})^{e_j}, last row (-1)^{K-1} x^{e_j}."""
    numeric: List[List[int]]
    labels: List[Exponent]
    nvars: int

    @property
    def K(self) -> int:
        return len(self.labels)

    def last_row(self) -> List[SparsePoly]:
        s = -1 if (self.K - 1) % 2 else 1
        return [SparsePoly.monomial(e, s) for e in self.labels]

    def entry(self, i: int, j: int):
        if i < self.K - 1:
            return self.numeric[i][j]
        return self.last_row()[j]

    def minor_det(self, j: int) -> int:
        """det of the numeric rows with column j removed."""
        K = self.K
        if K == 1:
            return 1
        rows = [[r[c] for c in range(K) if c != j] for r in self.numeric]
        return int(flint.fmpz_mat(rows).det())

    def det_poly(self) -> SparsePoly:
        """Laplace expansion along the symbolic last row."""
        K = self.K
        acc = SparsePoly.zero(self.nvars)
        for j, lab in enumerate(self.last_row()):
            c = self.minor_det(j)
            if c:
                acc = acc + lab.scale(c * (-1) ** (K - 1 + j))
        return acc


def build_Mtilde(components: Sequence[SparsePoly], params: AnnihilatorParams) -> MTilde:
    rows = compressed_rows_exact(list(components), params.labels, params.alpha, params.Delta,
                                 params.K - 1)
    return MTilde(rows, list(params.labels), params.n)


def annihilator_direct(Mt: MTilde, components: Sequence[SparsePoly] | None = None) -> SparsePoly:
    """A = sum_j (-1)^(j-1) (-1)^(K-1) det(minor_j) x^{e_j}  (= c * A_monic)."""
    K = Mt.K
    acc = SparsePoly.zero(Mt.nvars)
    for j, e in enumerate(Mt.labels):
        c = Mt.minor_det(j)
        if c:
            acc = acc + SparsePoly.monomial(e, c * (-1) ** (j + K - 1))
    if acc.is_zero():
        raise AnnihilatorError("all minors vanish")
    if components is not None and not poly_compose(acc, list(components)).is_zero():
        raise AnnihilatorError("minor expansion does not annihilate the map")
    return acc


def encode_Mtilde(G: ExplicitMap, params: AnnihilatorParams) -> Circuit:
    """Circuit C(x, i, j) = M~[i, e^(j)] for i, j < K.

    Variables: x_1..x_n, then L bits of i, then L bits of j (MSB first). The
    map block computing G(pow(i)) is emitted once and tagged "C_G".
    """
    K, n, m = params.K, params.n, params.m
    L = params.L
    b = Builder(n + 2 * L)
    xs = [b.input(a + 1) for a in range(n)]
    ibits = [b.input(n + 1 + t) for t in range(L)]
    jbits = [b.input(n + L + 1 + t) for t in range(L)]
    lt = gate(b, lt_const(b, ibits, K - 1))
    eq = gate(b, eq_bits(b, ibits, const_bits(K - 1, L)))

    table = power_table(params.alpha, params.Delta, m, L)
    base = [[b.inline(table[(l, k)])[0] for l in range(L)] for k in range(m)]
    z = pow_gates(b, ibits, base)

    b.begin_instance("C_G")
    comps = G.component_gates(b, z, range(n))
    b.end_instance(comps[-1])

    rows = [b.add(b.mul(lt, g), b.mul(eq, x)) for g, x in zip(comps, xs)]

    dbits = params.delta
    minterm = {c: gate(b, eq_bits(b, jbits, const_bits(c, L))) for c in range(K)}
    factors = []
    for a in range(n):
        sq = rows[a]
        for t in range(dbits):
            hits = [minterm[c] for c, e in enumerate(params.labels) if (e[a] >> t) & 1]
            if hits:
                sel = b.add_list(hits)
                factors.append(b_select(b, sel, sq))
            if t + 1 < dbits:
                sq = b.mul(sq, sq)
    sign = b.add(lt, eq) if (K - 1) % 2 == 0 else b.sub(lt, eq)
    out = b.mul(sign, b.mul_list(factors)) if factors else sign
    return b.build([out])


# ------------------------------------------------------------------ the full pipeline

@dataclass
class AnnihilationResult:
    A: SparsePoly
    circuit: Optional[Circuit]
    params: AnnihilatorParams
    certificate: DependencyCertificate
    report: Dict[str, object] = field(default_factory=dict)


def annihilate(G: ExplicitMap, D: int | None = None, multilinear: bool = False,
               verify: str = "symbolic", build_circuit: bool = True, seed: int = 0,
               materialize_bits: float = 2e5, check_circuit_max_K: int = 5) -> AnnihilationResult:
    """Nonzero A with A(g_1, ..., g_n) = 0; see the module docstring for the stages.

    `verify` is one of "symbolic", "random", "both", "none". The circuit C_A
    computes (-1)^(K-1) * c * A_monic; when the numeric block is small enough
    to handle exactly, A is delivered as c * A_monic (normalization "det"),
    otherwise as the primitive integer multiple of A_monic.
    """
    if verify not in ("symbolic", "random", "both", "none"):
        raise ValueError(f"unknown verification mode {verify!r}")
    timings: Dict[str, float] = {}
    t0 = time.perf_counter()
    m, n_full = G.m, G.n
    if n_full <= m:
        raise ValueError(f"map needs more outputs ({n_full}) than inputs ({m})")
    n = min(n_full, 2 * m)
    Gt = G.truncate(n)
    comps = Gt.materialize()
    d = max(1, max(g.degree() for g in comps))
    if multilinear:
        if D not in (None, 2):
            raise ValueError("multilinear mode fixes D = 2")
        D = 2
        if not monomial_count_bound(m, n, d, 2) < 2 ** n:
            raise AnnihilatorError(f"multilinear dimension count fails for m={m}, n={n}, d={d}")
    elif D is None:
        D = degree_bound(m, n, d)
    elif D < 2:
        raise ValueError("D must be at least 2")
    timings["setup"] = time.perf_counter() - t0

    t = time.perf_counter()
    P = build_product_matrix(comps, D)
    cert = first_dependency(P)
    K = cert.K
    timings["dependency"] = time.perf_counter() - t

    t = time.perf_counter()
    Delta = n * d * D
    alpha, exact_alpha = find_alpha(comps, cert, Delta)
    params = AnnihilatorParams(m, n, d, D, K, alpha, list(cert.labels))
    timings["alpha"] = time.perf_counter() - t

    t = time.perf_counter()
    monic = cert.monic(n)
    scalar = None
    if _entry_bits(comps, cert.labels, alpha, Delta, K - 1) <= materialize_bits:
        Mt = build_Mtilde(comps, params)
        scalar = Mt.minor_det(K - 1)
        if scalar == 0:
            raise AnnihilatorError("compressed block is singular")
        A = monic.scale(scalar)
        normalization = "det"
        if K <= 40:
            direct = annihilator_direct(Mt)
            if direct != A:
                raise AnnihilatorError("minor expansion disagrees with the certificate")
    else:
        A = monic.primitive()
        normalization = "primitive"
    if A.is_zero():
        raise AnnihilatorError("annihilator vanished")
    timings["normalize"] = time.perf_counter() - t

    t = time.perf_counter()
    C_A = None
    encoder = None
    if build_circuit:
        encoder = encode_Mtilde(Gt, params)
        C_A = det_circuit(encoder, K)
    timings["circuit"] = time.perf_counter() - t

    A_full = A.pad(n_full) if n_full > n else A
    rng = random.Random(seed)
    t = time.perf_counter()
    if verify in ("symbolic", "both"):
        full = G.materialize()
        if not poly_compose(A_full, full).is_zero():
            raise AnnihilatorError("A(G) is not identically zero")
    if verify in ("random", "both"):
        full = G.materialize()
        p = MERSENNE_61
        for _ in range(20):
            z = [rng.randrange(p) for _ in range(m)]
            if A_full.evaluate_mod([g.evaluate_mod(z, p) for g in full], p) != 0:
                raise AnnihilatorError("A(G) is nonzero at a random point")
    circuit_checked = False
    if C_A is not None and verify != "none" and K <= check_circuit_max_K:
        _check_circuit_proportional(C_A, A, K, scalar, rng)
        circuit_checked = True
    timings["verify"] = time.perf_counter() - t

    report = {
        "m": m, "n": n_full, "n_used": n, "d": d, "D": D, "Delta": Delta, "K": K,
        "R": params.R, "R_nonzero": len({z for e in cert.labels for z in P.column(e).terms}),
        "alpha": alpha, "alpha_exact": exact_alpha, "normalization": normalization,
        "scalar": scalar if scalar is not None else "unknown",
        "terms": len(A_full), "individual_degree": A_full.individual_degree(),
        "size_C_G": size(G.circuit),
        "size_Mtilde": size(encoder) if encoder is not None else 0,
        "size_C_A": size(C_A) if C_A is not None else 0,
        "circuit_checked": circuit_checked,
    }
    for k, v in timings.items():
        report[f"time_{k}"] = round(v, 6)
    return AnnihilationResult(A_full, C_A, params, cert, report)


def _check_circuit_proportional(C_A: Circuit, A: SparsePoly, K: int, scalar, rng,
                                trials: int = 3):
    """C_A equals (-1)^(K-1) * c * A_monic: compare against A at random points mod p."""
    p = KERNEL_PRIMES[0]
    n = A.nvars
    ratio = None
    for _ in range(trials):
        x = [rng.randrange(1, p) for _ in range(n)]
        a = A.evaluate_mod(x, p)
        env = {k + 1: x[k] for k in range(n)}
        c = evaluate_mod(C_A, env, p)[0]
        if a == 0:
            if c != 0:
                raise AnnihilatorError("C_A is nonzero where A vanishes")
            continue
        r = c * pow(a, -1, p) % p
        if ratio is None:
            ratio = r
        elif r != ratio:
            raise AnnihilatorError("C_A is not proportional to A")
    if ratio is not None and scalar is not None:
        want = (-1) ** (K - 1) % p
        if ratio != want:
            raise AnnihilatorError("C_A differs from (-1)^(K-1) * c * A_monic")


# ------------------------------------------------------------------ multilinear equations

@dataclass
class EquationResult:
    A: SparsePoly
    grid: List[Tuple[int, ...]]
    free_params: List[int]        # template variable ids left free
    fixed: Dict[int, int]         # template variable id -> fixed value
    template_circuit: Circuit
    restricted: ExplicitMap
    report: Dict[str, object]

    def instance_vector(self, values: Sequence) -> List:
        """Evaluation vector of the template instance with the free parameters set to values."""
        from .circuit.evaluate import evaluate
        out = []
        for pt in self.grid:
            env = dict(self.fixed)
            env.update({v: val for v, val in zip(self.free_params, values)})
            env.update({k + 1: x for k, x in enumerate(pt)})
            out.append(evaluate(self.template_circuit, env)[0])
        return out


def build_equation(n: int, d: int, s: int, grid: Sequence[Tuple[int, ...]] | None = None,
                   free: int = 2, seed: int = 0, build_circuit: bool = False) -> EquationResult:
    """Multilinear A_N vanishing on evaluation vectors of a restricted universal template.

    The template U(x, y) is restricted by fixing all parameters except `free`
    output weights (chosen and filled deterministically from `seed`). The
    tuple (U(a, y))_a over the grid is then an explicit map in the free
    parameters, and the annihilator pipeline runs with D = 2.
    """
    if grid is None:
        grid = grid_points(n, d)
    grid = [tuple(p) for p in grid]
    N = len(grid)
    r = min(free, N - 1)       # the dimension count below is the real gate
    if r < 1:
        raise AnnihilatorError(f"grid of {N} points is too small for multilinear mode")
    T = build_universal(n, d, s)
    rng = random.Random(seed)
    weights = [T.param_index[("w", j)] for j in range(n + 1 + T.slots)]
    free_vars = sorted(rng.sample(weights, r)) if len(weights) > r else weights[:r]
    fixed = {v: rng.randint(-2, 2) for v in T.param_index.values() if v not in free_vars}
    # the restricted encoder: z = free parameters, y = grid point
    b = Builder(r + n)
    wiring = {v: b.const(val) for v, val in fixed.items()}
    var_map = {k + 1: r + k + 1 for k in range(n)}
    var_map.update({v: t + 1 for t, v in enumerate(free_vars)})
    out = b.inline(T.circuit, wiring, var_map)[0]
    enc = b.build([out])
    G = ExplicitMap(r, enc, [tuple(Fraction(x) for x in pt) for pt in grid])
    deg = max(1, max(g.degree() for g in G.materialize()))
    count = monomial_count_bound(r, min(N, 2 * r), deg, 2)
    if not count < 2 ** min(N, 2 * r):
        raise AnnihilatorError(f"dimension count fails: {count} >= 2^{min(N, 2 * r)}")
    res = annihilate(G, multilinear=True, verify="symbolic", build_circuit=build_circuit,
                     seed=seed)
    if not res.A.is_multilinear():
        raise AnnihilatorError("equation is not multilinear")
    report = dict(res.report)
    report.update({"grid_points": N, "free_params": r, "template_size": size(T.circuit),
                   "template_params": T.r, "dimension_count": count})
    return EquationResult(res.A, grid, free_vars, fixed, T.circuit, G, report)
