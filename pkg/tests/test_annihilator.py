import itertools
import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from projann.algebra import SparsePoly, poly_compose
from projann.algebra.poly import monomials_glex
from projann.annihilator import (AnnihilatorError, AnnihilatorParams, ExplicitMap,
                                 annihilate, annihilator_direct, build_equation, build_Mtilde,
                                 build_product_matrix, compressed_rows_exact, degree_bound,
                                 encode_Mtilde, extractor_point, find_alpha,
                                 find_alpha_for_matrix, first_dependency, format_map,
                                 monomial_count_bound, parse_map, rank_extractor)
from projann.circuit import evaluate, evaluate_mod
from projann.gadgets import grid_points

from conftest import random_poly

z = SparsePoly.var(1, 1)
ZERO = SparsePoly.zero(1)


def x(n, k):
    return SparsePoly.var(n, k)


def params_for(comps, D=None):
    m, n = comps[0].nvars, len(comps)
    d = max(1, max(g.degree() for g in comps))
    D = D or degree_bound(m, n, d)
    P = build_product_matrix(comps, D)
    cert = first_dependency(P)
    alpha, _ = find_alpha(comps, cert, n * d * D)
    return AnnihilatorParams(m, n, d, D, cert.K, alpha, list(cert.labels)), cert


# ---------------------------------------------------------------- parameters

def test_degree_bound_examples():
    assert degree_bound(1, 2, 1) == 3
    assert degree_bound(1, 3, 2) == 4
    assert degree_bound(2, 4, 3) == 13
    assert 13 - 1 <= 3 * 2 * 3


def test_degree_bound_rejects_square_maps():
    with pytest.raises(ValueError):
        degree_bound(2, 2, 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.integers(1, 4), st.integers(1, 4))
def test_degree_bound_dimension_count(m, extra, d):
    n = m + extra
    D = degree_bound(m, n, d)
    assert D >= 2
    assert (n * d * D) ** m < D ** n


# ---------------------------------------------------------------- product matrix

def test_product_matrix_examples():
    P = build_product_matrix([z, z], 3)
    assert P.column((1, 0)) == P.column((0, 1))
    assert P.column((0, 0)) == SparsePoly.constant(1, 1)
    P = build_product_matrix([z, z * z], 5)
    assert P.column((2, 0)) == P.column((0, 1)) == z * z


def test_product_matrix_columns_match_sympy(rng):
    comps = [random_poly(rng, 2, 2) for _ in range(3)]
    P = build_product_matrix(comps, 3)
    s1, s2 = sympy.symbols("z1 z2")
    def to_sym(g):
        return sum(c * s1 ** e[0] * s2 ** e[1] for e, c in g.terms.items())


    sym = [sympy.Poly(to_sym(g), s1, s2) for g in comps]
    for e in itertools.islice(monomials_glex(3, max_individual=2), 12):
        want = sympy.Poly(1, s1, s2)
        for g, k in zip(sym, e):
            want = want * g ** k
        assert sympy.expand(to_sym(P.column(e)) - want.as_expr()) == 0


def test_product_matrix_labels_are_glex():
    P = build_product_matrix([z, z], 3)
    labels = list(P.labels())
    assert labels[:5] == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1)]
    assert len(labels) == 9


# ---------------------------------------------------------------- first dependency

def test_first_dependency_identical_components():
    cert = first_dependency(build_product_matrix([z, z], 3))
    assert cert.labels[-1] == (0, 1)
    assert list(cert.coefficients) == [0, 1]
    assert cert.monic(2) == x(2, 2) - x(2, 1)


def test_first_dependency_zero_component():
    cert = first_dependency(build_product_matrix([z, ZERO], 3))
    assert cert.labels[-1] == (0, 1)
    assert all(f == 0 for f in cert.coefficients)


def test_first_dependency_square():
    P = build_product_matrix([z, z * z], 5)
    cert = first_dependency(P)
    combo = SparsePoly.zero(1)
    for e, f in zip(cert.labels, cert.coefficients):
        combo = combo + P.column(e).scale(f)
    assert combo == P.column(cert.labels[-1])
    assert cert.labels[-1] == (2, 0)
    assert cert.monic(2) == x(2, 1) * x(2, 1) - x(2, 2)


# ---------------------------------------------------------------- rank extractor

def test_rank_extractor_shape():
    assert rank_extractor(2, 2, 3) == [[2, 4, 8], [4, 16, 64]]


def test_find_alpha_single_column():
    params, _ = params_for([z, z * z])
    assert params.K == 4
    params, _ = params_for([SparsePoly.constant(1, 2), SparsePoly.constant(1, 3)])
    assert params.K == 2 and params.alpha == 1


def test_find_alpha_needs_distinct_points():
    # columns 1 and z agree at z = 1, so alpha = 1 collapses them
    params, _ = params_for([z, z])
    assert params.K == 3 and params.alpha == 2


def test_find_alpha_skips_killed_column():
    # alpha = 1 gives the all-ones functional, which kills (1, -1)
    assert find_alpha_for_matrix([[1], [-1]]) == 2
    assert find_alpha_for_matrix([[1], [1]]) == 1


def test_find_alpha_square_full_rank():
    M = [[1, 2], [3, 4]]
    a = find_alpha_for_matrix(M)
    E = sympy.Matrix(rank_extractor(a, 2, 2))
    assert (E * sympy.Matrix(M)).rank() == 2


def test_find_alpha_tall_rank_deficient_trials():
    rng = random.Random(7)
    for _ in range(50):
        B = sympy.Matrix([[rng.randint(-3, 3) for _ in range(2)] for _ in range(8)])
        C = sympy.Matrix([[rng.randint(-3, 3) for _ in range(3)] for _ in range(2)])
        M = B * C
        r = M.rank()
        if r == 0:
            continue
        a = find_alpha_for_matrix(M.tolist(), r)
        assert a <= 8 * r
        assert (sympy.Matrix(rank_extractor(a, r, 8)) * M).rank() == r


def test_extracted_certificate_recombines(rng):
    comps = [random_poly(rng, 1, 2) for _ in range(2)]
    params, cert = params_for(comps)
    rows = compressed_rows_exact(comps, cert.labels, params.alpha, params.Delta, params.K - 1)
    for row in rows:
        assert sum(f * row[j] for j, f in enumerate(cert.coefficients)) == row[-1]


# ---------------------------------------------------------------- M~

def test_Mtilde_rows():
    comps = [z, z]
    params, _ = params_for(comps)
    Mt = build_Mtilde(comps, params)
    # row 0 is the evaluation at (1, ..., 1)
    assert Mt.numeric[0] == [1, 1, 1]
    assert Mt.entry(0, 1) == 1
    assert Mt.entry(params.K - 1, 2) == SparsePoly.monomial((0, 1), 1)


def test_Mtilde_row_one_is_direct_evaluation(rng):
    comps = [random_poly(rng, 1, 2), random_poly(rng, 1, 1)]
    params, _ = params_for(comps)
    if params.K < 3:
        pytest.skip("needs two numeric rows")
    Mt = build_Mtilde(comps, params)
    pt = extractor_point(params.alpha, 1, params.Delta, 1)
    vals = [g.evaluate(pt) for g in comps]
    for j, e in enumerate(params.labels):
        want = 1
        for v, k in zip(vals, e):
            want *= v ** k
        assert Mt.numeric[1][j] == want


def _is_multiple(A, B):
    """A = c*B for a nonzero rational c."""
    if A.is_zero() or B.is_zero() or set(A.terms) != set(B.terms):
        return False
    e0 = next(iter(B.terms))
    c = Fraction(A.terms[e0]) / Fraction(B.terms[e0])
    return c != 0 and all(Fraction(A.terms[e]) == c * Fraction(B.terms[e]) for e in B.terms)


@pytest.mark.parametrize("comps,want", [
    ([z, z], x(2, 1) - x(2, 2)),
    ([z, z * z], x(2, 1) * x(2, 1) - x(2, 2)),
    ([z, ZERO], x(2, 2)),
])
def test_annihilator_direct_examples(comps, want):
    params, _ = params_for(comps)
    A = annihilator_direct(build_Mtilde(comps, params), comps)
    assert _is_multiple(A, want)
    assert all(c == int(c) for c in A.terms.values())


# ---------------------------------------------------------------- encoder of M~

def _encoder_table(G, params):
    C = encode_Mtilde(G, params)
    n, L, K = params.n, params.L, params.K
    return C, n, L, K


def test_encoder_full_equality_identical_components():
    G = ExplicitMap.from_polys([z, z])
    comps = G.materialize()
    params, _ = params_for(comps)
    Mt = build_Mtilde(comps, params)
    C = encode_Mtilde(G, params)
    n, L, K = params.n, params.L, params.K
    rng = random.Random(1)
    p = 2**31 - 1
    for _ in range(5):
        xs = [rng.randrange(p) for _ in range(n)]
        for i in range(K):
            for j in range(K):
                bits = [(i >> (L - 1 - t)) & 1 for t in range(L)]
                bits += [(j >> (L - 1 - t)) & 1 for t in range(L)]
                got = evaluate_mod(C, xs + bits, p)[0]
                want = Mt.entry(i, j)
                want = want.evaluate_mod(xs, p) if isinstance(want, SparsePoly) else want % p
                assert got == want, (i, j)


def test_encoder_last_row_sign(rng):
    G = ExplicitMap.from_polys([z, z * z])
    params, _ = params_for(G.materialize())
    C = encode_Mtilde(G, params)
    K, L = params.K, params.L
    xs = [3, 5]
    ibits = [((K - 1) >> (L - 1 - t)) & 1 for t in range(L)]
    for j, e in enumerate(params.labels):
        jbits = [(j >> (L - 1 - t)) & 1 for t in range(L)]
        want = (-1) ** (K - 1) * 3 ** e[0] * 5 ** e[1]
        assert evaluate(C, xs + ibits + jbits)[0] == want


def test_encoder_has_one_map_instance(rng):
    for comps in ([z, z], [z, z * z], [random_poly(rng, 2, 2) for _ in range(4)]):
        G = ExplicitMap.from_polys(comps)
        params, _ = params_for(G.materialize())
        C = encode_Mtilde(G, params)
        assert C.count_instances("C_G") == 1


def test_encoder_is_projection_free():
    G = ExplicitMap.from_polys([z, z * z])
    params, _ = params_for(G.materialize())
    C = encode_Mtilde(G, params)
    assert all(g.op not in ("proj", "sum", "prod") for g in C.gates)


# ---------------------------------------------------------------- pipeline

def test_truncation_case():
    res = annihilate(ExplicitMap.from_polys([z, z, z, z]))
    assert res.A.nvars == 4
    assert all(e[2] == 0 and e[3] == 0 for e in res.A.terms)
    assert poly_compose(res.A, [z, z, z, z]).is_zero()
    assert res.report["n_used"] == 2


def test_square_map_circuit_is_proportional():
    res = annihilate(ExplicitMap.from_polys([z, z * z]))
    assert _is_multiple(res.A, x(2, 1) * x(2, 1) - x(2, 2))
    rng = random.Random(5)
    p = 2**61 - 1
    ratio = None
    for _ in range(20):
        pt = [rng.randrange(1, p) for _ in range(2)]
        a = res.A.evaluate_mod(pt, p)
        c = evaluate_mod(res.circuit, pt, p)[0]
        if a == 0:
            assert c == 0
            continue
        r = c * pow(a, -1, p) % p
        ratio = ratio if ratio is not None else r
        assert r == ratio
    K = res.params.K
    assert ratio == (-1) ** (K - 1) % p


def test_report_fields():
    res = annihilate(ExplicitMap.from_polys([z, z * z]))
    for key in ("D", "K", "R", "alpha", "scalar", "size_C_A", "size_Mtilde"):
        assert key in res.report
    assert res.report["D"] <= 3 * 1 * 2 + 1


CORPUS = [
    [z, z], [z, z * z], [z, ZERO], [z + 1, z * z - z], [z, z, z],
    [x(2, 1), x(2, 2), x(2, 1) * x(2, 2), x(2, 1) + x(2, 2)],
    [x(2, 1) * x(2, 1), x(2, 2), x(2, 1) - x(2, 2), SparsePoly.constant(2, 3)],
]


@pytest.mark.parametrize("comps", CORPUS)
def test_corpus_properties(comps):
    m = comps[0].nvars
    d = max(1, max(g.degree() for g in comps))
    res = annihilate(ExplicitMap.from_polys(comps), build_circuit=False)
    assert not res.A.is_zero()
    assert res.A.individual_degree() <= res.params.D - 1 <= 3 * m * d
    assert res.report["D"] <= 3 * m * d + 1
    assert poly_compose(res.A, comps).is_zero()


def test_lex_first_nullspace_vector(rng):
    comps = [random_poly(rng, 1, 2) for _ in range(2)]
    res = annihilate(ExplicitMap.from_polys(comps), build_circuit=False)
    P = build_product_matrix(comps, res.params.D)
    labels = res.params.labels
    # the first K-1 columns are independent, so the nullspace of the first K is one-dimensional
    rows = sorted({e for lab in labels for e in P.column(lab).terms})
    M = sympy.Matrix([[P.column(lab).terms.get(r, 0) for lab in labels] for r in rows])
    ns = M.nullspace()
    assert len(ns) == 1
    vec = [res.A.terms.get(lab, 0) for lab in labels]
    ratio = [sympy.Rational(v) / w for v, w in zip(vec, ns[0]) if w != 0]
    assert len(set(ratio)) == 1
    assert len(res.A.terms) == sum(1 for w in ns[0] if w != 0)


def test_multilinear_mode():
    res = annihilate(ExplicitMap.from_polys([z, z, z * z]), multilinear=True,
                     build_circuit=False)
    assert res.A.is_multilinear()
    assert res.params.D == 2


def test_rejects_too_few_outputs():
    with pytest.raises(ValueError):
        annihilate(ExplicitMap.from_polys([z]))


# ---------------------------------------------------------------- files

def test_map_file_round_trip(rng):
    G = ExplicitMap.from_polys([z * z + 2, z - 1, z])
    text = format_map(G)
    H = parse_map(text)
    assert format_map(H) == text
    assert H.materialize() == G.materialize()


# ---------------------------------------------------------------- equations

def test_grid_size():
    assert len(grid_points(2, 2)) == 6
    assert len(grid_points(1, 1)) == 2


def test_equation_on_two_point_grid():
    eq = build_equation(1, 1, 1)
    assert eq.grid == [(0,), (1,)]
    assert eq.A.is_multilinear() and not eq.A.is_zero()
    for a in range(-10, 11):
        assert eq.A.evaluate(eq.instance_vector([a])) == 0


def test_multilinear_dimension_count_failure():
    with pytest.raises(AnnihilatorError):
        annihilate(ExplicitMap.from_polys([z, z * z]), multilinear=True)


def test_equation_vanishes_on_template_instances():
    eq = build_equation(2, 2, 2)
    assert eq.A.is_multilinear() and not eq.A.is_zero()
    rng = random.Random(0)
    for _ in range(20):
        vals = [rng.randint(-20, 20) for _ in eq.free_params]
        assert eq.A.evaluate(eq.instance_vector(vals)) == 0
