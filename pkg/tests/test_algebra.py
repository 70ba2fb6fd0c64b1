import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from projann.algebra import (ExactMatrix, SparsePoly, Verdict, cofactor_det, exact_det,
                             exact_rank, exact_rank_and_first_dependency, format_poly,
                             parse_poly, poly_compose, poly_mul, zero_test_random)
from projann.algebra.poly import PolyFormatError, glex_key, monomials_glex
from projann.algebra.scalars import Fp, normalize, parse_rational

from conftest import random_poly


def x(n, k):
    return SparsePoly.var(n, k)


def test_difference_of_squares_and_zero():
    x1 = x(1, 1)
    assert poly_mul(x1 + 1, x1 - 1) == x1 * x1 - 1
    assert poly_mul(x1 + 1, SparsePoly.zero(1)).is_zero()


def test_cube_matches_repeated_multiplication():
    s = x(2, 1) + x(2, 2)
    cube = s ** 3
    assert cube == poly_mul(poly_mul(s, s), s)
    assert cube.coeff((2, 1)) == 3 and cube.coeff((3, 0)) == 1


def test_arity_mismatch():
    with pytest.raises(ValueError):
        poly_mul(x(1, 1), x(2, 1))
    with pytest.raises(ValueError):
        poly_compose(x(2, 1), [x(1, 1)])


def test_compose_examples():
    z = x(1, 1)
    assert poly_compose(x(2, 1) - x(2, 2), [z, z]).is_zero()
    assert poly_compose(x(2, 1) ** 2 - x(2, 2), [z, z * z]).is_zero()
    z1, z2 = x(2, 1), x(2, 2)
    assert poly_compose(x(1, 1), [z1 + z2]) == z1 + z2


def test_graded_lex_order():
    order = list(monomials_glex(2, max_total=2))
    assert order == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    p = x(2, 2) + x(2, 1) ** 2 + 1
    assert [e for e, _ in p.items()] == sorted(p.terms, key=glex_key)


def test_no_zero_coefficients_stored():
    p = x(2, 1) - x(2, 1)
    assert len(p) == 0 and p.is_zero()
    assert SparsePoly(2, {(1, 0): 0, (0, 1): 2}).terms == {(0, 1): 2}


def test_rationals_normalized():
    q = normalize(Fraction(6, -4))
    assert q == Fraction(-3, 2) and q.denominator > 0
    assert normalize(Fraction(4, 2)) == 2 and isinstance(normalize(Fraction(4, 2)), int)
    assert parse_rational("-3/6") == Fraction(-1, 2)


def test_prime_field_moduli_must_match():
    with pytest.raises(ValueError):
        Fp(1, 7) + Fp(1, 11)
    assert (Fp(3, 7) * Fp(5, 7)).value == 1


def test_poly_file_round_trip():
    p = SparsePoly(3, {(2, 0, 1): Fraction(-3, 4), (0, 0, 0): 5, (0, 1, 0): -1})
    text = format_poly(p)
    assert parse_poly(text) == p
    assert format_poly(parse_poly(text)) == text


@pytest.mark.parametrize("text,line", [
    ("vars 2\n1 : 1\n", 2), ("nope\n", 1), ("vars 1\n1 : 1\n2 : 1\n", 3), ("vars 1\nx : 1\n", 2),
])
def test_poly_file_errors(text, line):
    with pytest.raises(PolyFormatError) as err:
        parse_poly(text)
    assert err.value.line_no == line


def test_rank_examples():
    r = exact_rank_and_first_dependency(ExactMatrix([[1, 0, 0], [0, 1, 0], [0, 0, 1]]))
    assert (r.rank, r.K) == (3, None)
    r = exact_rank_and_first_dependency(ExactMatrix([[4, 4], [-2, -2]]))
    assert r.K == 2 and list(r.coefficients) == [1]


def test_rank3_dependency_recombines(rng):
    for _ in range(20):
        B = [[rng.randint(-4, 4) for _ in range(3)] for _ in range(5)]
        C = [[rng.randint(-4, 4) for _ in range(4)] for _ in range(3)]
        M = [[sum(B[i][k] * C[k][j] for k in range(3)) for j in range(4)] for i in range(5)]
        res = exact_rank_and_first_dependency(ExactMatrix(M))
        assert res.rank == sympy.Matrix(M).rank()
        if res.K is not None:
            K = res.K
            for row in M:
                assert sum(Fraction(f) * row[j] for j, f in enumerate(res.coefficients)) == row[K - 1]
            assert sympy.Matrix([r[:K - 1] for r in M]).rank() == K - 1


def test_det_examples(rng):
    assert exact_det(ExactMatrix([[1, 0], [0, 1]])) == 1
    for _ in range(10):
        a, b, c, d = (rng.randint(-9, 9) for _ in range(4))
        assert exact_det(ExactMatrix([[a, b], [c, d]])) == a * d - b * c
    with pytest.raises(ValueError):
        exact_det(ExactMatrix([[1, 2, 3], [4, 5, 6]]))


@pytest.mark.parametrize("N", [1, 2, 3, 4, 5, 6])
def test_det_matches_cofactor(N, rng):
    for _ in range(5):
        M = [[rng.randint(-6, 6) for _ in range(N)] for _ in range(N)]
        assert exact_det(ExactMatrix(M)) == cofactor_det(M) == sympy.Matrix(M).det()


def test_pit_examples():
    assert zero_test_random(SparsePoly.zero(3)).verdict is Verdict.ZERO
    res = zero_test_random(x(2, 1) - x(2, 2), p=2**31 - 1, trials=20)
    assert res.verdict is Verdict.NONZERO and res.witness is not None
    s = x(2, 1) + x(2, 2)
    q = s * s - x(2, 1) ** 2 - 2 * x(2, 1) * x(2, 2) - x(2, 2) ** 2
    assert q.is_zero() and zero_test_random(q).verdict is Verdict.ZERO
    with pytest.raises(ValueError):
        zero_test_random(x(1, 1) ** 5, p=7)


polys = st.builds(lambda seed, deg: random_poly(random.Random(seed), 2, deg, force_degree=False),
                  st.integers(0, 10**6), st.integers(0, 3))


@settings(max_examples=60, deadline=None)
@given(polys, polys)
def test_mul_commutes(a, b):
    assert poly_mul(a, b) == poly_mul(b, a)
    if not a.is_zero() and not b.is_zero():
        assert (a * b).degree() == a.degree() + b.degree()


@settings(max_examples=60, deadline=None)
@given(polys)
def test_identity_substitution(a):
    assert poly_compose(a, [x(2, 1), x(2, 2)]) == a


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 5), st.integers(1, 6))
def test_dependency_recombines_exactly(seed, rows, cols):
    r = random.Random(seed)
    M = [[r.randint(-2, 2) for _ in range(cols)] for _ in range(rows)]
    res = exact_rank_and_first_dependency(ExactMatrix(M))
    assert res.rank == exact_rank(ExactMatrix(M))
    if res.K is not None:
        for row in M:
            assert sum(Fraction(f) * row[j] for j, f in enumerate(res.coefficients)) == row[res.K - 1]


@settings(max_examples=30, deadline=None)
@given(polys)
def test_pit_never_calls_zero_nonzero(a):
    assert zero_test_random(a - a).verdict is Verdict.ZERO
