"""Exact scalars, sparse polynomials, exact linear algebra and identity testing."""

from .matrix import (DependencyResult, ExactMatrix, cofactor_det, exact_det, exact_rank,
                     exact_rank_and_first_dependency)
from .pit import PitResult, Verdict, zero_test_random
from .poly import (SparsePoly, compositions, format_poly, glex_key, monomials_glex,
                   parse_poly, poly_compose, poly_mul)
from .scalars import MERSENNE_61, Fp, normalize

__all__ = [
    "DependencyResult", "ExactMatrix", "Fp", "MERSENNE_61", "PitResult", "SparsePoly",
    "Verdict", "cofactor_det", "compositions", "exact_det", "exact_rank",
    "exact_rank_and_first_dependency", "format_poly", "glex_key", "monomials_glex",
    "normalize", "parse_poly", "poly_compose", "poly_mul", "zero_test_random",
]
