import random

import pytest

from projann.algebra.poly import SparsePoly, monomials_glex

ACCEPTANCE = {}


def random_poly(rng, nvars, degree, lo=-3, hi=3, force_degree=True):
    terms = {e: rng.randint(lo, hi) for e in monomials_glex(nvars, max_total=degree)}
    if force_degree and degree > 0:
        top = [e for e in terms if sum(e) == degree]
        e = rng.choice(top)
        if terms[e] == 0:
            terms[e] = rng.choice([v for v in range(lo, hi + 1) if v])
    return SparsePoly(nvars, terms)


@pytest.fixture
def rng():
    return random.Random(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
