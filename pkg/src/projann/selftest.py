"""Small worked examples with known answers, run by `projann selftest`."""

from __future__ import annotations

from typing import List, TextIO

from .algebra.matrix import ExactMatrix, exact_det, exact_rank_and_first_dependency
from .algebra.pit import Verdict, zero_test_random
from .algebra.poly import SparsePoly, poly_compose
from .circuit.builder import Builder
from .circuit.evaluate import evaluate, expand
from .circuit.ir import Circuit, CircuitError, Gate, constant_free_check, find_violation


def _x(n, k):
    return SparsePoly.var(n, k)


def _poly_algebra():
    x1 = _x(1, 1)
    assert (x1 + 1) * (x1 - 1) == x1 * x1 - 1
    assert (x1 * 0).is_zero()


def _compose():
    z = _x(1, 1)
    x1, x2 = _x(2, 1), _x(2, 2)
    assert poly_compose(x1 - x2, [z, z]).is_zero()
    z1, z2 = _x(2, 1), _x(2, 2)
    assert poly_compose(_x(1, 1), [z1 + z2]) == z1 + z2


def _rank():
    I3 = ExactMatrix([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    r = exact_rank_and_first_dependency(I3)
    assert r.rank == 3 and r.K is None
    dup = ExactMatrix([[2, 2], [3, 3]])
    r = exact_rank_and_first_dependency(dup)
    assert r.K == 2 and tuple(r.coefficients) == (1,)


def _det():
    assert exact_det(ExactMatrix([[1, 0], [0, 1]])) == 1
    assert exact_det(ExactMatrix([[3, 7], [2, 5]])) == 3 * 5 - 7 * 2


def _pit():
    assert zero_test_random(SparsePoly.zero(2)).verdict is Verdict.ZERO
    assert zero_test_random(_x(2, 1) - _x(2, 2), p=2**31 - 1).verdict is Verdict.NONZERO


def _circuit_checks():
    b = Builder(2)
    ok = b.build([b.add(b.input(1), b.input(2))])
    assert find_violation(ok) is None and ok.size == 2
    bad = Circuit(1, (Gate("add", 1, 1), Gate("input", var=1)), (0,))
    assert isinstance(find_violation(bad), CircuitError)
    b = Builder(1)
    five = b.const(5)
    assert constant_free_check(b.build([five]))


def _binders():
    b = Builder(2)
    x, z = b.input(1), b.input(2)
    c = b.build([b.proj(2, 1, b.mul(z, x))])
    assert evaluate(c, {1: 5})[0] == 5
    b = Builder(2)
    x, z = b.input(1), b.input(2)
    c = b.build([b.sum(2, b.add(b.mul(z, x), b.one()))])
    assert evaluate(c, {1: 3})[0] == 5
    b = Builder(3)
    x1, x2, z = b.input(1), b.input(2), b.input(3)
    c = b.build([b.proj(3, 0, b.add(b.mul(z, x1), x2))])
    assert expand(c)[0] == _x(3, 2)


def _gadgets():
    from .gadgets import build_EQ, build_GT, build_INC, build_LT, build_mon
    assert evaluate(build_EQ(3), [1, 0, 1, 1, 0, 1])[0] == 1
    assert evaluate(build_GT(3), [1, 1, 0, 1, 0, 1])[0] == 1
    assert evaluate(build_LT(3), [1, 1, 0, 1, 0, 1])[0] == 0
    assert evaluate(build_INC(3), [0, 1, 1]) == [1, 0, 0]
    assert evaluate(build_INC(3), [0, 0, 0]) == [0, 0, 1]
    # x = (3, 5), e = (2, 1) with two exponent bits each
    assert evaluate(build_mon(2, 2), [3, 5, 1, 0, 0, 1])[0] == 45


def _annihilator():
    from .annihilator import ExplicitMap, annihilate
    z = _x(1, 1)
    res = annihilate(ExplicitMap.from_polys([z, SparsePoly.zero(1)]), build_circuit=False)
    A = res.A
    assert len(A) == 1 and next(iter(A.terms)) == (0, 1)
    res = annihilate(ExplicitMap.from_polys([z, z, z, z]), build_circuit=False)
    assert all(e[2] == 0 and e[3] == 0 for e in res.A.terms)
    assert poly_compose(res.A, [z, z, z, z]).is_zero()


def _det_compiler():
    from .detcompiler import (LayeredABP, abp_path_sum, det_circuit, encoder_from_matrix,
                              identity_encoder, mv_abp, mv_sign)
    A = LayeredABP([["s"], ["t"]], {1: [("s", "t", 7)]}, "s", "t")
    assert abp_path_sum(A) == 7
    A = LayeredABP([["s"], ["a", "b"], ["t"]],
                   {1: [("s", "a", 2), ("s", "b", 5)], 2: [("a", "t", 3), ("b", "t", 1)]},
                   "s", "t")
    assert abp_path_sum(A) == 11
    assert mv_sign(1) * abp_path_sum(mv_abp([[4]])) == 4
    assert mv_sign(2) * abp_path_sum(mv_abp([[3, 7], [2, 5]])) == 1
    assert evaluate(det_circuit(identity_encoder(4), 4), {})[0] == 1
    assert evaluate(det_circuit(encoder_from_matrix([[3, 7], [2, 5]]), 2), {})[0] == 1


def _streaming():
    from .coeff.streaming import from_int, read_all, stream_add, stream_sub
    s = stream_add(from_int(5, 2), from_int(3, 2), 2)
    assert s.to_int() == 8
    d = stream_sub(from_int(3, 2), from_int(5, 2), 2)
    assert d.to_int() == -2 and read_all(d)[0] == 1


def _coeff():
    from .coeff.coefffn import (cf_table_circuit, circuit_from_coeff_fn, coeff_fn_of_circuit,
                                monotone_split)
    b = Builder(1)
    c = b.build([b.neg(b.input(1))])
    cf = coeff_fn_of_circuit(c)
    assert cf.query((1,), 0) == 1
    sp = monotone_split(c)
    assert sp.pos is None and expand(sp.neg)[0] == _x(1, 1)
    b = Builder(1)
    one = b.build([b.one()])
    T, db, cb = cf_table_circuit(coeff_fn_of_circuit(one))
    F = circuit_from_coeff_fn(T, 1, db, cb)
    assert expand(F)[0] == SparsePoly.constant(F.nvars, 1)


def _qbf():
    from .coeff.qbf import arithmetize_qbf, parse_qbf
    C, _ = arithmetize_qbf(parse_qbf("forall y\nmatrix or y not y\n"))
    assert evaluate(C, {})[0] == 1
    C, idx = arithmetize_qbf(parse_qbf("free x\nexists y\nmatrix and y x\n"))
    assert evaluate(C, {idx["x"]: 1})[0] == 1
    assert evaluate(C, {idx["x"]: 0})[0] == 0


def _grid():
    from .gadgets import grid_points
    assert len(grid_points(2, 2)) == 6


CASES: List[tuple] = [
    ("poly-algebra", _poly_algebra), ("compose", _compose), ("rank", _rank), ("det", _det),
    ("pit", _pit), ("circuit-checks", _circuit_checks), ("binders", _binders),
    ("gadgets", _gadgets), ("grid", _grid), ("annihilator", _annihilator),
    ("det-compiler", _det_compiler), ("streaming", _streaming), ("coeff", _coeff),
    ("qbf", _qbf),
]


def run_selftest(log: TextIO | None = None) -> List[str]:
    failures = []
    for name, fn in CASES:
        try:
            fn()
            ok = True
        except Exception as exc:          # report every failing case, not just the first
            ok = False
            if log is not None:
                log.write(f"{name}: {type(exc).__name__}: {exc}\n")
        if log is not None:
            log.write(f"{'ok' if ok else 'FAIL'} {name}\n")
        if not ok:
            failures.append(name)
    return failures
