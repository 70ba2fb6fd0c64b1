"""End-to-end acceptance checks, one test per criterion.

Each test records a `CRITERION k PASS/FAIL: ...` line that the terminal
summary prints at the end of the run.
"""

import itertools
import random
import subprocess
import sys
import time

import numpy as np
import sympy

from conftest import ACCEPTANCE, random_poly
from projann.algebra import SparsePoly, Verdict, exact_det, ExactMatrix, format_poly, zero_test_random
from projann.algebra.poly import parse_poly
from projann.annihilator import (ExplicitMap, annihilate, build_equation, encode_Mtilde,
                                 find_alpha_for_matrix, rank_extractor)
from projann.circuit import Builder, evaluate, evaluate_lanes, expand, format_circuit, parse_circuit, size
from projann.coeff import (WorkspaceMeter, coeff_fn_of_circuit, from_int, stream_add,
                           stream_list_sum, stream_mul, stream_sub, workspace_bounds)
from projann.coeff.coefffn import cf_table_circuit, circuit_from_coeff_fn
from projann.coeff.qbf import all_assignments, arithmetize_qbf, evaluate_qbf, random_qbf
from projann.detcompiler import det_circuit, encoder_from_matrix, identity_encoder
from projann.randomgen import random_circuit

M61 = 2**61 - 1


def record(k, ok, detail):
    line = f"CRITERION {k} {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE[k] = line
    print(line)
    return ok


# ---------------------------------------------------------------- 1

def _sympy_nullspace_check(comps, A):
    """Sum of A's coefficients times sympy-built products G^e over A's labels is 0."""
    m = comps[0].nvars
    zs = sympy.symbols(f"z1:{m + 1}")
    gs = [sympy.Poly(sum(c * sympy.prod([v ** k for v, k in zip(zs, e)])
                         for e, c in g.terms.items()) + 0 * zs[0], *zs) for g in comps]
    n = len(comps)
    labels = sorted(itertools.product(range(A.individual_degree() + 1), repeat=n),
                    key=lambda e: (sum(e), tuple(-x for x in e)))
    powers = {}

    def power(a, k):
        if (a, k) not in powers:
            powers[(a, k)] = gs[a] ** k
        return powers[(a, k)]

    total = sympy.Poly(0, *zs)
    for e in labels:
        c = A.terms.get(e, 0)
        if c:
            col = sympy.Poly(1, *zs)
            for a, k in enumerate(e):
                if k:
                    col = col * power(a, k)
            total = total + col * int(c)
    return total.is_zero


def test_criterion_1_annihilators():
    rng = random.Random(101)
    failures, worst, count = [], 0.0, 0
    t_suite = time.perf_counter()
    for m in (1, 2):
        for n in range(2 * m, 2 * m + 3):
            for d in (1, 2, 3):
                for trial in range(10):
                    comps = [random_poly(rng, m, d) for _ in range(n)]
                    t = time.perf_counter()
                    res = annihilate(ExplicitMap.from_polys(comps), build_circuit=False)
                    A = res.A
                    ok = (not A.is_zero() and A.individual_degree() <= 3 * m * d
                          and A.nvars == n)
                    from projann.algebra import poly_compose
                    ok = ok and poly_compose(A, comps).is_zero()
                    ok = ok and _sympy_nullspace_check(comps, A)
                    dt = time.perf_counter() - t
                    worst = max(worst, dt)
                    count += 1
                    if not ok or dt >= 10:
                        failures.append((m, n, d, trial, round(dt, 2)))
    total = time.perf_counter() - t_suite
    ok = not failures and total < 900
    record(1, ok, f"{count} maps, {len(failures)} failures, slowest {worst:.2f}s, "
                  f"suite {total:.1f}s")
    assert ok, failures


# ---------------------------------------------------------------- 2

def test_criterion_2_rank_extractor():
    rng = random.Random(202)
    t = time.perf_counter()
    bad = []
    for trial in range(50):
        n = rng.randint(1, 10)
        r = rng.randint(1, n)
        while True:
            M = sympy.Matrix([[rng.randint(-3, 3) for _ in range(r)] for _ in range(n)])
            if M.rank() == r:
                break
        alpha = find_alpha_for_matrix(M.tolist(), r)
        E = sympy.Matrix(rank_extractor(alpha, r, n))
        if not (1 <= alpha <= n * r and (E * M).rank() == r):
            bad.append((n, r, alpha))
    dt = time.perf_counter() - t
    ok = not bad and dt < 60
    record(2, ok, f"50 matrices, {len(bad)} failures, {dt:.1f}s")
    assert ok, bad


# ---------------------------------------------------------------- 3

def _pencil(rng, N):
    A = [[rng.randint(-5, 5) for _ in range(N)] for _ in range(N)]
    B = [[rng.randint(-5, 5) for _ in range(N)] for _ in range(N)]
    x = SparsePoly.var(1, 1)
    M = [[x.scale(B[i][j]) + A[i][j] for j in range(N)] for i in range(N)]
    return A, B, M


def test_criterion_3_determinant_compiler():
    rng = random.Random(303)
    t = time.perf_counter()
    bad = []
    X = sympy.Symbol("x1")
    for N in (2, 3, 4, 5, 8):
        for trial in range(20):
            if N == 4:
                M = [[rng.randint(-5, 5) for _ in range(N)] for _ in range(N)]
                C = det_circuit(encoder_from_matrix(M), N)
                if evaluate(C, {})[0] != exact_det(ExactMatrix(M)):
                    bad.append((N, trial))
                continue
            A, B, M = _pencil(rng, N)
            C = det_circuit(encoder_from_matrix(M), N)
            want = sympy.Poly((sympy.Matrix(A) + X * sympy.Matrix(B)).det(), X)
            if N <= 3:
                got = expand(C)[0]
                coeffs = {e[0]: c for e, c in got.terms.items() if all(v == 0 for v in e[1:])}
                if len(coeffs) != len(got.terms):
                    bad.append((N, trial))
                    continue
                wantc = {k[0]: int(c) for k, c in want.terms()}
                if {k: c for k, c in coeffs.items() if c} != {k: c for k, c in wantc.items() if c}:
                    bad.append((N, trial))
            else:
                pts = [rng.randrange(M61) for _ in range(20)]
                got = evaluate_lanes(C, {1: pts}, M61, 20)[0]
                exp = [int(want.eval(p)) % M61 for p in pts]
                if [int(v) for v in got] != exp:
                    bad.append((N, trial))
    dt = time.perf_counter() - t
    ok = not bad and dt < 300
    record(3, ok, f"N in 2,3,4,5,8 x 20 matrices, {len(bad)} mismatches, {dt:.1f}s")
    assert ok, bad


# ---------------------------------------------------------------- 4

def test_criterion_4_size_shape():
    t = time.perf_counter()
    Ns = [2, 4, 8, 16]
    sizes = [size(det_circuit(identity_encoder(N), N)) for N in Ns]
    L2 = np.array([np.log2(N) ** 2 for N in Ns])
    X = np.vstack([np.ones_like(L2), L2]).T
    (a, b), *_ = np.linalg.lstsq(X, np.array(sizes, dtype=float), rcond=None)
    resid = [abs(s - (a + b * l)) / s for s, l in zip(sizes, L2)]
    z = SparsePoly.var(1, 1)
    G = ExplicitMap.from_polys([z, z * z])
    res = annihilate(G, build_circuit=False)
    count = encode_Mtilde(G, res.params).count_instances("C_G")
    dt = time.perf_counter() - t
    ok = max(resid) <= 0.25 and count == 1 and dt < 120 and b > 0
    record(4, ok, f"sizes {sizes}, fit a={a:.1f} b={b:.1f}, max residual "
                  f"{100 * max(resid):.1f}%, C_G instances {count}, {dt:.1f}s")
    assert ok


# ---------------------------------------------------------------- 5

def _bits(value, s):
    W = 1 << s
    return [1 if value < 0 else 0] + [(abs(value) >> (W - i)) & 1 for i in range(1, W + 1)]


def _metered(o):
    meter = WorkspaceMeter()
    out, peak = [], 0
    for i in range(o.width + 1):
        meter.reset()
        out.append(o.query(i, meter))
        peak = max(peak, meter.peak)
    return out, peak


def _streaming_ok(rng):
    bad = 0
    for op in ("add", "sub", "list_sum", "mul"):
        for _ in range(500):
            if op == "mul":
                s = rng.randint(1, 4)
                half = 1 << (s - 1)
                a, b = (rng.randint(-(1 << half) + 1, (1 << half) - 1) for _ in range(2))
                o, want, L = stream_mul(from_int(a, s), from_int(b, s), s), a * b, 2
            elif op == "list_sum":
                s = rng.randint(1, 6)
                L = rng.randint(1, 9)
                lim = max(1, (1 << ((1 << s) - 1)) // L)
                vals = [rng.randint(-lim + 1, lim - 1) for _ in range(L)]
                o, want = stream_list_sum([from_int(v, s) for v in vals], s), sum(vals)
            else:
                s = rng.randint(1, 6)
                lim = 1 << ((1 << s) - 1)
                a, b = (rng.randint(-lim + 1, lim - 1) for _ in range(2))
                fn = stream_add if op == "add" else stream_sub
                o, want, L = fn(from_int(a, s), from_int(b, s), s), (a + b if op == "add" else a - b), 2
            bits, peak = _metered(o)
            if bits != _bits(want, s) or peak > workspace_bounds(s, L)[op]:
                bad += 1
    return bad


def _round_trip_ok(rng):
    bad = 0
    for _ in range(50):
        c = random_circuit(rng, 3, 15)
        cf = coeff_fn_of_circuit(c)
        T, dbits, cbits = cf_table_circuit(cf)
        F = circuit_from_coeff_fn(T, c.nvars, dbits, cbits)
        b = Builder(F.nvars)
        diff = b.build([b.sub(b.inline(c)[0], b.inline(F)[0])])
        res = zero_test_random(diff, p=M61, trials=100, rng=random.Random(rng.random()))
        if res.verdict is not Verdict.ZERO:
            bad += 1
    return bad


def _qbf_ok(rng):
    bad = 0
    for _ in range(100):
        nf = rng.randint(0, 4)
        nq = rng.randint(1, 10 - nf)
        q = random_qbf(rng, nq, nf, rng.randint(4, 14))
        C, idx = arithmetize_qbf(q)
        for env in all_assignments(q.free):
            got = evaluate(C, {idx[v]: x for v, x in env.items()})[0]
            if got not in (0, 1) or got != evaluate_qbf(q, env):
                bad += 1
                break
    return bad


def test_criterion_5_round_trips():
    rng = random.Random(505)
    t = time.perf_counter()
    s_bad = _streaming_ok(rng)
    r_bad = _round_trip_ok(rng)
    q_bad = _qbf_ok(rng)
    dt = time.perf_counter() - t
    ok = s_bad == r_bad == q_bad == 0 and dt < 600
    record(5, ok, f"streaming 4x500 ({s_bad} bad), coefficient round trips 50 ({r_bad} bad), "
                  f"QBF 100 ({q_bad} bad), {dt:.1f}s")
    assert ok


# ---------------------------------------------------------------- 6

def test_criterion_6_multilinear_equation():
    t = time.perf_counter()
    eq = build_equation(2, 2, 2)
    rng = random.Random(606)
    bad = 0
    for _ in range(100):
        vals = [rng.randint(-50, 50) for _ in eq.free_params]
        if eq.A.evaluate(eq.instance_vector(vals)) != 0:
            bad += 1
    dt = time.perf_counter() - t
    ok = (len(eq.grid) == 6 and len(eq.free_params) <= 2 and not eq.A.is_zero()
          and eq.A.is_multilinear() and bad == 0 and dt < 300)
    record(6, ok, f"grid 6, r={len(eq.free_params)}, A has {len(eq.A)} terms, "
                  f"{bad}/100 nonzero, {dt:.1f}s")
    assert ok


# ---------------------------------------------------------------- 7

def _cli(args):
    return subprocess.run([sys.executable, "-m", "projann.cli"] + args, capture_output=True)


def test_criterion_7_formats_and_determinism(tmp_path):
    t = time.perf_counter()
    rng = random.Random(707)
    bad = 0
    for _ in range(50):
        c = random_circuit(rng, 3, 15)
        text = format_circuit(c)
        if format_circuit(parse_circuit(text)) != text:
            bad += 1
        p = random_poly(rng, 3, 3)
        text = format_poly(p)
        if format_poly(parse_poly(text)) != text:
            bad += 1
    from projann.annihilator import format_map
    z = SparsePoly.var(1, 1)
    mp = tmp_path / "g.map"
    mp.write_text(format_map(ExplicitMap.from_polys([z, z * z, z + 1])))
    mat = tmp_path / "m.txt"
    mat.write_text("1 2 3\n4 5 6\n7 8 10\n")
    runs = []
    for k in range(2):
        d = tmp_path / f"r{k}"
        d.mkdir()
        r1 = _cli(["annihilate", "--map", str(mp), "--seed", "3", "--verify", "both",
                   "--out-poly", str(d / "a.poly"), "--out-circuit", str(d / "a.circ")])
        r2 = _cli(["det-compile", "--matrix", str(mat), "--seed", "3", "--out", str(d / "d.circ")])
        if r1.returncode or r2.returncode:
            bad += 1
        runs.append([(d / f).read_bytes() for f in ("a.poly", "a.circ", "d.circ")])
    same = runs[0] == runs[1]
    dt = time.perf_counter() - t
    ok = bad == 0 and same and dt < 60
    record(7, ok, f"100 file round trips ({bad} bad), CLI reruns identical: {same}, {dt:.1f}s")
    assert ok
