import itertools
import random

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from projann.algebra import ExactMatrix, SparsePoly, exact_det
from projann.circuit import evaluate, evaluate_lanes, evaluate_mod, expand, size
from projann.detcompiler import (ExplicitABP, LayeredABP, abp_file_path_sum, abp_path_sum,
                                 abp_path_sum_by_enumeration, compile_to_projection_circuit,
                                 det_circuit, encode_mv_abp, encoder_from_matrix, format_abp,
                                 identity_encoder, mv_abp, mv_path_sum_mod, mv_sign,
                                 pad_to_power_of_two, parse_abp)
from projann.randomgen import random_matrix

P = 2**31 - 1


def test_abp_examples():
    one = LayeredABP([["s"], ["t"]], {1: [("s", "t", 7)]}, "s", "t")
    assert abp_path_sum(one) == 7
    two = LayeredABP([["s"], ["a", "b"], ["t"]],
                     {1: [("s", "a", 2), ("s", "b", 5)], 2: [("a", "t", 3), ("b", "t", 1)]},
                     "s", "t")
    assert abp_path_sum(two) == 11


def test_random_abp_matches_enumeration(rng):
    for _ in range(10):
        layers = [["s"]] + [[(l, k) for k in range(3)] for l in range(1, 4)] + [["t"]]
        edges = {}
        for l in range(1, 5):
            es = []
            for u in layers[l - 1]:
                for v in layers[l]:
                    if rng.random() < 0.7:
                        es.append((u, v, rng.randint(-4, 4)))
            edges[l] = es
        A = LayeredABP(layers, edges, "s", "t")
        assert abp_path_sum(A) == abp_path_sum_by_enumeration(A)


def test_mv_small_cases():
    assert mv_sign(1) * abp_path_sum(mv_abp([[5]])) == 5
    assert mv_sign(2) * abp_path_sum(mv_abp([[3, 7], [2, 5]])) == 3 * 5 - 7 * 2


@pytest.mark.parametrize("N", [1, 2, 3, 4, 5, 6])
def test_sign_is_constant_per_size(N, rng):
    sigma = mv_sign(N)
    assert sigma == (-1) ** N
    for _ in range(20 if N == 4 else 5):
        M = random_matrix(rng, N)
        assert abp_path_sum(mv_abp(M)) == sigma * exact_det(ExactMatrix(M))


@pytest.mark.parametrize("N", [7, 9, 12])
def test_modular_path_sum_for_larger_sizes(N, rng):
    p = 1000003
    for _ in range(3):
        M = random_matrix(rng, N)
        det = int(sympy.Matrix(M).det()) % p
        assert mv_path_sum_mod(M, p) == mv_sign(N) * det % p


def _all_labels(A: ExplicitABP):
    out = []
    for layer in range(1, A.depth + 2):
        for i in range(1, A.N + 1):
            for j in range(1, A.N + 1):
                out.append((layer, i, j))
    return out


def _encoder_values(A: ExplicitABP, pairs, p=P):
    L = A.label_bits
    env = {}
    for t in range(2 * L):
        env[A.nx + t + 1] = []
    for u, v in pairs:
        bits = A.pack(*u) + A.pack(*v)
        for t, bit in enumerate(bits):
            env[A.nx + t + 1].append(bit)
    return evaluate_lanes(A.circuit, env, p, len(pairs))[0]


@pytest.mark.parametrize("N", [1, 2, 3, 4, 5])
def test_encoder_agrees_with_materialized_program(N, rng):
    M = random_matrix(rng, N)
    A = encode_mv_abp(encoder_from_matrix(M), N)
    ref = mv_abp(M)
    labels = _all_labels(A)
    pairs = [(u, v) for u in labels for v in labels]
    got = _encoder_values(A, pairs)
    for (u, v), val in zip(pairs, got):
        want = ref.label(u[0], (u[1], u[2]), (v[1], v[2])) if v[0] == u[0] + 1 else 0
        assert val == want % P, (u, v)


def test_encoder_rejects_invalid_labels(rng):
    N = 3
    A = encode_mv_abp(encoder_from_matrix(random_matrix(rng, N)), N)
    L = A.label_bits
    env_rows = []
    for _ in range(300):
        bits = [rng.randint(0, 1) for _ in range(2 * L)]
        env_rows.append(bits)
    env = {A.nx + t + 1: [r[t] for r in env_rows] for t in range(2 * L)}
    vals = evaluate_lanes(A.circuit, env, P, len(env_rows))[0]
    wl, wi = A.layer_bits, A.index_bits

    def decode(bits):
        num = lambda bs: int("".join(map(str, bs)), 2)
        return num(bits[:wl]) + 1, num(bits[wl:wl + wi]) + 1, num(bits[wl + wi:])

    for r, val in zip(env_rows, vals):
        u, v = decode(r[:L]), decode(r[L:])
        if max(u[1:] + v[1:]) > N or u[0] > N + 1 or v[0] > N + 1:
            assert val == 0


def test_padding():
    A4 = encode_mv_abp(identity_encoder(4), 4)
    assert pad_to_power_of_two(A4) is A4
    rng = random.Random(3)
    M = random_matrix(rng, 3)
    A3 = encode_mv_abp(encoder_from_matrix(M), 3)
    P3 = pad_to_power_of_two(A3)
    assert P3.depth == 4
    # the chain edge (4,1,1) -> (5,1,1) has label 1, and the padded path sum is unchanged
    assert _encoder_values(P3, [((4, 1, 1), (5, 1, 1))]) == [1]
    assert _encoder_values(P3, [((4, 1, 2), (5, 1, 1)), ((5, 1, 1), (6, 1, 1))]) == [0, 0]
    labels = _all_labels(P3)
    by_layer = {}
    pairs = [(u, v) for u in labels for v in labels if v[0] == u[0] + 1]
    vals = _encoder_values(P3, pairs)
    for (u, v), val in zip(pairs, vals):
        if val:
            by_layer.setdefault(u[0], []).append(((u[1], u[2]), (v[1], v[2]), val))
    layered = LayeredABP([[(i, j) for i in range(1, 4) for j in range(1, 4)]] * 5, by_layer,
                         (1, 1), (1, 1))
    assert abp_path_sum(layered) % P == (mv_sign(3) * exact_det(ExactMatrix(M))) % P


def test_one_edge_program_compiles_to_its_label():
    A = encode_mv_abp(encoder_from_matrix([[6]]), 1)
    C = compile_to_projection_circuit(A, (1, 1, 1), (2, 1, 1))
    assert evaluate(C, {})[0] == -6
    assert evaluate(det_circuit(encoder_from_matrix([[6]]), 1), {})[0] == 6


def test_one_squaring_step_matches_direct_sum(rng):
    M = random_matrix(rng, 2)
    A = encode_mv_abp(encoder_from_matrix(M), 2)
    C = compile_to_projection_circuit(A)
    labels = _all_labels(A)
    s, t = (1, 1, 1), (3, 1, 1)
    direct = 0
    vals1 = _encoder_values(A, [(s, w) for w in labels])
    vals2 = _encoder_values(A, [(w, t) for w in labels])
    direct = sum(a * b for a, b in zip(vals1, vals2)) % P
    assert evaluate_mod(C, {}, P)[0] == direct
    assert direct == (M[0][0] * M[1][1] - M[0][1] * M[1][0]) * mv_sign(2) % P


def test_symbolic_two_by_two():
    xs = [SparsePoly.var(4, k) for k in range(1, 5)]
    C = det_circuit(encoder_from_matrix([[xs[0], xs[1]], [xs[2], xs[3]]]), 2)
    got = expand(C)[0]
    want = (xs[0] * xs[3] - xs[1] * xs[2]).pad(C.nvars)
    assert got == want


def test_identity_four():
    assert evaluate(det_circuit(identity_encoder(4), 4), {}) == [1]


def test_squaring_levels_nest_once():
    C = det_circuit(identity_encoder(8), 8)
    insts = {inst.tag: inst for inst in C.instances}
    for i in (1, 2, 3):
        assert C.count_instances(f"D{i}") == 1
    assert C.count_instances("D0") == 1
    for i in (1, 2):
        inner, outer = insts[f"D{i}"], insts[f"D{i + 1}"]
        assert outer.start <= inner.start and inner.end <= outer.end


def test_sizes_grow_with_encoder():
    small = det_circuit(identity_encoder(4), 4)
    big = det_circuit(encoder_from_matrix(random_matrix(random.Random(1), 4)), 4)
    assert size(identity_encoder(4)) < size(encoder_from_matrix(random_matrix(random.Random(1), 4)))
    assert size(small) < size(big)


def test_constant_free_output():
    from projann.circuit import constant_free_check
    assert constant_free_check(det_circuit(identity_encoder(3), 3))


def test_abp_file_round_trip(rng):
    M = random_matrix(rng, 3)
    A = mv_abp(M)
    text = format_abp(A, 0)
    parsed, labels = parse_abp(text)
    assert abp_file_path_sum(parsed, labels, []) == abp_path_sum(A)
    xs = [SparsePoly.var(2, k) for k in (1, 2)]
    s, a, b, t = (1, 1), (1, 1), (1, 2), (1, 1)
    B = LayeredABP([[s], [a, b], [t]],
                   {1: [(s, a, xs[0]), (s, b, 5)], 2: [(a, t, xs[1]), (b, t, 1)]}, s, t)
    text = format_abp(B, 2)
    parsed, labels = parse_abp(text)
    assert abp_file_path_sum(parsed, labels, [3, 4]) == 17


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 5))
def test_compiled_circuit_matches_determinant(seed, N):
    M = random_matrix(random.Random(seed), N)
    C = det_circuit(encoder_from_matrix(M), N)
    assert evaluate_mod(C, {}, P)[0] == exact_det(ExactMatrix(M)) % P


def test_singular_matrix_evaluates_to_zero_mod_p():
    C = det_circuit(encoder_from_matrix([[2, 2], [1, 1]]), 2)
    assert evaluate_mod(C, {}, P) == [0]
    assert evaluate(C, {}) == [0]
