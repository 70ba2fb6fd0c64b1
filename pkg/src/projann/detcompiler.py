"""Determinant of an explicit matrix as a circuit with projection gates.

The lowering runs in three passes:

1. the clow-sequence branching program of the matrix, presented by an encoder
   circuit over packed vertex labels (layer, head, current);
2. padding of the layer count so the path length is a power of two;
3. repeated squaring of the adjacency matrix, where each squaring is one
   level of summation gates over a midpoint label.

Materialized counterparts (`mv_abp`, `abp_path_sum`) serve as oracles.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

from .algebra.matrix import ExactMatrix, exact_det
from .algebra.poly import SparsePoly
from .circuit.builder import Builder
from .circuit.ir import Circuit
from .gadgets import (BIT0, BIT1, Bit, ConstBit, b_and, b_not, bit_width, const_bits, eq_bits,
                      gate, gt_bits, inc_bits, lt_const)

Vertex = Tuple[int, Hashable]


# ------------------------------------------------------------------ materialized ABPs

@dataclass
class LayeredABP:
    """Layers 1..depth+1; `edges[l]` lists (u, v, label) from layer l to layer l+1."""
    layers: List[List[Hashable]]
    edges: Dict[int, List[Tuple[Hashable, Hashable, object]]]
    source: Hashable
    sink: Hashable

    @property
    def depth(self) -> int:
        return len(self.layers) - 1

    @property
    def width(self) -> int:
        return max(len(layer) for layer in self.layers)

    def edge_count(self) -> int:
        return sum(len(es) for es in self.edges.values())

    def label(self, layer: int, u, v):
        for a, b, lab in self.edges.get(layer, ()):
            if a == u and b == v:
                return lab
        return 0


def _label_value(lab, point):
    if isinstance(lab, SparsePoly):
        return lab.evaluate(point)
    return lab


def abp_path_sum(A: LayeredABP, point: Sequence = ()):
    """Sum over source-to-sink paths of the product of edge labels, layer by layer."""
    cur = {A.source: 1}
    for layer in range(1, A.depth + 1):
        nxt: Dict = {}
        for u, v, lab in A.edges.get(layer, ()):
            if u in cur:
                val = _label_value(lab, point)
                if val:
                    nxt[v] = nxt.get(v, 0) + cur[u] * val
        cur = {k: x for k, x in nxt.items() if x}
    return cur.get(A.sink, 0)


def abp_path_sum_by_enumeration(A: LayeredABP, point: Sequence = ()):
    """Explicit path enumeration; exponential, oracle use only."""
    out = {}
    for layer in range(1, A.depth + 1):
        for u, v, lab in A.edges.get(layer, ()):
            out.setdefault((layer, u), []).append((v, lab))
    total = 0

    def walk(layer, u, acc):
        nonlocal total
        if layer == A.depth + 1:
            if u == A.sink:
                total += acc
            return
        for v, lab in out.get((layer, u), ()):
            walk(layer + 1, v, acc * _label_value(lab, point))
    walk(1, A.source, 1)
    return total


def _neg(x):
    return -x


def mv_abp(M: Sequence[Sequence]) -> LayeredABP:
    """Clow-sequence branching program of an N x N matrix (entries scalars or SparsePoly).

    Vertex (i, j) of a layer means: the current clow has head i and sits at j.
    Its path sum equals sigma(N) * det(M) for a sign fixed by N.
    """
    N = len(M)
    if N < 1 or any(len(r) != N for r in M):
        raise ValueError("need a nonempty square matrix")
    verts = [(i, j) for i in range(1, N + 1) for j in range(1, N + 1)]
    layers = [list(verts) for _ in range(N + 1)]
    edges: Dict[int, list] = {}
    for l in range(1, N):
        es = []
        for (i, j) in verts:
            for k in range(i + 1, N + 1):
                if M[j - 1][k - 1]:
                    es.append(((i, j), (i, k), M[j - 1][k - 1]))
                if M[j - 1][i - 1]:
                    es.append(((i, j), (k, k), _neg(M[j - 1][i - 1])))
        edges[l] = es
    edges[N] = [((i, j), (1, 1), _neg(M[j - 1][i - 1])) for (i, j) in verts if M[j - 1][i - 1]]
    return LayeredABP(layers, edges, (1, 1), (1, 1))


_SIGMA: Dict[int, int] = {}
_CALIBRATION_PRIME = 1000003


def mv_path_sum_mod(M: Sequence[Sequence[int]], p: int) -> int:
    """Path sum of mv_abp(M) modulo a prime below 2^20, without materializing the program.

    The state is the N x N array of values at vertices (head, current) of a layer.
    """
    import numpy as np
    A = np.array(M, dtype=np.int64) % p
    N = A.shape[0]
    V = np.zeros((N, N), dtype=np.int64)
    V[0, 0] = 1
    upper = np.triu(np.ones((N, N), dtype=bool), k=1)      # k > i
    for _ in range(N - 1):
        VM = (V @ A) % p                                    # VM[i, k] = sum_j V[i, j] M[j, k]
        s = np.diagonal(VM).copy()                          # s[i] = sum_j V[i, j] M[j, i]
        W = np.where(upper, VM, 0)
        closed = (np.cumsum(s) - s) % p                     # sum over i < k of s[i]
        W[np.arange(N), np.arange(N)] = (W[np.arange(N), np.arange(N)] - closed) % p
        V = W % p
    s = np.diagonal((V @ A) % p)
    return int(-s.sum() % p)


def mv_sign(N: int) -> int:
    """The sign relating path sum and determinant, calibrated on generic integer matrices."""
    if N in _SIGMA:
        return _SIGMA[N]
    rng = random.Random(1000 + N)
    sigma = None
    checks = 0
    while checks < 2:
        M = [[rng.randint(-9, 9) for _ in range(N)] for _ in range(N)]
        if N <= 6:
            det = exact_det(ExactMatrix(M))
            ps = abp_path_sum(mv_abp(M))
        else:
            from .algebra._kernels import det_mod_p
            det = det_mod_p(M, _CALIBRATION_PRIME)
            ps = mv_path_sum_mod(M, _CALIBRATION_PRIME)
            det = det if 2 * det < _CALIBRATION_PRIME else det - _CALIBRATION_PRIME
            ps = ps if 2 * ps < _CALIBRATION_PRIME else ps - _CALIBRATION_PRIME
        if det == 0:
            continue
        if ps not in (det, -det):
            raise ArithmeticError(f"clow program disagrees with the determinant for N={N}")
        s = 1 if ps == det else -1
        if sigma is not None and s != sigma:
            raise ArithmeticError(f"sign calibration is not constant for N={N}")
        sigma = s
        checks += 1
    _SIGMA[N] = sigma
    return sigma


# ------------------------------------------------------------------ explicit ABPs

def matrix_encoder_arity(C: Circuit, N: int) -> int:
    """Number of x-variables of a matrix encoder: its variables are x, row bits, column bits."""
    nx = C.nvars - 2 * bit_width(N)
    if nx < 0 or len(C.outputs) != 1:
        raise ValueError(f"encoder with {C.nvars} variables cannot index a {N}x{N} matrix")
    return nx


@dataclass(frozen=True)
class ExplicitABP:
    """Encoder C(x, u, v) of a layered program over packed labels (layer-1, head-1, current-1).

    Layers are numbered 1..depth+1 with label field value layer-1. Variables
    are the nx x-variables, then the L bits of u, then the L bits of v.
    """
    circuit: Circuit
    nx: int
    N: int                  # matrix size
    depth: int              # path length (N before padding, a power of two after)
    layer_bits: int
    index_bits: int

    @property
    def label_bits(self) -> int:
        return self.layer_bits + 2 * self.index_bits

    def pack(self, layer: int, i: int, j: int) -> List[int]:
        """Bits of vertex (layer, (i, j)), all 1-based."""
        return ([int(c.value) for c in const_bits(layer - 1, self.layer_bits)]
                + [int(c.value) for c in const_bits(i - 1, self.index_bits)]
                + [int(c.value) for c in const_bits(j - 1, self.index_bits)])

    def env(self, x: Sequence, u: Tuple[int, int, int], v: Tuple[int, int, int]) -> list:
        return list(x) + self.pack(*u) + self.pack(*v)


def next_power_of_two(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


def _fields(bits: Sequence, wl: int, wi: int):
    return list(bits[:wl]), list(bits[wl:wl + wi]), list(bits[wl + wi:wl + 2 * wi])


def _chain(b: Builder, factors: Sequence[Bit]) -> Bit:
    """Left-to-right product; the evaluator stops early once a prefix vanishes."""
    acc: Bit = BIT1
    for f in factors:
        acc = b_and(b, acc, f)
    return acc


def encode_mv_abp(C: Circuit, N: int) -> ExplicitABP:
    """Encoder of the clow program of the matrix encoded by C.

    The encoder is valid(u) * valid(v) * (T1 + T2 + T3) with
      T1: (l, i, j) -> (l+1, i, k), k > i, l <= N-1, label  M[j, k]
      T2: (l, i, j) -> (l+1, k, k), k > i, l <= N-1, label -M[j, i]
      T3: (N, i, j) -> (N+1, 1, 1),                  label -M[j, i]
    """
    nx = matrix_encoder_arity(C, N)
    wi = bit_width(N)
    Np = next_power_of_two(N)
    wl = bit_width(Np + 1)
    L = wl + 2 * wi
    b = Builder(nx + 2 * L)
    ubits = [b.input(nx + 1 + t) for t in range(L)]
    vbits = [b.input(nx + L + 1 + t) for t in range(L)]
    lu, iu, ju = _fields(ubits, wl, wi)
    lv, iv, jv = _fields(vbits, wl, wi)
    xmap = {k: k for k in range(1, nx + 1)}

    def entry(rows, cols, tag):
        wiring = {nx + t + 1: rows[t] for t in range(wi)}
        wiring.update({nx + wi + t + 1: cols[t] for t in range(wi)})
        return b.inline(C, wiring, xmap, tag=tag)[0]

    m_jk = entry(ju, jv, "matrix")
    m_ji = b.neg(entry(ju, iu, "matrix"))
    step = eq_bits(b, lv, inc_bits(b, lu))
    mid = lt_const(b, lu, N - 1)
    last = eq_bits(b, lu, const_bits(N - 1, wl))
    zero_i = const_bits(0, wi)
    t1 = _chain(b, [step, mid, eq_bits(b, iu, iv), gt_bits(b, jv, iu), m_jk])
    t2 = _chain(b, [step, mid, eq_bits(b, iv, jv), gt_bits(b, iv, iu), m_ji])
    t3 = _chain(b, [step, last, eq_bits(b, iv, zero_i), eq_bits(b, jv, zero_i), m_ji])
    terms = [gate(b, t) for t in (t1, t2, t3) if not (isinstance(t, ConstBit) and t.value == 0)]
    g = b.add_list(terms)
    valid_u = _chain(b, [lt_const(b, lu, N + 1), lt_const(b, iu, N), lt_const(b, ju, N)])
    valid_v = _chain(b, [lt_const(b, lv, N + 1), lt_const(b, iv, N), lt_const(b, jv, N)])
    out = gate(b, _chain(b, [g, valid_u, valid_v]))
    return ExplicitABP(b.build([out]), nx, N, N, wl, wi)


def pad_to_power_of_two(A: ExplicitABP) -> ExplicitABP:
    """Append unit chain edges (l, 1, 1) -> (l+1, 1, 1) for N+1 <= l <= N' - 1 + 1."""
    Np = next_power_of_two(A.depth)
    if Np == A.depth:
        return A
    N, wl, wi, nx = A.N, A.layer_bits, A.index_bits, A.nx
    L = A.label_bits
    b = Builder(A.circuit.nvars)
    old = b.inline(A.circuit, tag="unpadded")[0]
    ubits = [b.input(nx + 1 + t) for t in range(L)]
    vbits = [b.input(nx + L + 1 + t) for t in range(L)]
    lu, iu, ju = _fields(ubits, wl, wi)
    lv, iv, jv = _fields(vbits, wl, wi)
    zero_i = const_bits(0, wi)
    chain = _chain(b, [
        eq_bits(b, lv, inc_bits(b, lu)),
        b_not(b, lt_const(b, lu, N)),          # l - 1 >= N, i.e. l >= N + 1
        lt_const(b, lu, Np),                   # l <= N'
        eq_bits(b, iu, zero_i), eq_bits(b, ju, zero_i),
        eq_bits(b, iv, zero_i), eq_bits(b, jv, zero_i),
    ])
    out = b.add(old, gate(b, chain))
    return ExplicitABP(b.build([out]), nx, N, Np, wl, wi)


def _interp(b: Builder, z: int, a: Bit, c: Bit) -> Bit:
    """(1 - z) * a + z * c for label bits a, c."""
    if isinstance(a, ConstBit) and isinstance(c, ConstBit):
        if a.value == c.value:
            return a
        return z if c.value else b.one_minus(z)
    if isinstance(a, ConstBit):
        zc = b.mul(z, c)
        return zc if a.value == 0 else b.add(b.one_minus(z), zc)
    if isinstance(c, ConstBit):
        za = b.mul(b.one_minus(z), a)
        return za if c.value == 0 else b.add(za, z)
    # selector-first products, so a fixed z drops the unused side entirely
    return b.add(b.mul(b.one_minus(z), a), b.mul(z, c))


def compile_to_projection_circuit(A: ExplicitABP, source: Tuple[int, int, int] = (1, 1, 1),
                                  sink: Tuple[int, int, int] | None = None,
                                  negate: bool = False) -> Circuit:
    """Entry (source, sink) of A^depth by repeated squaring.

    Level i has its own midpoint label w^(i) and selector z_i:
      P_i = D_{i-1}((1 - z_i) u + z_i w, (1 - z_i) w + z_i v)
      D_i(u, v) = sum over w of proj_{z_i=0} P_i * proj_{z_i=1} P_i
    Variables: x (nx), then per level i = 1..k the L bits of w^(i) and z_i.
    """
    depth = A.depth
    k = depth.bit_length() - 1
    if depth < 1 or (1 << k) != depth:
        raise ValueError(f"path length {depth} is not a power of two")
    if sink is None:
        sink = (depth + 1, 1, 1)
    L = A.label_bits
    nx = A.nx
    b = Builder(nx + k * (L + 1))

    def level_vars(i):
        base = nx + (i - 1) * (L + 1)
        return [base + 1 + t for t in range(L)], base + L + 1

    U: List[Bit] = [BIT1 if x else BIT0 for x in A.pack(*source)]
    V: List[Bit] = [BIT1 if x else BIT0 for x in A.pack(*sink)]
    for i in range(k, 0, -1):
        b.begin_instance(f"D{i}")
        wv, zv = level_vars(i)
        z = b.input(zv)
        W = [b.input(v) for v in wv]
        U, V = ([_interp(b, z, u, w) for u, w in zip(U, W)],
                [_interp(b, z, w, v) for w, v in zip(W, V)])
    wiring = {nx + t + 1: gate(b, U[t]) for t in range(L)}
    wiring.update({nx + L + t + 1: gate(b, V[t]) for t in range(L)})
    root = b.inline(A.circuit, wiring, {j: j for j in range(1, nx + 1)}, tag="D0")[0]
    for i in range(1, k + 1):
        wv, zv = level_vars(i)
        prod = b.mul(b.proj(zv, 0, root), b.proj(zv, 1, root))
        root = b.sum_over(wv, prod)
        b.end_instance(root)
    if negate:
        root = b.neg(root)
    return b.build([root])


def det_circuit(C: Circuit, N: int) -> Circuit:
    """det of the N x N matrix encoded by C; variables are C's x-variables then helpers."""
    A = pad_to_power_of_two(encode_mv_abp(C, N))
    return compile_to_projection_circuit(A, negate=mv_sign(N) < 0)


# ------------------------------------------------------------------ matrix encoders

def encoder_from_matrix(M: Sequence[Sequence], nx: int | None = None) -> Circuit:
    """Table-lookup encoder sum_{r,c} [row=r][col=c] * M[r][c] for scalar or SparsePoly entries."""
    from .polycircuit import poly_gates
    N = len(M)
    if nx is None:
        nx = max((e.nvars for r in M for e in r if isinstance(e, SparsePoly)), default=0)
    w = bit_width(N)
    b = Builder(nx + 2 * w)
    rows = [b.input(nx + 1 + t) for t in range(w)]
    cols = [b.input(nx + w + 1 + t) for t in range(w)]
    terms = []
    for r in range(N):
        er = eq_bits(b, rows, const_bits(r, w))
        for c in range(N):
            e = M[r][c]
            if isinstance(e, SparsePoly):
                if e.is_zero():
                    continue
                val = poly_gates(b, e)
            else:
                if e == 0:
                    continue
                val = b.const(e)
            terms.append(b.mul(gate(b, b_and(b, er, eq_bits(b, cols, const_bits(c, w)))), val))
    return b.build([b.add_list(terms)])


def identity_encoder(N: int) -> Circuit:
    w = bit_width(N)
    b = Builder(2 * w)
    rows = [b.input(1 + t) for t in range(w)]
    cols = [b.input(w + 1 + t) for t in range(w)]
    eq = b_and(b, eq_bits(b, rows, cols), lt_const(b, rows, N))
    return b.build([gate(b, eq)])


# ------------------------------------------------------------------ ABP files

def format_abp(A: LayeredABP, nvars: int) -> str:
    """Circuit-style file: gate lines for labels, then `edge (l,i,j) (l',i',j') = g<a>`."""
    from .circuit.textfmt import format_gate
    from .polycircuit import poly_gates
    b = Builder(nvars)
    lines = []
    for layer in range(1, A.depth + 1):
        for u, v, lab in A.edges.get(layer, ()):
            if isinstance(lab, SparsePoly):
                g = poly_gates(b, lab)
            else:
                g = b.const(lab)
            lines.append(f"edge ({layer},{u[0]},{u[1]}) ({layer + 1},{v[0]},{v[1]}) = g{g}")
    head = [f"vars {nvars}"] + [format_gate(i, g) for i, g in enumerate(b.gates)]
    head.append(f"source (1,{A.source[0]},{A.source[1]})")
    head.append(f"sink ({A.depth + 1},{A.sink[0]},{A.sink[1]})")
    return "\n".join(head + lines) + "\n"


def parse_abp(text: str):
    """Inverse of format_abp. Returns (LayeredABP with gate-index labels, label circuit)."""
    import re
    from .circuit.textfmt import CircuitFormatError, parse_circuit
    gate_lines, edges, source, sink = [], [], None, None
    pat = re.compile(r"^edge\s*\((\d+),(\d+),(\d+)\)\s*\((\d+),(\d+),(\d+)\)\s*=\s*g(\d+)$")
    vpat = re.compile(r"^(source|sink)\s*\((\d+),(\d+),(\d+)\)$")
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("edge"):
            m = pat.match(line)
            if not m:
                raise CircuitFormatError(no, "expected `edge (l,i,j) (l',i',j') = g<a>`")
            l1, i1, j1, l2, i2, j2, g = map(int, m.groups())
            if l2 != l1 + 1:
                raise CircuitFormatError(no, "edges must join consecutive layers")
            edges.append((no, l1, (i1, j1), (i2, j2), g))
        elif line.startswith(("source", "sink")):
            m = vpat.match(line)
            if not m:
                raise CircuitFormatError(no, "expected `source (l,i,j)` or `sink (l,i,j)`")
            vert = (int(m.group(2)), (int(m.group(3)), int(m.group(4))))
            if m.group(1) == "source":
                source = vert
            else:
                sink = vert
        else:
            gate_lines.append(raw)
    if source is None or sink is None:
        raise CircuitFormatError(len(text.splitlines()), "missing source or sink line")
    ngates = sum(1 for r in gate_lines if r.strip().startswith("g"))
    body = "\n".join(gate_lines) + "\n" + ("outputs " + " ".join(f"g{i}" for i in range(ngates))
                                           if ngates else "")
    if not ngates:
        raise CircuitFormatError(1, "ABP has no label gates")
    circuit = parse_circuit(body)
    depth = sink[0] - source[0]
    layers: List[List] = [[] for _ in range(depth + 1)]
    emap: Dict[int, list] = {}
    for no, l1, u, v, g in edges:
        if not 0 <= g < ngates:
            raise CircuitFormatError(no, f"label g{g} does not exist")
        emap.setdefault(l1 - source[0] + 1, []).append((u, v, g))
    for l, es in emap.items():
        for u, v, _ in es:
            if u not in layers[l - 1]:
                layers[l - 1].append(u)
            if v not in layers[l]:
                layers[l].append(v)
    return LayeredABP(layers, emap, source[1], sink[1]), circuit


def abp_file_path_sum(A: LayeredABP, labels: Circuit, point: Sequence) -> object:
    """Path sum of a parsed ABP file at a point (labels are gate indices of `labels`)."""
    from .circuit.evaluate import evaluate
    vals = evaluate(labels, list(point))
    numeric = LayeredABP(A.layers, {l: [(u, v, vals[g]) for u, v, g in es]
                                    for l, es in A.edges.items()}, A.source, A.sink)
    return abp_path_sum(numeric)
