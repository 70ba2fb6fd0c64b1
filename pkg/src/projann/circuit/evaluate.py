"""Evaluation of circuits with projection, summation and production gates.

Every gate is evaluated to a *table*: a sparse map from assignments of some
summation variables (the gate's free axes) to ring values. A projection gate
fixes a variable for its subtree, a summation gate turns its variable into a
free axis and then adds the two slices, and a production gate multiplies the
two fixed evaluations. Tables are memoized per gate and per override state of
the variables that occur below the gate, so a subtree that ignores an
override is computed once.

Two table backends are provided: plain dicts over any ring (exact rationals,
residues, polynomials) and packed numpy arrays for residues modulo a prime
below 2**31 or the Mersenne prime 2**61 - 1, optionally carrying several
evaluation points at once.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..algebra.poly import SparsePoly
from ..algebra.scalars import normalize
from .ir import (ADD, CDIV, INPUT, MINUS_ONE, MUL, ONE, PROD, PROJ, SUM, Circuit, vars_below)

FREE = 2  # override code marking a variable as a free summation axis
M61 = (1 << 61) - 1
_LOW31 = np.uint64((1 << 31) - 1)
_LOW30 = np.uint64((1 << 30) - 1)


def _mulmod_m61(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise a*b mod 2^61-1 for residues held in int64, via 31-bit limbs."""
    a = a.astype(np.uint64)
    b = b.astype(np.uint64)
    a0, a1 = a & _LOW31, a >> np.uint64(31)
    b0, b1 = b & _LOW31, b >> np.uint64(31)
    mid = a1 * b0 + a0 * b1                       # weight 2^31
    total = (np.uint64(2) * (a1 * b1)             # 2^62 = 2 mod p
             + (mid >> np.uint64(30))             # 2^61 = 1 mod p
             + ((mid & _LOW30) << np.uint64(31))
             + a0 * b0)
    m = np.uint64(M61)
    t = (total & m) + (total >> np.uint64(61))
    t = np.where(t >= m, t - m, t)
    return t.astype(np.int64)


class UnboundVariableError(KeyError):
    def __init__(self, var: int):
        super().__init__(f"variable x{var} is unbound")
        self.var = var

    def __str__(self):
        return self.args[0]


class ResourceLimitError(RuntimeError):
    """A configurable ceiling (terms, table entries, rows) was exceeded."""


# ------------------------------------------------------------------ rings

class ExactRing:
    zero = 0
    one = 1

    @staticmethod
    def add(a, b):
        s = a + b
        return normalize(s) if isinstance(s, Fraction) else s

    @staticmethod
    def mul(a, b):
        s = a * b
        return normalize(s) if isinstance(s, Fraction) else s

    @staticmethod
    def is_zero(a) -> bool:
        return a == 0

    @staticmethod
    def from_int(k: int):
        return k

    @staticmethod
    def div(a, b):
        if b == 0:
            raise ZeroDivisionError("constant division by zero")
        if isinstance(a, (int, Fraction)) and isinstance(b, (int, Fraction)):
            return normalize(Fraction(a) / Fraction(b))
        return a / b

    def lift(self, v):
        return v


class ModRing:
    def __init__(self, p: int):
        self.p = p
        self.zero = 0
        self.one = 1

    def add(self, a, b):
        return (a + b) % self.p

    def mul(self, a, b):
        return a * b % self.p

    @staticmethod
    def is_zero(a) -> bool:
        return a == 0

    def from_int(self, k: int):
        return k % self.p

    def div(self, a, b):
        if b % self.p == 0:
            raise ZeroDivisionError("constant division by zero modulo p")
        return a * pow(b, -1, self.p) % self.p

    def lift(self, v):
        if isinstance(v, Fraction):
            return v.numerator * pow(v.denominator, -1, self.p) % self.p
        return int(v) % self.p


class ObjectLaneRing:
    """Residues modulo an arbitrary prime, one numpy object array of lanes per value."""

    def __init__(self, p: int, lanes: int):
        self.p = p
        self.lanes = lanes
        self.zero = np.zeros(lanes, dtype=object)
        self.one = np.ones(lanes, dtype=object)

    def add(self, a, b):
        return (a + b) % self.p

    def mul(self, a, b):
        return (a * b) % self.p

    @staticmethod
    def is_zero(a) -> bool:
        return not any(a)

    def from_int(self, k: int):
        return np.full(self.lanes, k % self.p, dtype=object)

    def div(self, a, b):
        if any(x % self.p == 0 for x in b):
            raise ZeroDivisionError("constant division by zero modulo p")
        inv = np.array([pow(int(x), -1, self.p) for x in b], dtype=object)
        return (a * inv) % self.p

    def lift(self, v):
        arr = np.asarray(v, dtype=object)
        if arr.shape == ():
            arr = np.full(self.lanes, arr.item(), dtype=object)
        return np.array([ModRing(self.p).lift(x) for x in arr], dtype=object)


class PolyRing:
    def __init__(self, nvars: int, max_terms: int = 10**6):
        self.nvars = nvars
        self.max_terms = max_terms
        self.zero = SparsePoly.zero(nvars)
        self.one = SparsePoly.constant(nvars, 1)

    def _cap(self, p: SparsePoly) -> SparsePoly:
        if len(p) > self.max_terms:
            raise ResourceLimitError(f"expansion exceeded {self.max_terms} terms")
        return p

    def add(self, a, b):
        return self._cap(a + b)

    def mul(self, a, b):
        return self._cap(a * b)

    @staticmethod
    def is_zero(a) -> bool:
        return a.is_zero()

    def from_int(self, k: int):
        return SparsePoly.constant(self.nvars, k)

    def div(self, a, b):
        if b.degree() > 0 or a.degree() > 0:
            raise ValueError("division gate with a non-constant operand")
        bc = b.coeff((0,) * self.nvars)
        if bc == 0:
            raise ZeroDivisionError("constant division by zero")
        return SparsePoly.constant(self.nvars, Fraction(a.coeff((0,) * self.nvars)) / Fraction(bc))

    def lift(self, v):
        return v if isinstance(v, SparsePoly) else SparsePoly.constant(self.nvars, v)


# ------------------------------------------------------------------ dict tables

class DictTables:
    """Tables as (sorted axes, {bit tuple: value}) over a ring."""

    def __init__(self, ring, max_entries: int = 10**7):
        self.ring = ring
        self.max_entries = max_entries

    def empty(self):
        return ((), {})

    def scalar(self, v):
        return ((), {} if self.ring.is_zero(v) else {(): v})

    def axis(self, var: int):
        return ((var,), {(1,): self.ring.one})

    @staticmethod
    def is_empty(t) -> bool:
        return not t[1]

    def value(self, t):
        axes, data = t
        if axes:
            raise ValueError("table still has free axes")
        return data.get((), self.ring.zero)

    def _check(self, data):
        if len(data) > self.max_entries:
            raise ResourceLimitError(f"evaluation table exceeded {self.max_entries} entries")

    def _broadcast(self, t, axes):
        src_axes, data = t
        if src_axes == axes:
            return data
        pos = {v: i for i, v in enumerate(axes)}
        missing = [pos[v] for v in axes if v not in src_axes]
        src_pos = [pos[v] for v in src_axes]
        out = {}
        n = len(axes)
        for key, val in data.items():
            base = [0] * n
            for p_, bit in zip(src_pos, key):
                base[p_] = bit
            for combo in itertools.product((0, 1), repeat=len(missing)):
                for p_, bit in zip(missing, combo):
                    base[p_] = bit
                out[tuple(base)] = val
        return out

    def add(self, a, b):
        if not a[1]:
            return b
        if not b[1]:
            return a
        axes = tuple(sorted(set(a[0]) | set(b[0])))
        da = self._broadcast(a, axes)
        db = self._broadcast(b, axes)
        out = dict(da)
        ring = self.ring
        for k, v in db.items():
            if k in out:
                s = ring.add(out[k], v)
                if ring.is_zero(s):
                    del out[k]
                else:
                    out[k] = s
            else:
                out[k] = v
        self._check(out)
        return (axes, out)

    def mul(self, a, b):
        if not a[1] or not b[1]:
            return self.empty()
        ring = self.ring
        if not a[0] and not b[0]:
            return self.scalar(ring.mul(a[1][()], b[1][()]))
        axes = tuple(sorted(set(a[0]) | set(b[0])))
        shared = [v for v in a[0] if v in set(b[0])]
        a_sh = [a[0].index(v) for v in shared]
        b_sh = [b[0].index(v) for v in shared]
        pos = {v: i for i, v in enumerate(axes)}
        a_pos = [pos[v] for v in a[0]]
        b_pos = [pos[v] for v in b[0]]
        index: Dict[tuple, list] = {}
        for kb, vb in b[1].items():
            index.setdefault(tuple(kb[i] for i in b_sh), []).append((kb, vb))
        out = {}
        n = len(axes)
        for ka, va in a[1].items():
            hits = index.get(tuple(ka[i] for i in a_sh))
            if not hits:
                continue
            for kb, vb in hits:
                v = ring.mul(va, vb)
                if ring.is_zero(v):
                    continue
                key = [0] * n
                for p_, bit in zip(a_pos, ka):
                    key[p_] = bit
                for p_, bit in zip(b_pos, kb):
                    key[p_] = bit
                out[tuple(key)] = v
        self._check(out)
        return (axes, out)

    def sum_out(self, t, var: int):
        axes, data = t
        ring = self.ring
        if var not in axes:
            return (axes, {k: s for k, v in data.items()
                           if not ring.is_zero(s := ring.add(v, v))})
        i = axes.index(var)
        new_axes = axes[:i] + axes[i + 1:]
        out = {}
        for k, v in data.items():
            nk = k[:i] + k[i + 1:]
            if nk in out:
                out[nk] = ring.add(out[nk], v)
            else:
                out[nk] = v
        return (new_axes, {k: v for k, v in out.items() if not ring.is_zero(v)})

    def cdiv(self, a, b):
        return self.scalar(self.ring.div(self.value(a), self.value(b)))


# ------------------------------------------------------------------ numpy tables

class NumpyTables:
    """Packed tables modulo a prime p < 2**31 or p = 2**61 - 1.

    A table is (axes, keys, vals): keys is an int64 array whose bit t holds
    the value of axes[t], vals an int64 array of shape (entries, lanes).
    """

    def __init__(self, p: int, lanes: int = 1, max_entries: int = 5 * 10**7):
        if not (2 <= p < (1 << 31) or p == M61):
            raise ValueError("packed tables need a prime below 2^31 or 2^61 - 1")
        self.p = p
        self.lanes = lanes
        self.max_entries = max_entries
        self._nokeys = np.zeros(0, dtype=np.int64)
        self._novals = np.zeros((0, lanes), dtype=np.int64)

    def empty(self):
        return ((), self._nokeys, self._novals)

    def _mul_vals(self, x, y):
        if self.p == M61:
            return _mulmod_m61(x, y)
        return x * y % self.p

    def scalar(self, v):
        v = np.asarray(v, dtype=np.int64).reshape(-1) % self.p
        if v.size == 1 and self.lanes != 1:
            v = np.full(self.lanes, int(v[0]), dtype=np.int64)
        if not v.any():
            return self.empty()
        return ((), np.zeros(1, dtype=np.int64), v.reshape(1, self.lanes))

    def axis(self, var: int):
        return ((var,), np.ones(1, dtype=np.int64), np.ones((1, self.lanes), dtype=np.int64))

    @staticmethod
    def is_empty(t) -> bool:
        return t[1].size == 0

    def value(self, t):
        axes, keys, vals = t
        if keys.size == 0:
            return np.zeros(self.lanes, dtype=np.int64)
        if axes:
            raise ValueError("table still has free axes")
        return vals[0].copy()

    @staticmethod
    def _remap(keys, src_axes, dst_axes):
        if src_axes == dst_axes:
            return keys
        pos = {v: i for i, v in enumerate(dst_axes)}
        out = np.zeros_like(keys)
        for t, v in enumerate(src_axes):
            out |= ((keys >> t) & 1) << pos[v]
        return out

    def _group(self, axes, keys, vals):
        if keys.size == 0:
            return ((), self._nokeys, self._novals) if not axes else (axes, keys, vals)
        order = np.argsort(keys, kind="stable")
        keys = keys[order]
        vals = vals[order]
        starts = np.flatnonzero(np.concatenate(([True], keys[1:] != keys[:-1])))
        if starts.size != keys.size:
            keys = keys[starts]
            vals = np.add.reduceat(vals, starts, axis=0) % self.p
        keep = vals.any(axis=1)
        if not keep.all():
            keys, vals = keys[keep], vals[keep]
        return (axes, keys, vals)

    def _check(self, n):
        if n > self.max_entries:
            raise ResourceLimitError(f"evaluation table exceeded {self.max_entries} entries")

    def _broadcast(self, t, axes):
        src_axes, keys, vals = t
        keys = self._remap(keys, src_axes, axes)
        missing = [i for i, v in enumerate(axes) if v not in src_axes]
        if not missing:
            return keys, vals
        combos = np.zeros(1 << len(missing), dtype=np.int64)
        for j, pos in enumerate(missing):
            combos |= ((np.arange(1 << len(missing)) >> j) & 1).astype(np.int64) << pos
        self._check(keys.size * combos.size)
        keys = (keys[:, None] | combos[None, :]).reshape(-1)
        vals = np.repeat(vals, combos.size, axis=0)
        return keys, vals

    def add(self, a, b):
        if a[1].size == 0:
            return b
        if b[1].size == 0:
            return a
        axes = tuple(sorted(set(a[0]) | set(b[0])))
        ka, va = self._broadcast(a, axes)
        kb, vb = self._broadcast(b, axes)
        return self._group(axes, np.concatenate((ka, kb)), np.concatenate((va, vb)))

    def mul(self, a, b):
        if a[1].size == 0 or b[1].size == 0:
            return self.empty()
        axes = tuple(sorted(set(a[0]) | set(b[0])))
        shared = tuple(v for v in a[0] if v in set(b[0]))
        sa = self._remap_sub(a[1], a[0], shared)
        sb = self._remap_sub(b[1], b[0], shared)
        order = np.argsort(sb, kind="stable")
        sb_sorted = sb[order]
        lo = np.searchsorted(sb_sorted, sa, side="left")
        hi = np.searchsorted(sb_sorted, sa, side="right")
        counts = hi - lo
        total = int(counts.sum())
        if total == 0:
            return self.empty()
        self._check(total)
        rows_a = np.repeat(np.arange(sa.size), counts)
        first = np.repeat(lo - (np.cumsum(counts) - counts), counts)
        rows_b = order[np.arange(total) + first]
        keys = self._remap(a[1][rows_a], a[0], axes) | self._remap(b[1][rows_b], b[0], axes)
        vals = self._mul_vals(a[2][rows_a], b[2][rows_b])
        keep = vals.any(axis=1)
        if not keep.all():
            keys, vals = keys[keep], vals[keep]
        if keys.size == 0:
            return self.empty()
        return (axes, keys, vals)

    @staticmethod
    def _remap_sub(keys, src_axes, sub_axes):
        """Project keys onto a subset of their axes."""
        out = np.zeros_like(keys)
        for j, v in enumerate(sub_axes):
            t = src_axes.index(v)
            out |= ((keys >> t) & 1) << j
        return out

    def sum_out(self, t, var: int):
        axes, keys, vals = t
        if keys.size == 0:
            return t
        if var not in axes:
            vals = vals * 2 % self.p
            keep = vals.any(axis=1)
            return (axes, keys[keep], vals[keep])
        i = axes.index(var)
        low = keys & ((1 << i) - 1)
        high = (keys >> (i + 1)) << i
        new_axes = axes[:i] + axes[i + 1:]
        return self._group(new_axes, low | high, vals)

    def cdiv(self, a, b):
        x = self.value(a)
        y = self.value(b)
        if (y % self.p == 0).any():
            raise ZeroDivisionError("constant division by zero modulo p")
        inv = np.array([pow(int(v), -1, self.p) for v in y], dtype=np.int64)
        return self.scalar(self._mul_vals(x, inv))


# ------------------------------------------------------------------ engine

def _set(ov: tuple, var: int, code: int) -> tuple:
    d = dict(ov)
    d[var] = code
    return tuple(sorted(d.items()))


def run_tables(c: Circuit, tables, base: Callable[[int], object],
               outputs: Sequence[int] | None = None) -> list:
    """Evaluate the requested output gates (default: all outputs) to ring values."""
    gates = c.gates
    below = vars_below(c)
    memo: Dict[tuple, object] = {}
    one = tables.scalar(tables.ring.one) if hasattr(tables, "ring") else tables.scalar(1)
    minus = (tables.scalar(tables.ring.from_int(-1)) if hasattr(tables, "ring")
             else tables.scalar(-1))

    def restrict(ov, g):
        if not ov:
            return ov
        bl = below[g]
        return tuple(it for it in ov if it[0] in bl)

    targets = list(c.outputs if outputs is None else outputs)
    results = []
    for root in targets:
        stack = [(root, ())]
        while stack:
            g, ov = stack[-1]
            key = (g, ov)
            if key in memo:
                stack.pop()
                continue
            gate = gates[g]
            op = gate.op
            if op == INPUT:
                code = dict(ov).get(gate.var)
                if code is None:
                    val = tables.scalar(base(gate.var))
                elif code == FREE:
                    val = tables.axis(gate.var)
                else:
                    val = one if code else tables.empty()
                memo[key] = val
                stack.pop()
                continue
            if op == ONE:
                memo[key] = one
                stack.pop()
                continue
            if op == MINUS_ONE:
                memo[key] = minus
                stack.pop()
                continue
            if op in (ADD, MUL, CDIV):
                ka = (gate.a, restrict(ov, gate.a))
                if ka not in memo:
                    stack.append(ka)
                    continue
                ta = memo[ka]
                if op == MUL and tables.is_empty(ta):
                    memo[key] = tables.empty()
                    stack.pop()
                    continue
                kb = (gate.b, restrict(ov, gate.b))
                if kb not in memo:
                    stack.append(kb)
                    continue
                tb = memo[kb]
                if op == ADD:
                    memo[key] = tables.add(ta, tb)
                elif op == MUL:
                    memo[key] = tables.mul(ta, tb)
                else:
                    memo[key] = tables.cdiv(ta, tb)
                stack.pop()
                continue
            if op == PROJ:
                kc = (gate.a, restrict(_set(ov, gate.var, gate.bit), gate.a))
                if kc not in memo:
                    stack.append(kc)
                    continue
                memo[key] = memo[kc]
                stack.pop()
                continue
            if op == SUM:
                kc = (gate.a, restrict(_set(ov, gate.var, FREE), gate.a))
                if kc not in memo:
                    stack.append(kc)
                    continue
                memo[key] = tables.sum_out(memo[kc], gate.var)
                stack.pop()
                continue
            if op == PROD:
                k0 = (gate.a, restrict(_set(ov, gate.var, 0), gate.a))
                if k0 not in memo:
                    stack.append(k0)
                    continue
                t0 = memo[k0]
                if tables.is_empty(t0):
                    memo[key] = tables.empty()
                    stack.pop()
                    continue
                k1 = (gate.a, restrict(_set(ov, gate.var, 1), gate.a))
                if k1 not in memo:
                    stack.append(k1)
                    continue
                memo[key] = tables.mul(t0, memo[k1])
                stack.pop()
                continue
            raise ValueError(f"unknown gate kind {op!r}")
        results.append(tables.value(memo[(root, ())]))
    return results


def _env_lookup(env) -> Callable[[int], object]:
    if env is None:
        env = {}
    if not isinstance(env, Mapping):
        env = dict(enumerate(env, start=1))

    def base(var):
        if var not in env:
            raise UnboundVariableError(var)
        return env[var]
    return base


def evaluate(c: Circuit, env=None, outputs: Sequence[int] | None = None) -> list:
    """Exact evaluation. `env` maps 1-based variable ids (or is a sequence for x1, x2, ...)."""
    ring = ExactRing()
    lookup = _env_lookup(env)
    return run_tables(c, DictTables(ring), lambda v: ring.lift(lookup(v)), outputs)


def evaluate_mod(c: Circuit, env, p: int, outputs: Sequence[int] | None = None) -> List[int]:
    ring = ModRing(p)
    lookup = _env_lookup(env)
    if p < (1 << 31) or p == M61:
        tables = NumpyTables(p, 1)
        vals = run_tables(c, tables, lambda v: ring.lift(lookup(v)), outputs)
        return [int(v[0]) for v in vals]
    return run_tables(c, DictTables(ring), lambda v: ring.lift(lookup(v)), outputs)


def evaluate_lanes(c: Circuit, env: Mapping[int, Sequence[int]], p: int, lanes: int,
                   outputs: Sequence[int] | None = None) -> List[List[int]]:
    """Evaluate at `lanes` points at once; env maps each variable to its per-lane values."""
    lookup = _env_lookup(env)
    if p < (1 << 31) or p == M61:
        tables = NumpyTables(p, lanes)

        def base(v):
            arr = np.array([ModRing(p).lift(x) for x in lookup(v)], dtype=np.int64)
            return arr
        vals = run_tables(c, tables, base, outputs)
    else:
        ring = ObjectLaneRing(p, lanes)
        vals = run_tables(c, DictTables(ring), lambda v: ring.lift(lookup(v)), outputs)
    return [[int(x) for x in v] for v in vals]


def expand(c: Circuit, max_terms: int = 10**6, outputs: Sequence[int] | None = None
           ) -> List[SparsePoly]:
    """The polynomial computed by each output, over all c.nvars variables."""
    ring = PolyRing(c.nvars, max_terms)
    return run_tables(c, DictTables(ring), lambda v: SparsePoly.var(c.nvars, v), outputs)
