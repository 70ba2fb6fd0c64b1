"""Modular elimination kernels with a numba path and a plain numpy path.

Both paths take int64 arrays with entries in [0, p) for a prime p < 2**31,
so a product of two residues fits in int64. Set PROJANN_DISABLE_NUMBA=1 to
force the numpy path (useful for debugging and for the benchmark).
"""

from __future__ import annotations

import os

import numpy as np

MAX_KERNEL_PRIME = 1 << 31

_disabled = os.environ.get("PROJANN_DISABLE_NUMBA", "").strip() not in ("", "0", "false", "False")

try:
    if _disabled:
        raise ImportError("numba disabled by environment")
    from numba import njit
    NUMBA_AVAILABLE = True
except ImportError:
    NUMBA_AVAILABLE = False


def _inv_mod(a: int, p: int) -> int:
    return pow(int(a), p - 2, p)


# ---------------------------------------------------------------- numpy path

def _rank_profile_numpy(A: np.ndarray, p: int):
    A = A.copy()
    nrows, ncols = A.shape
    order = np.arange(nrows)
    pivot_cols = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        nz = np.nonzero(A[r:, c])[0]
        if nz.size == 0:
            continue
        pr = r + int(nz[0])
        if pr != r:
            A[[r, pr]] = A[[pr, r]]
            order[[r, pr]] = order[[pr, r]]
        inv = _inv_mod(A[r, c], p)
        A[r, c:] = A[r, c:] * inv % p
        below = A[r + 1:, c].copy()
        rows = np.nonzero(below)[0]
        if rows.size:
            rows = rows + r + 1
            A[rows, c:] = (A[rows, c:] - (A[rows, c][:, None] * A[r, c:][None, :]) % p) % p
        pivot_cols.append(c)
        r += 1
    return r, np.array(pivot_cols, dtype=np.int64), order[:r].astype(np.int64)


def _det_numpy(A: np.ndarray, p: int) -> int:
    A = A.copy()
    n = A.shape[0]
    det = 1
    for c in range(n):
        nz = np.nonzero(A[c:, c])[0]
        if nz.size == 0:
            return 0
        pr = c + int(nz[0])
        if pr != c:
            A[[c, pr]] = A[[pr, c]]
            det = (-det) % p
        piv = int(A[c, c])
        det = det * piv % p
        inv = _inv_mod(piv, p)
        factors = A[c + 1:, c] * inv % p
        A[c + 1:, c:] = (A[c + 1:, c:] - (factors[:, None] * A[c, c:][None, :]) % p) % p
    return int(det)


# ---------------------------------------------------------------- numba path

if NUMBA_AVAILABLE:

    @njit(cache=True)
    def _powmod_nb(a, e, p):
        result = 1
        a = a % p
        while e > 0:
            if e & 1:
                result = result * a % p
            a = a * a % p
            e >>= 1
        return result

    @njit(cache=True)
    def _rank_profile_nb(A, p):
        nrows, ncols = A.shape
        order = np.arange(nrows)
        pivot_cols = np.empty(min(nrows, ncols), dtype=np.int64)
        r = 0
        for c in range(ncols):
            if r == nrows:
                break
            pr = -1
            for i in range(r, nrows):
                if A[i, c] != 0:
                    pr = i
                    break
            if pr < 0:
                continue
            if pr != r:
                for j in range(ncols):
                    t = A[r, j]
                    A[r, j] = A[pr, j]
                    A[pr, j] = t
                t = order[r]
                order[r] = order[pr]
                order[pr] = t
            inv = _powmod_nb(A[r, c], p - 2, p)
            for j in range(c, ncols):
                A[r, j] = A[r, j] * inv % p
            for i in range(r + 1, nrows):
                f = A[i, c]
                if f != 0:
                    for j in range(c, ncols):
                        A[i, j] = (A[i, j] - f * A[r, j] % p) % p
            pivot_cols[r] = c
            r += 1
        return r, pivot_cols[:r].copy(), order[:r].copy()

    @njit(cache=True)
    def _det_nb(A, p):
        n = A.shape[0]
        det = 1
        for c in range(n):
            pr = -1
            for i in range(c, n):
                if A[i, c] != 0:
                    pr = i
                    break
            if pr < 0:
                return 0
            if pr != c:
                for j in range(n):
                    t = A[c, j]
                    A[c, j] = A[pr, j]
                    A[pr, j] = t
                det = (p - det) % p
            piv = A[c, c]
            det = det * piv % p
            inv = _powmod_nb(piv, p - 2, p)
            for i in range(c + 1, n):
                f = A[i, c] * inv % p
                if f != 0:
                    for j in range(c, n):
                        A[i, j] = (A[i, j] - f * A[c, j] % p) % p
        return det


# ---------------------------------------------------------------- dispatch

def _prepare(A, p: int) -> np.ndarray:
    if not 2 <= p < MAX_KERNEL_PRIME:
        raise ValueError(f"kernel modulus must lie in [2, 2^31), got {p}")
    arr = np.asarray(A, dtype=np.int64)
    if arr.ndim != 2:
        raise ValueError("expected a 2-D array")
    return np.ascontiguousarray(arr % p)


def rank_profile_mod_p(A, p: int, use_numba: bool | None = None):
    """Rank, pivot columns, and original pivot-row indices of A over F_p."""
    arr = _prepare(A, p)
    if arr.size == 0:
        return 0, np.zeros(0, np.int64), np.zeros(0, np.int64)
    if use_numba is None:
        use_numba = NUMBA_AVAILABLE
    if use_numba and NUMBA_AVAILABLE:
        r, pc, pr = _rank_profile_nb(arr, np.int64(p))
        return int(r), pc, pr
    return _rank_profile_numpy(arr, p)


def det_mod_p(A, p: int, use_numba: bool | None = None) -> int:
    arr = _prepare(A, p)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError("determinant of non-square matrix")
    if arr.shape[0] == 0:
        return 1 % p
    if use_numba is None:
        use_numba = NUMBA_AVAILABLE
    if use_numba and NUMBA_AVAILABLE:
        return int(_det_nb(arr, np.int64(p)))
    return _det_numpy(arr, p)
