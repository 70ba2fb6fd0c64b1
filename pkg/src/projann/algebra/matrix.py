"""Dense exact matrices and fraction-free elimination."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import List, Optional, Sequence, Tuple

from .scalars import normalize


class ExactMatrix:
    """Rectangular matrix of ints/Fractions with optional row and column labels."""

    __slots__ = ("nrows", "ncols", "rows", "row_labels", "col_labels")

    def __init__(self, rows: Sequence[Sequence], row_labels=None, col_labels=None,
                 ncols: int | None = None):
        self.rows = [[normalize(x) if isinstance(x, Fraction) else x for x in r] for r in rows]
        self.nrows = len(self.rows)
        if ncols is None:
            ncols = len(self.rows[0]) if self.rows else 0
        self.ncols = ncols
        for r in self.rows:
            if len(r) != ncols:
                raise ValueError("ragged matrix")
        if row_labels is not None and len(row_labels) != self.nrows:
            raise ValueError("row label count does not match row count")
        if col_labels is not None and len(col_labels) != self.ncols:
            raise ValueError("column label count does not match column count")
        self.row_labels = list(row_labels) if row_labels is not None else None
        self.col_labels = list(col_labels) if col_labels is not None else None

    @classmethod
    def from_columns(cls, cols: Sequence[Sequence], **kw) -> "ExactMatrix":
        if not cols:
            raise ValueError("no columns")
        nrows = len(cols[0])
        return cls([[c[i] for c in cols] for i in range(nrows)], ncols=len(cols), **kw)

    def column(self, j: int) -> list:
        return [r[j] for r in self.rows]

    def columns(self, idx: Sequence[int]) -> "ExactMatrix":
        labels = [self.col_labels[j] for j in idx] if self.col_labels else None
        return ExactMatrix([[r[j] for j in idx] for r in self.rows],
                           row_labels=self.row_labels, col_labels=labels, ncols=len(idx))

    def drop_column(self, j: int) -> "ExactMatrix":
        return self.columns([c for c in range(self.ncols) if c != j])

    def transpose(self) -> "ExactMatrix":
        return ExactMatrix([[self.rows[i][j] for i in range(self.nrows)] for j in range(self.ncols)],
                           row_labels=self.col_labels, col_labels=self.row_labels,
                           ncols=self.nrows)

    def __matmul__(self, other: "ExactMatrix") -> "ExactMatrix":
        if self.ncols != other.nrows:
            raise ValueError("shape mismatch")
        cols = list(zip(*other.rows)) if other.nrows else [()] * other.ncols
        out = [[sum(a * b for a, b in zip(r, c)) for c in cols] for r in self.rows]
        return ExactMatrix(out, row_labels=self.row_labels, col_labels=other.col_labels,
                           ncols=other.ncols)

    def apply(self, vec: Sequence) -> list:
        if len(vec) != self.ncols:
            raise ValueError("vector length mismatch")
        return [normalize(sum(a * b for a, b in zip(r, vec))) for r in self.rows]

    def __eq__(self, other):
        return isinstance(other, ExactMatrix) and self.rows == other.rows and self.ncols == other.ncols

    def __repr__(self):
        return f"ExactMatrix({self.nrows}x{self.ncols})"


def _integer_columns(M: ExactMatrix) -> Tuple[List[List[int]], List[int]]:
    """Scale each column to integers. Returns the scaled rows and per-column scale factors."""
    scales = []
    for j in range(M.ncols):
        s = 1
        for r in M.rows:
            x = r[j]
            if isinstance(x, Fraction):
                s = lcm(s, x.denominator)
        scales.append(s)
    rows = []
    for r in M.rows:
        rows.append([int(x * s) if s != 1 else int(x) for x, s in zip(r, scales)])
    return rows, scales


@dataclass(frozen=True)
class DependencyResult:
    rank: int
    K: Optional[int]             # 1-based index of first dependent column, None if full column rank
    coefficients: Tuple          # f_1..f_{K-1}, with column_K = sum f_j column_j
    pivot_rows: Tuple[int, ...]  # original row indices of the pivots, in pivot order
    pivot_cols: Tuple[int, ...]


def bareiss_echelon(rows: List[List[int]], ncols: int):
    """In-place fraction-free row echelon form.

    Columns are scanned left to right; a column without a pivot lies in the
    span of the pivot columns to its left. Returns (pivot rows in original
    numbering, pivot columns, sign of the row permutation).
    """
    nrows = len(rows)
    perm = list(range(nrows))
    sign = 1
    prev = 1
    r = 0
    pivot_cols = []
    for c in range(ncols):
        if r == nrows:
            break
        pr = next((i for i in range(r, nrows) if rows[i][c] != 0), None)
        if pr is None:
            continue
        if pr != r:
            rows[r], rows[pr] = rows[pr], rows[r]
            perm[r], perm[pr] = perm[pr], perm[r]
            sign = -sign
        piv = rows[r][c]
        prow = rows[r]
        for i in range(r + 1, nrows):
            row = rows[i]
            a = row[c]
            if a == 0:
                if piv != prev:
                    for j in range(c + 1, ncols):
                        if row[j]:
                            row[j] = row[j] * piv // prev
                continue
            for j in range(c + 1, ncols):
                row[j] = (piv * row[j] - a * prow[j]) // prev
            row[c] = 0
        prev = piv
        pivot_cols.append(c)
        r += 1
    return tuple(perm[:r]), tuple(pivot_cols), sign


def exact_rank_and_first_dependency(M: ExactMatrix) -> DependencyResult:
    """Rank, first dependent column, and the exact certificate that expresses it."""
    if M.nrows == 0 or M.ncols == 0:
        raise ValueError("empty matrix")
    rows, scales = _integer_columns(M)
    prow_ids, pcols, _ = bareiss_echelon(rows, M.ncols)
    rank = len(pcols)
    K = None
    for idx in range(M.ncols):
        if idx >= rank or pcols[idx] != idx:
            K = idx + 1
            break
    if K is None:
        return DependencyResult(rank, None, (), prow_ids, pcols)
    t = K - 1
    # back substitution on the triangular block of the echelon form
    f = [Fraction(0)] * t
    for i in range(t - 1, -1, -1):
        acc = Fraction(rows[i][t])
        for j in range(i + 1, t):
            acc -= rows[i][j] * f[j]
        f[i] = acc / rows[i][i]
    # undo the column scaling: col'_j = s_j col_j
    sK = scales[t]
    coeffs = tuple(normalize(f[j] * scales[j] / sK) for j in range(t))
    result = DependencyResult(rank, K, coeffs, prow_ids, pcols)
    _verify_dependency(M, result)
    return result


def _verify_dependency(M: ExactMatrix, dep: DependencyResult):
    t = dep.K - 1
    for r in M.rows:
        lhs = sum((dep.coefficients[j] * r[j] for j in range(t)), 0)
        if lhs != r[t]:
            raise ArithmeticError("dependency certificate failed to recombine")


def exact_rank(M: ExactMatrix) -> int:
    if M.nrows == 0 or M.ncols == 0:
        return 0
    rows, _ = _integer_columns(M)
    _, pcols, _ = bareiss_echelon(rows, M.ncols)
    return len(pcols)


def exact_det(M: ExactMatrix):
    """Determinant by fraction-free elimination."""
    if M.nrows != M.ncols:
        raise ValueError(f"determinant of non-square {M.nrows}x{M.ncols} matrix")
    n = M.nrows
    if n == 0:
        return 1
    rows, scales = _integer_columns(M)
    _, pcols, sign = bareiss_echelon(rows, n)
    if len(pcols) < n:
        return 0
    det = sign * rows[n - 1][n - 1]
    denom = 1
    for s in scales:
        denom *= s
    return normalize(Fraction(det, denom)) if denom != 1 else det


def cofactor_det(rows: Sequence[Sequence]):
    """Recursive Laplace expansion along the first row. Exponential; oracle use only."""
    n = len(rows)
    if n == 0:
        return 1
    if n == 1:
        return rows[0][0]
    total = 0
    for j in range(n):
        if rows[0][j] == 0:
            continue
        minor = [r[:j] + r[j + 1:] for r in rows[1:]]
        term = rows[0][j] * cofactor_det(minor)
        total = total + term if j % 2 == 0 else total - term
    return total
