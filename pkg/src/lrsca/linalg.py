"""Exact and tolerance-based linear algebra primitives.

Two numeric backends share one immutable :class:`Matrix` container: exact
arithmetic over :class:`fractions.Fraction`, and floating point backed by
numpy.  Exact mode is the default wherever a decision is certified (a
tolerance artifact must never flip a certificate); floating mode with a
relative epsilon serves generated-data workflows.

All operations here are pure functions of their inputs.  Matrices and
subspaces are immutable after construction and safe to share across
concurrent callers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import (
    DegenerateInput,
    NotInSpan,
    RankDeficient,
    ShapeMismatch,
    SizeLimit,
)

Scalar = Union[Fraction, float]
Vector = Sequence[Scalar]

EXACT = "exact"
FLOAT = "float"

DEFAULT_REL_EPS = 1e-9
SPARK_COLUMN_CAP = 25


def _coerce(value, backend: str) -> Scalar:
    if backend == EXACT:
        if isinstance(value, Fraction):
            return value
        if isinstance(value, (int, str)):
            return Fraction(value)
        raise TypeError(f"exact backend takes int/str/Fraction entries, got {type(value).__name__}")
    out = float(value)
    if not math.isfinite(out):
        raise ValueError("floating backend forbids NaN/Inf entries")
    return out


class Matrix:
    """Immutable dense real matrix with an ``exact`` or ``float`` backend.

    Entries are stored row-major as a tuple of tuples; the backend tag is
    uniform across all entries.  Zero-column matrices are allowed (they carry
    empty subspace bases); zero-row matrices are not.
    """

    __slots__ = ("entries", "backend")

    def __init__(self, rows: Iterable[Iterable], backend: str):
        if backend not in (EXACT, FLOAT):
            raise ValueError(f"unknown backend {backend!r}")
        data = tuple(tuple(_coerce(v, backend) for v in row) for row in rows)
        if not data:
            raise ShapeMismatch("matrix needs at least one row")
        width = len(data[0])
        if any(len(row) != width for row in data):
            raise ShapeMismatch("rows have inconsistent widths")
        object.__setattr__(self, "entries", data)
        object.__setattr__(self, "backend", backend)

    def __setattr__(self, name, value):
        raise AttributeError("Matrix is immutable")

    @classmethod
    def exact(cls, rows) -> "Matrix":
        return cls(rows, EXACT)

    @classmethod
    def floating(cls, rows) -> "Matrix":
        return cls(rows, FLOAT)

    @classmethod
    def identity(cls, n: int, backend: str = EXACT) -> "Matrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)], backend)

    @classmethod
    def from_columns(cls, columns: Sequence[Vector], backend: str, rows: Optional[int] = None) -> "Matrix":
        if not columns:
            if rows is None:
                raise ShapeMismatch("cannot infer row count of an empty column list")
            return cls([[] for _ in range(rows)], backend)
        height = len(columns[0])
        if any(len(col) != height for col in columns):
            raise ShapeMismatch("columns have inconsistent lengths")
        return cls([[col[i] for col in columns] for i in range(height)], backend)

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    def entry(self, i: int, j: int) -> Scalar:
        return self.entries[i][j]

    def row(self, i: int) -> tuple:
        return self.entries[i]

    def column(self, j: int) -> tuple:
        return tuple(row[j] for row in self.entries)

    def columns(self) -> list:
        return [self.column(j) for j in range(self.cols)]

    def submatrix_columns(self, indices: Sequence[int]) -> "Matrix":
        return Matrix.from_columns([self.column(j) for j in indices], self.backend, rows=self.rows)

    def transpose(self) -> "Matrix":
        if self.cols == 0:
            raise ShapeMismatch("cannot transpose a zero-column matrix")
        return Matrix(zip(*self.entries), self.backend)

    def hstack(self, other: "Matrix") -> "Matrix":
        if other.rows != self.rows or other.backend != self.backend:
            raise ShapeMismatch("hstack needs matching row counts and backends")
        return Matrix((a + b for a, b in zip(self.entries, other.entries)), self.backend)

    def scale(self, factor) -> "Matrix":
        s = _coerce(factor, self.backend)
        return Matrix(((s * v for v in row) for row in self.entries), self.backend)

    def __matmul__(self, other: "Matrix") -> "Matrix":
        if not isinstance(other, Matrix):
            return NotImplemented
        if self.cols != other.rows or self.backend != other.backend:
            raise ShapeMismatch(f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}")
        if self.backend == FLOAT:
            return Matrix(self.to_numpy() @ other.to_numpy(), FLOAT)
        cols_rhs = other.columns()
        out = [[sum(row[t] * col[t] for t in range(self.cols)) for col in cols_rhs] for row in self.entries]
        return Matrix(out, EXACT)

    def to_numpy(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.entries], dtype=float)

    def to_backend(self, backend: str) -> "Matrix":
        if backend == self.backend:
            return self
        if backend == FLOAT:
            return Matrix(((float(v) for v in row) for row in self.entries), FLOAT)
        # float -> exact keeps the binary value exactly; no rounding is introduced
        return Matrix(((Fraction(v) for v in row) for row in self.entries), EXACT)

    def __eq__(self, other) -> bool:
        return (isinstance(other, Matrix) and self.backend == other.backend
                and self.entries == other.entries)

    def __hash__(self):
        return hash((self.backend, self.entries))

    def __repr__(self):
        return f"Matrix({self.rows}x{self.cols}, {self.backend})"


@dataclass(frozen=True)
class Tolerance:
    """Comparison policy: ``exact`` admits no epsilon, ``relative`` scales by magnitude.

    ``rel_eps`` must lie in (0, 1e-3]; the default 1e-9 suits generated data.
    """

    mode: str = "exact"
    rel_eps: float = 0.0

    def __post_init__(self):
        if self.mode == "exact":
            if self.rel_eps:
                raise ValueError("exact tolerance admits no epsilon")
        elif self.mode == "relative":
            if not (0.0 < self.rel_eps <= 1e-3):
                raise ValueError("relative epsilon must lie in (0, 1e-3]")
        else:
            raise ValueError(f"unknown tolerance mode {self.mode!r}")

    @classmethod
    def exact(cls) -> "Tolerance":
        return cls(mode="exact")

    @classmethod
    def relative(cls, rel_eps: float = DEFAULT_REL_EPS) -> "Tolerance":
        return cls(mode="relative", rel_eps=rel_eps)


def tolerance_for(m: Matrix, tol: Optional[Tolerance]) -> Tolerance:
    """Resolve the active tolerance for a matrix: exact backend is always exact."""
    if m.backend == EXACT:
        return Tolerance.exact()
    if tol is None:
        return Tolerance.relative()
    if tol.mode != "relative":
        raise ValueError("floating backend requires a relative tolerance")
    return tol


@dataclass(frozen=True, eq=False)
class Subspace:
    """A linear subspace of R^ambient, stored as an independent basis.

    Bases are non-canonical; use :func:`subspaces_equal` (mutual containment
    at the active tolerance), never ``==`` on bases.
    """

    basis: Matrix

    @property
    def ambient_dim(self) -> int:
        return self.basis.rows

    @property
    def dim(self) -> int:
        return self.basis.cols

    @property
    def backend(self) -> str:
        return self.basis.backend

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient={self.ambient_dim}, {self.backend})"


# ---------------------------------------------------------------------------
# exact elimination core


def _echelon_exact(rows: Sequence[Sequence[Fraction]]):
    """Reduced row echelon form over Fractions; returns (rref rows, pivot columns)."""
    m = [list(r) for r in rows]
    n_rows = len(m)
    n_cols = len(m[0]) if m else 0
    pivots: list[int] = []
    pr = 0
    for pc in range(n_cols):
        pivot_row = next((i for i in range(pr, n_rows) if m[i][pc] != 0), None)
        if pivot_row is None:
            continue
        m[pr], m[pivot_row] = m[pivot_row], m[pr]
        inv = 1 / m[pr][pc]
        m[pr] = [v * inv for v in m[pr]]
        for i in range(n_rows):
            if i != pr and m[i][pc] != 0:
                f = m[i][pc]
                m[i] = [a - f * b for a, b in zip(m[i], m[pr])]
        pivots.append(pc)
        pr += 1
        if pr == n_rows:
            break
    return m, pivots


def _nullspace_exact(rows: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    rref, pivots = _echelon_exact(rows)
    n_cols = len(rows[0]) if rows else 0
    free = [c for c in range(n_cols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * n_cols
        vec[fc] = Fraction(1)
        for row_idx, pc in enumerate(pivots):
            vec[pc] = -rref[row_idx][fc]
        basis.append(vec)
    return basis


def _solve_exact(d: Matrix, m: Matrix) -> Matrix:
    """Solve d @ X = m exactly; d must have full column rank, columns of m in span(d)."""
    r = d.cols
    aug = d.hstack(m)
    rref, pivots = _echelon_exact(aug.entries)
    if len(pivots) < r or pivots[:r] != list(range(r)):
        raise RankDeficient("coefficient solve requires full column rank")
    # in RREF every non-pivot column is written in terms of the pivot columns;
    # a contribution from a pivot beyond the d block means "outside span(d)"
    for j in range(m.cols):
        for i in range(r, len(pivots)):
            if rref[i][r + j] != 0:
                raise NotInSpan(f"column {j} of the right-hand side is outside the span")
    out = [[rref[i][r + j] for j in range(m.cols)] for i in range(r)]
    return Matrix(out, EXACT)


# ---------------------------------------------------------------------------
# float helpers


def _svd_rank(a: np.ndarray, rel_eps: float) -> int:
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rel_eps * s[0]))


def _nullspace_float(a: np.ndarray, rel_eps: float) -> list[list[float]]:
    if a.size == 0:
        return [list(row) for row in np.eye(a.shape[1])]
    _, s, vt = np.linalg.svd(a)
    smax = s[0] if s.size else 0.0
    keep = int(np.count_nonzero(s > rel_eps * smax)) if smax > 0.0 else 0
    return [list(vt[i]) for i in range(keep, a.shape[1])]


# ---------------------------------------------------------------------------
# operations


def rank(m: Matrix, tol: Optional[Tolerance] = None) -> int:
    """Dimension of the column space.

    Exact backend: fraction-free elimination.  Float backend: singular values
    below ``rel_eps`` times the largest count as zero (scale invariant).
    """
    if m.cols == 0:
        return 0
    if m.backend == EXACT:
        return len(_echelon_exact(m.entries)[1])
    t = tolerance_for(m, tol)
    return _svd_rank(m.to_numpy(), t.rel_eps)


def _column_is_negligible(col: tuple, backend: str, rel_eps: float, scale: float) -> bool:
    if backend == EXACT:
        return all(v == 0 for v in col)
    return math.sqrt(sum(float(v) ** 2 for v in col)) <= rel_eps * scale


def spark(m: Matrix, tol: Optional[Tolerance] = None, max_cols: int = SPARK_COLUMN_CAP) -> int:
    """Smallest number of linearly dependent columns; n+1 if all n are independent.

    Enumerates subsets by increasing cardinality, lexicographic within a
    cardinality, returning on the first dependent subset; a zero column gives
    spark 1.  Cost is exponential, so column counts above ``max_cols`` raise
    SizeLimit rather than silently approximating.
    """
    n = m.cols
    if n == 0:
        raise ShapeMismatch("spark needs at least one column")
    if n > max_cols:
        raise SizeLimit(f"spark enumeration capped at {max_cols} columns, got {n}")
    t = tolerance_for(m, tol)
    scale = 0.0
    if m.backend == FLOAT:
        scale = max(math.sqrt(sum(float(v) ** 2 for v in m.column(j))) for j in range(n))
    for j in range(n):
        if _column_is_negligible(m.column(j), m.backend, t.rel_eps, scale):
            return 1
    r = rank(m, t)
    for size in range(2, min(n, r + 1) + 1):
        for combo in combinations(range(n), size):
            if rank(m.submatrix_columns(combo), t) < size:
                return size
    return n + 1


def reduce_to_rank_space(m: Matrix, tol: Optional[Tolerance] = None):
    """Compress m to r x n coordinates on its column space.

    Returns ``(reduced, lift)`` with ``lift @ reduced == m`` (exactly in exact
    mode, within tolerance in float mode).  Only the left factor is
    transformed, so the coefficient structure of any factorization m = DB,
    and every rank/spark of column submatrices, is preserved.
    """
    t = tolerance_for(m, tol)
    if m.backend == EXACT:
        _, pivots = _echelon_exact(m.entries)
        if not pivots:
            raise DegenerateInput("cannot reduce the zero matrix")
        lift = m.submatrix_columns(pivots)
        reduced = _solve_exact(lift, m)
        return reduced, lift
    a = m.to_numpy()
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    r = int(np.count_nonzero(s > t.rel_eps * s[0])) if s.size and s[0] > 0 else 0
    if r == 0:
        raise DegenerateInput("cannot reduce the zero matrix")
    q = u[:, :r]
    return Matrix(q.T @ a, FLOAT), Matrix(q, FLOAT)


def _infer_backend(points: Sequence[Vector]) -> str:
    for p in points:
        for v in p:
            if isinstance(v, float):
                return FLOAT
    return EXACT


def span_of(points: Sequence[Vector], tol: Optional[Tolerance] = None,
            backend: Optional[str] = None) -> Subspace:
    """Subspace spanned by the given vectors, with a basis extracted from them."""
    if not points:
        raise ShapeMismatch("span_of needs at least one point")
    if backend is None:
        backend = _infer_backend(points)
    m = Matrix.from_columns(points, backend)
    t = tolerance_for(m, tol)
    if backend == EXACT:
        _, pivots = _echelon_exact(m.entries)
        return Subspace(m.submatrix_columns(pivots))
    # greedy selection against an orthonormal companion keeps the basis made of inputs
    a = m.to_numpy()
    norms = np.linalg.norm(a, axis=0)
    chosen: list[int] = []
    q: list[np.ndarray] = []
    for j in range(m.cols):
        v = a[:, j].copy()
        for u in q:
            v -= (u @ a[:, j]) * u
        if np.linalg.norm(v) > t.rel_eps * max(norms[j], 1e-300):
            q.append(v / np.linalg.norm(v))
            chosen.append(j)
    return Subspace(m.submatrix_columns(chosen))


def contains(s: Subspace, x: Vector, tol: Optional[Tolerance] = None) -> bool:
    """True iff the residual of projecting x onto s vanishes at the active tolerance."""
    if len(x) != s.ambient_dim:
        raise ShapeMismatch("vector length does not match the ambient dimension")
    if s.backend == EXACT:
        xs = [_coerce(v, EXACT) for v in x]
        if s.dim == 0:
            return all(v == 0 for v in xs)
        aug = s.basis.hstack(Matrix.from_columns([xs], EXACT))
        return len(_echelon_exact(aug.entries)[1]) == s.dim
    t = tolerance_for(s.basis, tol)
    vec = np.array([float(v) for v in x])
    norm = np.linalg.norm(vec)
    if s.dim == 0:
        return norm == 0.0
    coef, *_ = np.linalg.lstsq(s.basis.to_numpy(), vec, rcond=None)
    residual = np.linalg.norm(vec - s.basis.to_numpy() @ coef)
    return residual <= t.rel_eps * max(norm, 1e-300)


def nullspace(m: Matrix, tol: Optional[Tolerance] = None) -> list[tuple]:
    """Basis vectors of the right nullspace {x : m @ x = 0}."""
    t = tolerance_for(m, tol)
    if m.cols == 0:
        return []
    if m.backend == EXACT:
        return [tuple(v) for v in _nullspace_exact(m.entries)]
    return [tuple(v) for v in _nullspace_float(m.to_numpy(), t.rel_eps)]


def intersect(a: Subspace, b: Subspace, tol: Optional[Tolerance] = None) -> Subspace:
    """The subspace of vectors lying in both operands."""
    if a.ambient_dim != b.ambient_dim:
        raise ShapeMismatch("subspaces live in different ambient spaces")
    if a.backend != b.backend:
        raise ShapeMismatch("subspaces use different backends")
    backend = a.backend
    if a.dim == 0 or b.dim == 0:
        return Subspace(Matrix.from_columns([], backend, rows=a.ambient_dim))
    stacked = a.basis.hstack(b.basis.scale(-1))
    kernel = nullspace(stacked, tol)
    if not kernel:
        return Subspace(Matrix.from_columns([], backend, rows=a.ambient_dim))
    vectors = []
    for vec in kernel:
        u = Matrix.from_columns([vec[: a.dim]], backend)
        vectors.append((a.basis @ u).column(0))
    return span_of(vectors, tol, backend=backend)


def subspaces_equal(a: Subspace, b: Subspace, tol: Optional[Tolerance] = None) -> bool:
    """Mutual containment of bases at the active tolerance."""
    if a.ambient_dim != b.ambient_dim or a.dim != b.dim:
        return False
    return (all(contains(b, a.basis.column(j), tol) for j in range(a.dim))
            and all(contains(a, b.basis.column(j), tol) for j in range(b.dim)))


def solve_coefficients(d: Matrix, m: Matrix, tol: Optional[Tolerance] = None) -> Matrix:
    """The unique B with m = d @ B, given d of full column rank.

    Raises RankDeficient if d is not full column rank, NotInSpan if some
    column of m lies outside the column space of d.
    """
    if d.rows != m.rows or d.backend != m.backend:
        raise ShapeMismatch("dictionary and data must share row count and backend")
    if d.backend == EXACT:
        if rank(d) < d.cols:
            raise RankDeficient("dictionary does not have full column rank")
        return _solve_exact(d, m)
    t = tolerance_for(d, tol)
    a = d.to_numpy()
    if _svd_rank(a, t.rel_eps) < d.cols:
        raise RankDeficient("dictionary does not have full column rank")
    rhs = m.to_numpy()
    coef, *_ = np.linalg.lstsq(a, rhs, rcond=None)
    recon = a @ coef
    for j in range(m.cols):
        col = rhs[:, j]
        if np.linalg.norm(col - recon[:, j]) > t.rel_eps * max(np.linalg.norm(col), 1e-300):
            raise NotInSpan(f"column {j} of the data is outside the dictionary span")
    return Matrix(coef, FLOAT)


def is_zero_entry(value: Scalar, scale, tol: Tolerance) -> bool:
    """Zero test for a single entry, relative to a scale in float mode."""
    if isinstance(value, Fraction):
        return value == 0
    if tol.mode == "exact":
        return value == 0.0
    return abs(value) <= tol.rel_eps * max(float(scale), 1e-300)


def canonical_normal(normal: Sequence[Scalar]) -> tuple:
    """Scale a nonzero vector so its first nonzero entry is 1 (hashable key)."""
    lead = next((v for v in normal if v != 0), None)
    if lead is None:
        raise DegenerateInput("zero vector has no canonical scaling")
    return tuple(v / lead for v in normal)


def hyperplane_normal(columns: Matrix, tol: Optional[Tolerance] = None) -> Optional[tuple]:
    """Normal of the hyperplane spanned by the columns, or None if they do not span one.

    Only meaningful when the ambient dimension is ``columns.rows`` and a
    hyperplane means codimension one there.
    """
    kernel = nullspace(columns.transpose(), tol)
    if len(kernel) != 1:
        return None
    return kernel[0]
