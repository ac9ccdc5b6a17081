"""Domain objects for low-rank sparse component analysis.

An instance is a data matrix M (p x n) with a target rank r and per-column
sparsity budget k (1 <= k < r <= p, rank(M) = r); a decomposition is a pair
(D, B) with M = DB, rank(D) = r and every column of B having at most k
nonzeros.  Equivalently every data column lies on at least ell = r - k of
the r hyperplanes spanned by all-but-one dictionary column, which is what
the membership matrix records.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .errors import (
    DegenerateArrangement,
    NotCovered,
    RankDeficient,
    ShapeMismatch,
)
from .linalg import (
    EXACT,
    FLOAT,
    Matrix,
    Scalar,
    Subspace,
    Tolerance,
    contains,
    intersect,
    is_zero_entry,
    rank,
    span_of,
    subspaces_equal,
    tolerance_for,
)


@dataclass(frozen=True)
class Instance:
    """Data matrix plus model parameters; ell = r - k is the co-sparsity."""

    M: Matrix
    r: int
    k: int

    def __post_init__(self):
        if not (1 <= self.k < self.r <= self.M.rows):
            raise ShapeMismatch(
                f"need 1 <= k < r <= p, got k={self.k}, r={self.r}, p={self.M.rows}")

    @property
    def ell(self) -> int:
        return self.r - self.k

    @property
    def n(self) -> int:
        return self.M.cols

    @property
    def p(self) -> int:
        return self.M.rows


@dataclass(frozen=True)
class Decomposition:
    """Dictionary/coefficient pair; validity is judged by :func:`validate`."""

    D: Matrix
    B: Matrix


@dataclass(frozen=True)
class MembershipMatrix:
    """Boolean incidence Z[j][i]: column i lies on hyperplane j."""

    Z: tuple

    @property
    def r(self) -> int:
        return len(self.Z)

    @property
    def n(self) -> int:
        return len(self.Z[0]) if self.Z else 0

    def value(self, j: int, i: int) -> bool:
        return self.Z[j][i]

    def incident(self, j: int) -> tuple:
        """Column indices lying on hyperplane j (the maximal index set)."""
        return tuple(i for i, hit in enumerate(self.Z[j]) if hit)

    def coverage(self, i: int) -> int:
        """Number of hyperplanes containing column i."""
        return sum(1 for j in range(self.r) if self.Z[j][i])


@dataclass(frozen=True)
class EquivalenceWitness:
    """Column permutation and nonzero scales mapping one dictionary onto another.

    ``apply_to(other)`` builds the matrix whose column i is
    ``scales[i] * other[:, permutation[i]]``; by construction it reproduces
    the reference dictionary within the tolerance that issued the witness.
    """

    permutation: tuple
    scales: tuple

    def apply_to(self, other: Matrix) -> Matrix:
        cols = [tuple(self.scales[i] * v for v in other.column(self.permutation[i]))
                for i in range(len(self.permutation))]
        return Matrix.from_columns(cols, other.backend)


@dataclass(frozen=True)
class ValidationReport:
    reconstruction_ok: bool
    dictionary_rank_ok: bool
    data_rank_ok: bool
    sparsity_ok: bool
    dense_columns: tuple = ()

    @property
    def passed(self) -> bool:
        return (self.reconstruction_ok and self.dictionary_rank_ok
                and self.data_rank_ok and self.sparsity_ok)


def column_nonzeros(m: Matrix, j: int, tol: Tolerance) -> int:
    """Number of non-negligible entries in column j (relative to the column max)."""
    col = m.column(j)
    if m.backend == EXACT:
        return sum(1 for v in col if v != 0)
    scale = max((abs(float(v)) for v in col), default=0.0)
    return sum(1 for v in col if not is_zero_entry(v, scale, tol))


def validate(inst: Instance, dec: Decomposition, tol: Optional[Tolerance] = None) -> ValidationReport:
    """Check M = DB, rank(D) = rank(M) = r and the per-column sparsity budget."""
    if dec.D.rows != inst.p or dec.D.cols != inst.r:
        raise ShapeMismatch(f"dictionary must be {inst.p}x{inst.r}")
    if dec.B.rows != inst.r or dec.B.cols != inst.n:
        raise ShapeMismatch(f"coefficients must be {inst.r}x{inst.n}")
    if dec.D.backend != inst.M.backend or dec.B.backend != inst.M.backend:
        raise ShapeMismatch("instance and decomposition must share a backend")
    t = tolerance_for(inst.M, tol)

    product = dec.D @ dec.B
    if inst.M.backend == EXACT:
        recon_ok = product == inst.M
    else:
        recon_ok = True
        for j in range(inst.n):
            target = inst.M.column(j)
            got = product.column(j)
            err = sum((float(a) - float(b)) ** 2 for a, b in zip(target, got)) ** 0.5
            norm = sum(float(a) ** 2 for a in target) ** 0.5
            if err > t.rel_eps * max(norm, 1e-300):
                recon_ok = False
                break

    dict_rank_ok = rank(dec.D, t) == inst.r
    data_rank_ok = rank(inst.M, t) == inst.r

    dense = tuple(j for j in range(inst.n) if column_nonzeros(dec.B, j, t) > inst.k)
    return ValidationReport(
        reconstruction_ok=recon_ok,
        dictionary_rank_ok=dict_rank_ok,
        data_rank_ok=data_rank_ok,
        sparsity_ok=not dense,
        dense_columns=dense,
    )


def hyperplanes_of(D: Matrix, tol: Optional[Tolerance] = None) -> list:
    """The r subspaces spanned by all dictionary columns but one.

    Each has dimension r - 1 inside span(D) and they are pairwise distinct
    whenever rank(D) = r, which is checked up front.
    """
    t = tolerance_for(D, tol)
    r = D.cols
    if rank(D, t) != r:
        raise RankDeficient("hyperplanes are only defined for a full-column-rank dictionary")
    cols = D.columns()
    return [span_of([c for idx, c in enumerate(cols) if idx != i], t, backend=D.backend)
            for i in range(r)]


def membership(inst: Instance, D: Matrix, tol: Optional[Tolerance] = None) -> MembershipMatrix:
    """Incidence of data columns with the dictionary's hyperplanes.

    Containment of the column in the subspace is the ground truth here, not
    the zero pattern of any particular B.  A column inside span(D) that lies
    on no hyperplane gets an all-false row of memberships; a column outside
    span(D) raises NotCovered.
    """
    t = tolerance_for(inst.M, tol)
    planes = hyperplanes_of(D, t)
    full = span_of(D.columns(), t, backend=D.backend)
    grid = [[False] * inst.n for _ in range(inst.r)]
    for i in range(inst.n):
        col = inst.M.column(i)
        hit = False
        for j, plane in enumerate(planes):
            if contains(plane, col, t):
                grid[j][i] = True
                hit = True
        if not hit and not contains(full, col, t):
            raise NotCovered(f"column {i} lies outside the span of the dictionary")
    return MembershipMatrix(tuple(tuple(row) for row in grid))


def canonical_column(col: Sequence[Scalar], backend: str, tol: Tolerance) -> tuple:
    """Deterministic scaling of a nonzero column.

    Exact mode divides by the first nonzero entry (making it 1); float mode
    scales to unit norm and flips the sign so the first significant entry is
    positive.  Exact unit norm would need irrational square roots.
    """
    if backend == EXACT:
        lead = next((v for v in col if v != 0), None)
        if lead is None:
            raise DegenerateArrangement("cannot canonicalize a zero column")
        return tuple(v / lead for v in col)
    norm = sum(float(v) ** 2 for v in col) ** 0.5
    if norm == 0.0:
        raise DegenerateArrangement("cannot canonicalize a zero column")
    scaled = [float(v) / norm for v in col]
    lead = next((v for v in scaled if abs(v) > tol.rel_eps), None)
    if lead is not None and lead < 0:
        scaled = [-v for v in scaled]
    return tuple(scaled)


def canonical_columns(D: Matrix, tol: Optional[Tolerance] = None) -> Matrix:
    t = tolerance_for(D, tol)
    return Matrix.from_columns(
        [canonical_column(D.column(j), D.backend, t) for j in range(D.cols)], D.backend)


def dictionary_from_hyperplanes(planes: Sequence[Subspace], tol: Optional[Tolerance] = None) -> Matrix:
    """Rebuild the dictionary whose hyperplane arrangement is the given one.

    Column i is a canonical basis vector of the intersection of all planes
    but the i-th; the arrangement is degenerate (and rejected) unless every
    such intersection is one-dimensional and the assembled matrix has full
    column rank.
    """
    if not planes:
        raise ShapeMismatch("need at least one subspace")
    r = len(planes)
    ambient = planes[0].ambient_dim
    backend = planes[0].backend
    if any(p.ambient_dim != ambient or p.backend != backend for p in planes):
        raise ShapeMismatch("subspaces must share ambient dimension and backend")
    if any(p.dim != r - 1 for p in planes):
        raise DegenerateArrangement("every subspace must have dimension r - 1")
    t = tolerance_for(planes[0].basis, tol)
    atoms = []
    for i in range(r):
        inter = None
        for j in range(r):
            if j == i:
                continue
            inter = planes[j] if inter is None else intersect(inter, planes[j], t)
        if inter is None or inter.dim != 1:
            raise DegenerateArrangement(
                f"intersection of all subspaces but #{i} has dimension "
                f"{0 if inter is None else inter.dim}, expected 1")
        atoms.append(canonical_column(inter.basis.column(0), backend, t))
    D = Matrix.from_columns(atoms, backend)
    if rank(D, t) != r:
        raise DegenerateArrangement("assembled dictionary is rank deficient")
    return D


def _match_exact(ref_cols, other_cols) -> Optional[list]:
    lookup = {}
    for j, col in enumerate(other_cols):
        if col in lookup:
            return None  # two columns collapse after normalization: degenerate
        lookup[col] = j
    picked = []
    for col in ref_cols:
        j = lookup.get(col)
        if j is None:
            return None
        picked.append(j)
    return picked if len(set(picked)) == len(picked) else None


def _match_float(ref_cols, other_cols, eps: float) -> Optional[list]:
    picked = []
    for col in ref_cols:
        dists = [sum((a - b) ** 2 for a, b in zip(col, cand)) ** 0.5 for cand in other_cols]
        order = sorted(range(len(other_cols)), key=lambda j: dists[j])
        best = order[0]
        if dists[best] > eps:
            return None
        if len(order) > 1 and dists[order[1]] <= eps:
            return None  # ambiguous nearest match: surface the degeneracy
        picked.append(best)
    return picked if len(set(picked)) == len(picked) else None


def essentially_equal(D: Matrix, D2: Matrix,
                      tol: Optional[Tolerance] = None) -> Optional[EquivalenceWitness]:
    """Witness that D equals D2 up to column permutation and nonzero scaling.

    Columns are matched after canonical normalization; an ambiguous match
    (two columns landing on the same target) yields None rather than an
    arbitrary resolution.  Returns None when no witness exists.
    """
    if D.rows != D2.rows or D.cols != D2.cols:
        raise ShapeMismatch("dictionaries must have identical shapes")
    if D.backend != D2.backend:
        raise ShapeMismatch("dictionaries must share a backend")
    t = tolerance_for(D, tol)
    ref = [canonical_column(D.column(j), D.backend, t) for j in range(D.cols)]
    oth = [canonical_column(D2.column(j), D.backend, t) for j in range(D2.cols)]
    if D.backend == EXACT:
        perm = _match_exact(ref, oth)
    else:
        perm = _match_float(ref, oth, t.rel_eps)
    if perm is None:
        return None

    scales = []
    for i, j in enumerate(perm):
        target = D.column(i)
        source = D2.column(j)
        if D.backend == EXACT:
            lead = next(idx for idx, v in enumerate(source) if v != 0)
            scales.append(target[lead] / source[lead])
        else:
            num = sum(float(a) * float(b) for a, b in zip(source, target))
            den = sum(float(b) ** 2 for b in source)
            scales.append(num / den)
    witness = EquivalenceWitness(tuple(perm), tuple(scales))

    rebuilt = witness.apply_to(D2)
    if D.backend == EXACT:
        if rebuilt != D:
            return None
    else:
        # the match already passed at rel_eps on unit columns; the rebuilt check
        # guards the scales, so allow a small constant factor
        for j in range(D.cols):
            err = sum((float(a) - float(b)) ** 2
                      for a, b in zip(rebuilt.column(j), D.column(j))) ** 0.5
            norm = sum(float(a) ** 2 for a in D.column(j)) ** 0.5
            if err > 4.0 * t.rel_eps * max(norm, 1e-300):
                return None
    return witness


def same_arrangement(planes_a: Sequence[Subspace], planes_b: Sequence[Subspace],
                     tol: Optional[Tolerance] = None) -> bool:
    """Set equality of two hyperplane lists under subspace equality."""
    if len(planes_a) != len(planes_b):
        return False
    unmatched = list(range(len(planes_b)))
    for pa in planes_a:
        hit = next((idx for idx in unmatched if subspaces_equal(pa, planes_b[idx], tol)), None)
        if hit is None:
            return False
        unmatched.remove(hit)
    return True
