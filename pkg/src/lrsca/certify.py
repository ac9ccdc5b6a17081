"""Sufficient identifiability conditions as machine-checkable certificates.

A single hyperplane is pinned by any decomposition once it carries
``floor(r(r-2)/(r-k)) + 1`` data points of spark r spanning an
(r-1)-dimensional subspace; certifying all r hyperplanes that way at once is
the simultaneous condition.  The sequential condition processes hyperplanes
in an order and relaxes the count at position j to
``floor(((r-j+1)(r-2) + sum of overlaps) / (r-k)) + 1``, where a point's
overlap is the number of already-processed hyperplanes containing it;
points with overlap >= r-k may be discarded up front without loss.  The
simplified sequential variant replaces the count test by
``|I_j| > (r-j+1)(r-2)`` and needs no overlap bookkeeping (it coincides
with the pruned sequential test exactly when k = r-1).

Certifiers take the membership matrix of a known candidate decomposition:
they certify "this instance's decomposition is the unique one".  Search
without a candidate lives in the recover module.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Optional

from .errors import InvalidParams, ShapeMismatch
from .linalg import Matrix, Subspace, Tolerance, rank, span_of, spark, tolerance_for
from .model import Instance, MembershipMatrix

TAG_SINGLE = "single-hyperplane"
TAG_SIMULTANEOUS = "simultaneous"
TAG_SEQUENTIAL = "sequential"
TAG_SEQUENTIAL_SIMPLE = "sequential-simple"

EXHAUSTIVE_ORDERING_LIMIT = 8
FALLBACK_SUBSET_CAP = 20000


@dataclass(frozen=True)
class HyperplaneCert:
    """One certified hyperplane: which columns pin it and which bound they beat."""

    index_set: tuple
    subspace: Subspace
    spark_value: int
    bound_used: int
    theorem_tag: str


@dataclass(frozen=True)
class Certificate:
    """Full certificate: r hyperplane certificates plus, for sequential
    methods, the ordering used and the overlap table keyed (column, hyperplane)."""

    per_hyperplane: tuple
    ordering: Optional[tuple] = None
    overlaps: Optional[dict] = None

    @property
    def method(self) -> str:
        return self.per_hyperplane[0].theorem_tag if self.per_hyperplane else TAG_SINGLE


def single_hyperplane_bound(r: int, k: int) -> int:
    """Points needed on one hyperplane to force it into every decomposition."""
    if not (1 <= k < r):
        raise InvalidParams(f"need 1 <= k < r, got k={k}, r={r}")
    return (r * (r - 2)) // (r - k) + 1


def minimum_total_points(r: int, k: int) -> int:
    """Total sample size the simultaneous condition implies.

    Each column lies on r - k hyperplanes, so it can serve r - k index sets:
    ceil(r * single_hyperplane_bound / (r - k)).
    """
    bound = single_hyperplane_bound(r, k)
    return -((-r * bound) // (r - k))


def certify_hyperplane(points: Matrix, r: int, k: int,
                       tol: Optional[Tolerance] = None,
                       indices: Optional[tuple] = None) -> Optional[HyperplaneCert]:
    """Certify that the span of these points appears in every decomposition.

    Requires count >= single_hyperplane_bound(r, k), rank exactly r - 1 and
    spark exactly r; returns None when any condition fails.
    """
    bound = single_hyperplane_bound(r, k)
    if points.cols < bound:
        return None
    t = tolerance_for(points, tol)
    if rank(points, t) != r - 1:
        return None
    if spark(points, t) != r:
        return None
    idx = tuple(indices) if indices is not None else tuple(range(points.cols))
    return HyperplaneCert(
        index_set=idx,
        subspace=span_of(points.columns(), t, backend=points.backend),
        spark_value=r,
        bound_used=bound,
        theorem_tag=TAG_SINGLE,
    )


def _check_consistency(inst: Instance, Z: MembershipMatrix):
    if Z.r != inst.r or Z.n != inst.n:
        raise ShapeMismatch("membership matrix does not match the instance")


def _spark_ok(inst: Instance, idx: tuple, tol: Tolerance, cache: dict) -> bool:
    key = idx
    if key not in cache:
        if len(idx) < inst.r - 1:
            cache[key] = False
        else:
            sub = inst.M.submatrix_columns(idx)
            cache[key] = (rank(sub, tol) == inst.r - 1
                          and spark(sub, tol) == inst.r)
    return cache[key]


def _certified_subset(inst: Instance, idx: tuple, bound: int, tol: Tolerance,
                      cache: dict) -> Optional[tuple]:
    """The index set itself if it carries the conditions, else the first
    bound-sized subset with spark r (bounded fallback search), else None."""
    if len(idx) < bound:
        return None
    if _spark_ok(inst, idx, tol, cache):
        return idx
    if len(idx) == bound:
        return None
    examined = 0
    for sub in combinations(idx, max(bound, inst.r - 1)):
        examined += 1
        if examined > FALLBACK_SUBSET_CAP:
            return None
        if _spark_ok(inst, sub, tol, cache):
            return sub
    return None


def certify_simultaneous(inst: Instance, Z: MembershipMatrix,
                         tol: Optional[Tolerance] = None) -> Optional[Certificate]:
    """All r hyperplanes certified independently at the full bound."""
    _check_consistency(inst, Z)
    t = tolerance_for(inst.M, tol)
    bound = single_hyperplane_bound(inst.r, inst.k)
    cache: dict = {}
    certs = []
    for j in range(inst.r):
        idx = _certified_subset(inst, Z.incident(j), bound, t, cache)
        if idx is None:
            return None
        certs.append(HyperplaneCert(
            index_set=idx,
            subspace=span_of([inst.M.column(i) for i in idx], t, backend=inst.M.backend),
            spark_value=inst.r,
            bound_used=bound,
            theorem_tag=TAG_SIMULTANEOUS,
        ))
    return Certificate(per_hyperplane=tuple(certs))


def overlap_counts(Z: MembershipMatrix, ordering: tuple) -> dict:
    """overlaps[(i, j)]: hyperplanes preceding j in the ordering that contain column i.

    Defined for every incident pair (i on hyperplane j).
    """
    if sorted(ordering) != list(range(Z.r)):
        raise InvalidParams("ordering must be a permutation of the hyperplane indices")
    position = {h: t for t, h in enumerate(ordering)}
    out = {}
    for j in range(Z.r):
        earlier = [p for p in ordering[:position[j]]]
        for i in Z.incident(j):
            out[(i, j)] = sum(1 for p in earlier if Z.value(p, i))
    return out


def _orderings(inst: Instance, Z: MembershipMatrix, strategy: str):
    if strategy not in ("exhaustive", "greedy"):
        raise InvalidParams(f"unknown ordering strategy {strategy!r}")
    if strategy == "exhaustive" and inst.r <= EXHAUSTIVE_ORDERING_LIMIT:
        return permutations(range(inst.r))
    # greedy: descending incidence, ties by lowest hyperplane index
    return iter([tuple(sorted(range(inst.r), key=lambda j: (-len(Z.incident(j)), j)))])


def _try_sequential_ordering(inst: Instance, Z: MembershipMatrix, ordering: tuple,
                             tol: Tolerance, cache: dict, prune: bool,
                             simple: bool) -> Optional[tuple]:
    r, k = inst.r, inst.k
    certs = []
    for t_pos, j in enumerate(ordering, start=1):
        idx = Z.incident(j)
        if simple:
            kept = idx
            bound = (r - t_pos + 1) * (r - 2) + 1
        else:
            earlier = ordering[:t_pos - 1]
            overlaps = {i: sum(1 for p in earlier if Z.value(p, i)) for i in idx}
            if prune:
                kept = tuple(i for i in idx if overlaps[i] <= r - k - 1)
            else:
                kept = idx
            total_overlap = sum(overlaps[i] for i in kept)
            bound = ((r - t_pos + 1) * (r - 2) + total_overlap) // (r - k) + 1
        chosen = _certified_subset(inst, kept, max(bound, r - 1), tol, cache)
        if chosen is None or len(chosen) < bound:
            return None
        certs.append(HyperplaneCert(
            index_set=chosen,
            subspace=span_of([inst.M.column(i) for i in chosen], tol, backend=inst.M.backend),
            spark_value=r,
            bound_used=bound,
            theorem_tag=TAG_SEQUENTIAL_SIMPLE if simple else TAG_SEQUENTIAL,
        ))
    return tuple(certs)


def certify_sequential(inst: Instance, Z: MembershipMatrix,
                       tol: Optional[Tolerance] = None,
                       ordering_strategy: str = "exhaustive",
                       prune: bool = True) -> Optional[Certificate]:
    """Sequential certification, searching hyperplane orderings.

    Exhaustive search (lexicographic, first success reported) up to r = 8,
    greedy by descending incidence beyond; ``prune`` discards points whose
    overlap with already-processed hyperplanes reaches r - k before any
    counting, which is always sound.
    """
    _check_consistency(inst, Z)
    t = tolerance_for(inst.M, tol)
    cache: dict = {}
    for ordering in _orderings(inst, Z, ordering_strategy):
        certs = _try_sequential_ordering(inst, Z, tuple(ordering), t, cache,
                                         prune=prune, simple=False)
        if certs is not None:
            return Certificate(per_hyperplane=certs, ordering=tuple(ordering),
                               overlaps=overlap_counts(Z, tuple(ordering)))
    return None


def certify_sequential_simple(inst: Instance, Z: MembershipMatrix,
                              tol: Optional[Tolerance] = None,
                              ordering_strategy: str = "exhaustive") -> Optional[Certificate]:
    """Sequential certification on raw counts: position j needs more than
    (r-j+1)(r-2) points, no overlap table."""
    _check_consistency(inst, Z)
    t = tolerance_for(inst.M, tol)
    cache: dict = {}
    for ordering in _orderings(inst, Z, ordering_strategy):
        certs = _try_sequential_ordering(inst, Z, tuple(ordering), t, cache,
                                         prune=False, simple=True)
        if certs is not None:
            return Certificate(per_hyperplane=certs, ordering=tuple(ordering))
    return None
