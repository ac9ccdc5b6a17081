"""Dictionary recovery from the data matrix alone.

The driver enumerates (r-1)-subsets of columns in lexicographic order; an
independent subset pins a codimension-one subspace of the rank-reduced
space, whose full incident column set is then tested against the
certification bound and the spark condition.  This is equivalent to the
naive loop over bound-sized subsets (any certified subset contains an
independent (r-1)-seed spanning the same hyperplane) while cutting the
binomial blowup to seed enumeration plus incidence scans.

The simultaneous strategy requires every hyperplane to clear the full
per-hyperplane bound; the sequential strategy lowers the bound stage by
stage, discarding from each candidate's incident set the points already
lying on r-k identified hyperplanes and charging the remaining overlaps to
the stage bound (for k = r-1 this is exactly "peel off identified points").
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

from .errors import (
    AmbiguousCover,
    CapExceeded,
    InvalidDecomposition,
    InvalidParams,
    NotIdentified,
    RankDeficient,
)
from .certify import FALLBACK_SUBSET_CAP, single_hyperplane_bound
from .linalg import (
    EXACT,
    Matrix,
    Subspace,
    Tolerance,
    canonical_normal,
    hyperplane_normal,
    nullspace,
    rank,
    reduce_to_rank_space,
    spark,
    tolerance_for,
)
from .model import Decomposition, Instance, dictionary_from_hyperplanes, validate

STRATEGIES = ("simultaneous", "sequential")


@dataclass(frozen=True)
class RecoveryConfig:
    r: int
    k: int
    tol: Optional[Tolerance] = None
    max_subsets: int = 1_000_000
    strategy: str = "simultaneous"

    def __post_init__(self):
        if not (1 <= self.k < self.r):
            raise InvalidParams(f"need 1 <= k < r, got k={self.k}, r={self.r}")
        if self.max_subsets < 1:
            raise InvalidParams("max_subsets must be positive")
        if self.strategy not in STRATEGIES:
            raise InvalidParams(f"strategy must be one of {STRATEGIES}")


@dataclass(frozen=True)
class FoundHyperplane:
    """A certified hyperplane: the subspace (in the ambient space of M),
    every incident column, and the witness subset that certified it."""

    subspace: Subspace
    index_set: tuple
    witness: tuple


class _Engine:
    """Shared seed-enumeration state for one recovery run."""

    def __init__(self, M: Matrix, cfg: RecoveryConfig):
        self.M = M
        self.cfg = cfg
        self.tol = tolerance_for(M, cfg.tol)
        self.reduced, self.lift = reduce_to_rank_space(M, self.tol)
        if self.reduced.rows != cfg.r:
            raise RankDeficient(
                f"data has rank {self.reduced.rows}, expected r = {cfg.r}")
        self.n = M.cols
        self.cols = [self.reduced.column(j) for j in range(self.n)]
        self.budget = cfg.max_subsets
        self.spark_cache: dict = {}

    # -- scalar helpers -----------------------------------------------------
    def _dot_is_zero(self, normal, col) -> bool:
        s = sum(a * b for a, b in zip(normal, col))
        if self.M.backend == EXACT:
            return s == 0
        nn = sum(float(a) ** 2 for a in normal) ** 0.5
        cn = sum(float(b) ** 2 for b in col) ** 0.5
        return abs(s) <= self.tol.rel_eps * max(nn * cn, 1e-300)

    def _normal_of_seed(self, combo) -> Optional[tuple]:
        seed = Matrix.from_columns([self.cols[j] for j in combo],
                                   self.M.backend, rows=self.cfg.r)
        return hyperplane_normal(seed, self.tol)

    def _same_normal(self, a, b) -> bool:
        if self.M.backend == EXACT:
            return canonical_normal(a) == canonical_normal(b)
        an = sum(float(v) ** 2 for v in a) ** 0.5
        bn = sum(float(v) ** 2 for v in b) ** 0.5
        dot = abs(sum(float(x) * float(y) for x, y in zip(a, b)))
        return dot >= (1.0 - 1e3 * self.tol.rel_eps) * an * bn

    def incident_columns(self, normal) -> tuple:
        return tuple(i for i in range(self.n) if self._dot_is_zero(normal, self.cols[i]))

    # -- certification ------------------------------------------------------
    def _spark_is_r(self, idx: tuple) -> bool:
        if idx not in self.spark_cache:
            sub = self.reduced.submatrix_columns(idx)
            self.spark_cache[idx] = spark(sub, self.tol) == self.cfg.r
        return self.spark_cache[idx]

    def witness_subset(self, idx: tuple, size: int) -> Optional[tuple]:
        """First (lexicographic) spark-r subset of the given size, or None."""
        if len(idx) < size:
            return None
        if self._spark_is_r(idx):
            return idx[:size]
        examined = 0
        for sub in combinations(idx, size):
            examined += 1
            if examined > FALLBACK_SUBSET_CAP:
                return None
            if self._spark_is_r(sub):
                return sub
        return None

    def ambient_subspace(self, normal) -> Subspace:
        kernel = nullspace(Matrix([normal], self.M.backend), self.tol)
        basis_reduced = Matrix.from_columns(kernel, self.M.backend, rows=self.cfg.r)
        return Subspace(self.lift @ basis_reduced)

    # -- enumeration --------------------------------------------------------
    def scan(self, required: int, skip_normals: list, skip_index_sets: list,
             overlap_of=None):
        """Yield FoundHyperplane objects in seed order.

        ``required`` is the incident-count bound; ``overlap_of`` (sequential
        stages) maps a column index to its overlap with identified
        hyperplanes, and columns with overlap >= r-k are discarded before
        counting, with the surviving overlap total charged to the bound.
        """
        r, k = self.cfg.r, self.cfg.k
        for combo in combinations(range(self.n), r - 1):
            if self.budget <= 0:
                raise CapExceeded("subset enumeration cap exhausted", partial=None)
            self.budget -= 1
            if any(all(j in s for j in combo) for s in skip_index_sets):
                continue
            normal = self._normal_of_seed(combo)
            if normal is None:
                continue
            if any(self._same_normal(normal, known) for known in skip_normals):
                continue
            incident = self.incident_columns(normal)
            if overlap_of is None:
                kept = incident
                bound = required
            else:
                kept = tuple(i for i in incident if overlap_of(i) <= r - k - 1)
                total = sum(overlap_of(i) for i in kept)
                bound = required(total) if callable(required) else required
            size = max(bound, r - 1)
            witness = self.witness_subset(kept, size)
            if witness is None or len(kept) < bound:
                continue
            yield FoundHyperplane(
                subspace=self.ambient_subspace(normal),
                index_set=incident,
                witness=witness,
            ), normal, kept


def find_certified_hyperplanes(M: Matrix, cfg: RecoveryConfig,
                               max_found: Optional[int] = None) -> list:
    """Certified hyperplanes of M at the full per-hyperplane bound.

    Enumeration is lexicographic and deterministic; results are deduplicated
    by subspace (keeping the first witness) and the scan stops after
    ``max_found`` hits (default r).  Raises CapExceeded with partial results
    when the subset budget runs out.
    """
    engine = _Engine(M, cfg)
    limit = cfg.r if max_found is None else max_found
    bound = single_hyperplane_bound(cfg.r, cfg.k)
    found: list = []
    normals: list = []
    index_sets: list = []
    try:
        for hit, normal, _ in engine.scan(bound, normals, index_sets):
            found.append(hit)
            normals.append(normal)
            index_sets.append(set(hit.index_set))
            if len(found) >= limit:
                break
    except CapExceeded as exc:
        raise CapExceeded(str(exc), partial=found) from None
    return found


def _recover_sequential(engine: _Engine) -> list:
    r, k = engine.cfg.r, engine.cfg.k
    found: list = []
    normals: list = []
    index_sets: list = []
    incident_sets: list = []

    def overlap_of(i: int) -> int:
        return sum(1 for s in incident_sets if i in s)

    for stage in range(1, r + 1):
        base = (r - stage + 1) * (r - 2)

        def bound_for(total_overlap: int, base=base) -> int:
            return (base + total_overlap) // (r - k) + 1

        try:
            hit_iter = engine.scan(bound_for, normals, index_sets, overlap_of=overlap_of)
            hit, normal, _ = next(hit_iter)
        except StopIteration:
            raise NotIdentified(
                f"stage {stage}: no hyperplane clears the bound") from None
        except CapExceeded as exc:
            raise CapExceeded(str(exc), partial=found) from None
        found.append(hit)
        normals.append(normal)
        index_sets.append(set(hit.index_set))
        incident_sets.append(set(hit.index_set))
    return found


def recover(M: Matrix, cfg: RecoveryConfig) -> Decomposition:
    """Recover the unique decomposition of M, or raise.

    Raises NotIdentified when fewer than r hyperplanes certify,
    AmbiguousCover when more than r do (only possible off-model), and
    InvalidDecomposition when the assembled pair fails validation.
    """
    engine = _Engine(M, cfg)
    if cfg.strategy == "simultaneous":
        bound = single_hyperplane_bound(cfg.r, cfg.k)
        found: list = []
        normals: list = []
        index_sets: list = []
        for hit, normal, _ in engine.scan(bound, normals, index_sets):
            found.append(hit)
            normals.append(normal)
            index_sets.append(set(hit.index_set))
            if len(found) > cfg.r:
                raise AmbiguousCover(
                    f"more than r = {cfg.r} certified hyperplanes; data violates the model")
        if len(found) < cfg.r:
            raise NotIdentified(
                f"only {len(found)} of {cfg.r} hyperplanes certified")
    else:
        found = _recover_sequential(engine)

    planes = [hit.subspace for hit in found]
    D = dictionary_from_hyperplanes(planes, engine.tol)
    from .linalg import solve_coefficients
    B = solve_coefficients(D, M, engine.tol)
    dec = Decomposition(D, B)
    report = validate(Instance(M, cfg.r, cfg.k), dec, engine.tol)
    if not report.passed:
        raise InvalidDecomposition(
            "assembled decomposition failed validation "
            f"(reconstruction={report.reconstruction_ok}, sparsity={report.sparsity_ok})")
    return dec
