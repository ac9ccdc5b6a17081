"""Instance factories with verified structure.

All randomness flows from ``random.Random`` (the stdlib Mersenne Twister)
seeded with the caller's integer seed, so identical parameters reproduce
identical instances bit for bit; in exact mode random scalars are ratios of
bounded random integers (|numerator|, denominator <= 10**4) to keep rational
bit sizes manageable downstream.

The constructions rely on probability-one genericity claims (full-rank
draws, no accidental incidences, spark conditions).  Sampled data cannot
cite measure theory, so every such claim is checked after the draw and the
whole instance is resampled on failure, up to a retry cap.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import InvalidParams, InvalidR, RetryExhausted
from .linalg import EXACT, Matrix, Tolerance, intersect, rank, solve_coefficients, spark
from .model import (
    Decomposition,
    Instance,
    essentially_equal,
    hyperplanes_of,
    membership,
    validate,
)

MAX_RETRIES = 100
_RATIONAL_BOUND = 10**4


@dataclass(frozen=True)
class GenSpec:
    """Parameters for a planted draw: sizes, per-hyperplane counts and the seed."""

    r: int
    k: int
    points_per_hyperplane: tuple
    seed: int

    def __post_init__(self):
        if self.r < 2:
            raise InvalidParams("need r >= 2")
        if not (1 <= self.k <= self.r - 1):
            raise InvalidParams("need 1 <= k <= r - 1")
        counts = tuple(int(c) for c in self.points_per_hyperplane)
        if len(counts) != self.r or any(c < 1 for c in counts):
            raise InvalidParams("points_per_hyperplane needs r positive entries")
        object.__setattr__(self, "points_per_hyperplane", counts)

    @property
    def n(self) -> int:
        return sum(self.points_per_hyperplane)


def _draw_scalar(rng: random.Random, backend: str):
    if backend == EXACT:
        return Fraction(rng.randint(-_RATIONAL_BOUND, _RATIONAL_BOUND),
                        rng.randint(1, _RATIONAL_BOUND))
    return rng.gauss(0.0, 1.0)


def _draw_nonzero(rng: random.Random, backend: str):
    while True:
        v = _draw_scalar(rng, backend)
        if v != 0:
            return v


def _draw_matrix(rng: random.Random, rows: int, cols: int, backend: str) -> Matrix:
    return Matrix([[_draw_scalar(rng, backend) for _ in range(cols)] for _ in range(rows)], backend)


def _draw_full_rank(rng: random.Random, rows: int, cols: int, backend: str,
                    tol: Tolerance) -> Matrix:
    for _ in range(MAX_RETRIES):
        m = _draw_matrix(rng, rows, cols, backend)
        if rank(m, tol) == min(rows, cols):
            return m
    raise RetryExhausted("could not draw a full-rank matrix")


def _planted_checks(inst: Instance, dec: Decomposition, tol: Tolerance) -> bool:
    if not validate(inst, dec, tol).passed:
        return False
    Z = membership(inst, dec.D, tol)
    # membership must coincide with the planted zero pattern of B; an
    # accidental incidence would desynchronize every downstream count
    for j in range(inst.r):
        for i in range(inst.n):
            if Z.value(j, i) != (dec.B.entry(j, i) == 0):
                return False
    # spark condition on every maximal index set that is large enough to carry it
    for j in range(inst.r):
        idx = Z.incident(j)
        if len(idx) >= inst.r - 1 and spark(inst.M.submatrix_columns(idx), tol) != inst.r:
            return False
    return True


def planted_instance(spec: GenSpec, backend: str = EXACT):
    """Draw an instance with a known decomposition planted on r hyperplanes.

    For each hyperplane j the requested number of columns is generated with a
    coefficient zero set of size ell containing j (the other ell - 1 zero
    positions drawn uniformly), nonzero coefficients random.  The draw is
    accepted only if validation passes, membership equals the planted zero
    pattern, and every index set with at least r - 1 points has spark r.
    """
    rng = random.Random(spec.seed)
    r, k = spec.r, spec.k
    ell = r - k
    tol = Tolerance.exact() if backend == EXACT else Tolerance.relative()
    for _ in range(MAX_RETRIES):
        D = _draw_full_rank(rng, r, r, backend, tol)
        b_columns = []
        for j in range(r):
            others = [idx for idx in range(r) if idx != j]
            for _ in range(spec.points_per_hyperplane[j]):
                zeros = {j}
                zeros.update(rng.sample(others, ell - 1))
                b_columns.append([(0 if backend == EXACT else 0.0) if idx in zeros
                                  else _draw_nonzero(rng, backend)
                                  for idx in range(r)])
        B = Matrix.from_columns(b_columns, backend)
        M = D @ B
        try:
            inst = Instance(M, r, k)
        except Exception:
            continue
        dec = Decomposition(D, B)
        if _planted_checks(inst, dec, tol):
            return inst, dec
    raise RetryExhausted(f"no valid planted draw after {MAX_RETRIES} attempts")


def counterexample(r: int, seed: int, backend: str = EXACT):
    """Build a matrix with two distinct decompositions at sparsity k = r - 1.

    Two random full-rank dictionaries are drawn; on each of the r^2 pairwise
    intersections of their hyperplanes, r - 2 random points are placed, for
    n = r^2 (r - 2) columns; the coefficients of both dictionaries are solved
    exactly.  Verified after the draw: all intersections have dimension
    r - 2, every hyperplane of either dictionary carries exactly r (r - 2)
    columns whose spark is r, both decompositions validate, and the two
    dictionaries are not essentially equal.  Needs r >= 3 (for r = 2 the
    intersections would be zero-dimensional).
    """
    if r < 3:
        raise InvalidR("the construction needs r >= 3")
    rng = random.Random(seed)
    tol = Tolerance.exact() if backend == EXACT else Tolerance.relative()
    k = r - 1
    n = r * r * (r - 2)
    for _ in range(MAX_RETRIES):
        d1 = _draw_full_rank(rng, r, r, backend, tol)
        d2 = _draw_full_rank(rng, r, r, backend, tol)
        planes1 = hyperplanes_of(d1, tol)
        planes2 = hyperplanes_of(d2, tol)
        columns = []
        ok = True
        for j in range(r):
            for l in range(r):
                cell = intersect(planes1[j], planes2[l], tol)
                if cell.dim != r - 2:
                    ok = False
                    break
                for _ in range(r - 2):
                    weights = Matrix.from_columns(
                        [[_draw_nonzero(rng, backend) for _ in range(cell.dim)]], backend)
                    columns.append((cell.basis @ weights).column(0))
            if not ok:
                break
        if not ok:
            continue
        M = Matrix.from_columns(columns, backend)
        try:
            inst = Instance(M, r, k)
        except Exception:
            continue
        if rank(M, tol) != r:
            continue
        try:
            b1 = solve_coefficients(d1, M, tol)
            b2 = solve_coefficients(d2, M, tol)
        except Exception:
            continue
        dec1 = Decomposition(d1, b1)
        dec2 = Decomposition(d2, b2)
        if not (validate(inst, dec1, tol).passed and validate(inst, dec2, tol).passed):
            continue
        if not _counterexample_incidence_ok(inst, (d1, d2), tol):
            continue
        if essentially_equal(d1, d2, tol) is not None:
            continue
        return M, dec1, dec2
    raise RetryExhausted(f"no valid ambiguous draw after {MAX_RETRIES} attempts")


def _counterexample_incidence_ok(inst: Instance, dictionaries, tol: Tolerance) -> bool:
    expected = inst.r * (inst.r - 2)
    for D in dictionaries:
        Z = membership(inst, D, tol)
        for j in range(inst.r):
            idx = Z.incident(j)
            if len(idx) != expected:
                return False
            if spark(inst.M.submatrix_columns(idx), tol) != inst.r:
                return False
    return True


def staircase_counts(r: int) -> tuple:
    """Per-hyperplane counts (r - j + 1)(r - 2) + 1 for j = 1..r."""
    if r < 3:
        raise InvalidR("staircase counts need r >= 3")
    return tuple((r - j + 1) * (r - 2) + 1 for j in range(1, r + 1))


def staircase_instance(r: int, seed: int, backend: str = EXACT):
    """Planted instance at k = r - 1 whose counts decrease stepwise.

    Hyperplane j carries exactly (r - j + 1)(r - 2) + 1 points and no point
    lies on more than one hyperplane, so the sequential certifier passes
    under the natural ordering while the simultaneous one cannot (the last
    hyperplane has only r - 1 points).
    """
    if r < 3:
        raise InvalidR("the staircase construction needs r >= 3")
    counts = staircase_counts(r)
    tol = Tolerance.exact() if backend == EXACT else Tolerance.relative()
    for attempt in range(MAX_RETRIES):
        spec = GenSpec(r=r, k=r - 1, points_per_hyperplane=counts,
                       seed=seed + 0x9E3779B9 * attempt)
        inst, dec = planted_instance(spec, backend)
        Z = membership(inst, dec.D, tol)
        # exclusivity: every column on exactly its home hyperplane
        if all(Z.coverage(i) == 1 for i in range(inst.n)):
            return inst, dec
    raise RetryExhausted(f"no exclusive staircase draw after {MAX_RETRIES} attempts")
