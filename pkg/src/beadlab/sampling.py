"""Latin hypercube designs with maximin restarts and grid snapping."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial.distance import pdist

from .design_space import DesignPoint, DesignSpace
from .errors import ValidationError

SNAP_REDRAW_ATTEMPTS = 100


@dataclass(frozen=True, eq=False)
class LhsDesign:
    """One point per stratum per dimension, in the unit hypercube."""

    n: int
    dims: int
    unit_points: np.ndarray
    seed: int
    min_pairwise_distance: float
    snapped: tuple[DesignPoint, ...] | None = None


def _draw(n: int, dims: int, rng: np.random.Generator) -> np.ndarray:
    cols = []
    for _ in range(dims):
        perm = rng.permutation(n)
        jitter = rng.random(n)
        cols.append((perm + jitter) / n)
    return np.column_stack(cols)


def _min_distance(points: np.ndarray) -> float:
    if len(points) < 2:
        return math.inf
    return float(pdist(points).min())


def lhs(n: int, dims: int, seed: int) -> LhsDesign:
    """Seeded Latin hypercube sample: independent per-dimension permutations
    with uniform jitter inside each stratum."""
    if n < 1 or dims < 1:
        raise ValidationError(f"need n >= 1 and dims >= 1, got n={n}, dims={dims}")
    points = _draw(n, dims, np.random.default_rng(seed))
    return LhsDesign(
        n=n,
        dims=dims,
        unit_points=points,
        seed=seed,
        min_pairwise_distance=_min_distance(points),
    )


def lhs_maximin(n: int, dims: int, seed: int, restarts: int = 64) -> LhsDesign:
    """Best-spread design among ``restarts`` seeded draws.

    Restart 0 reproduces ``lhs(n, dims, seed)`` exactly; later restarts mix
    the restart index into the generator entropy so neighbouring base seeds
    do not share candidate pools. Ties keep the earliest restart.
    """
    if restarts < 1:
        raise ValidationError(f"restarts must be >= 1, got {restarts}")
    best = lhs(n, dims, seed)
    for i in range(1, restarts):
        points = _draw(n, dims, np.random.default_rng([seed, i]))
        d = _min_distance(points)
        if d > best.min_pairwise_distance:
            best = LhsDesign(
                n=n,
                dims=dims,
                unit_points=points,
                seed=seed,
                min_pairwise_distance=d,
            )
    return best


def snap_to_grid(design: LhsDesign, space: DesignSpace) -> list[DesignPoint]:
    """Map each unit point to level indices (one stratum block per level).

    Colliding points are redrawn with an incremented seed until distinct,
    bounded by SNAP_REDRAW_ATTEMPTS. When n equals the level count the
    strata align with the levels, so every factor gets a full permutation
    and collisions are impossible.
    """
    if design.dims != space.dims:
        raise ValidationError(
            f"design has {design.dims} dims, space has {space.dims} factors"
        )
    counts = [len(f.levels) for f in space.factors]

    def snap_row(row) -> DesignPoint:
        return tuple(
            min(int(u * c), c - 1) for u, c in zip(row, counts)
        )

    snapped: list[DesignPoint] = []
    taken: set[DesignPoint] = set()
    for row in design.unit_points:
        point = snap_row(row)
        attempt = 0
        while point in taken:
            attempt += 1
            if attempt > SNAP_REDRAW_ATTEMPTS:
                raise ValidationError(
                    f"could not de-duplicate snapped point after "
                    f"{SNAP_REDRAW_ATTEMPTS} redraws"
                )
            redraw = np.random.default_rng(design.seed + attempt).random(design.dims)
            point = snap_row(redraw)
        taken.add(point)
        snapped.append(point)
    return snapped


def snapped_design(design: LhsDesign, space: DesignSpace) -> LhsDesign:
    """Copy of ``design`` with the grid-snapped points attached."""
    return replace(design, snapped=tuple(snap_to_grid(design, space)))
