"""Process factors, the discrete candidate grid, and test-set selection.

A design point addresses one grid cell by per-factor level indices; a real
point carries the corresponding values in factor units. Both are plain
tuples so they can live in sets and JSON without ceremony.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

DesignPoint = tuple[int, ...]
RealPoint = tuple[float, ...]


@dataclass(frozen=True)
class Factor:
    """A process parameter varied over an ordered set of discrete levels."""

    name: str
    unit: str
    levels: tuple[float, ...]

    def __post_init__(self):
        levels = tuple(float(v) for v in self.levels)
        object.__setattr__(self, "levels", levels)
        if len(levels) < 2:
            raise ValidationError(f"factor {self.name!r} needs at least 2 levels")
        if not all(math.isfinite(v) for v in levels):
            raise ValidationError(f"factor {self.name!r} has non-finite levels")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValidationError(
                f"factor {self.name!r} levels must be strictly increasing"
            )


@dataclass(frozen=True)
class DesignSpace:
    """Ordered factors whose level combinations form the candidate grid."""

    factors: tuple[Factor, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise ValidationError("design space needs at least one factor")
        names = [f.name for f in self.factors]
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate factor names: {names}")

    @property
    def dims(self) -> int:
        return len(self.factors)

    @property
    def grid_size(self) -> int:
        return math.prod(len(f.levels) for f in self.factors)


def default_space() -> DesignSpace:
    """Three-factor, five-level preset for single-bead deposition trials.

    Level values are configuration, not calibration: any strictly increasing
    values work, and the synthetic surfaces normalize to the factor range.
    """
    return DesignSpace(
        factors=(
            Factor("current", "A", (120.0, 140.0, 160.0, 180.0, 200.0)),
            Factor("speed", "mm/s", (4.0, 6.0, 8.0, 10.0, 12.0)),
            Factor("ctwd", "mm", (10.0, 12.0, 14.0, 16.0, 18.0)),
        )
    )


PRESETS = {"default": default_space}


def validate_point(space: DesignSpace, point: DesignPoint) -> DesignPoint:
    """Check index bounds and normalize to a tuple of ints."""
    point = tuple(int(i) for i in point)
    if len(point) != space.dims:
        raise ValidationError(
            f"point {point} has {len(point)} indices, space has {space.dims} factors"
        )
    for k, idx in enumerate(point):
        if not 0 <= idx < len(space.factors[k].levels):
            raise ValidationError(
                f"index {idx} out of range for factor {space.factors[k].name!r} "
                f"({len(space.factors[k].levels)} levels)"
            )
    return point


def enumerate_grid(space: DesignSpace) -> list[DesignPoint]:
    """All level-index combinations in lexicographic order."""
    ranges = [range(len(f.levels)) for f in space.factors]
    return [tuple(idx) for idx in itertools.product(*ranges)]


def to_real(space: DesignSpace, point: DesignPoint) -> RealPoint:
    """Map level indices to values in factor units."""
    point = validate_point(space, point)
    return tuple(space.factors[k].levels[idx] for k, idx in enumerate(point))


def nearest_point(space: DesignSpace, real: RealPoint) -> DesignPoint:
    """Snap a real-valued point to the nearest level per factor."""
    if len(real) != space.dims:
        raise ValidationError(
            f"real point has {len(real)} values, space has {space.dims} factors"
        )
    out = []
    for k, v in enumerate(real):
        levels = np.asarray(space.factors[k].levels)
        out.append(int(np.argmin(np.abs(levels - float(v)))))
    return tuple(out)


def normalize(space: DesignSpace, real: RealPoint) -> tuple[float, ...]:
    """Min-max scale a real point to [0, 1] over each factor's level range."""
    out = []
    for k, v in enumerate(real):
        lo, hi = space.factors[k].levels[0], space.factors[k].levels[-1]
        out.append((float(v) - lo) / (hi - lo))
    return tuple(out)


def select_test_set(
    space: DesignSpace,
    n: int,
    seed: int,
    excluded: frozenset[DesignPoint] | set[DesignPoint] = frozenset(),
) -> set[DesignPoint]:
    """Draw ``n`` distinct grid points uniformly, avoiding ``excluded``.

    Deterministic for a fixed seed; the held-out points are disjoint from
    every excluded (already planned) point by construction.
    """
    excluded = {validate_point(space, p) for p in excluded}
    pool = [p for p in enumerate_grid(space) if p not in excluded]
    if n < 0 or n > len(pool):
        raise ValidationError(
            f"cannot select {n} test points from {len(pool)} available grid points"
        )
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(pool), size=n, replace=False)
    return {pool[i] for i in chosen}
