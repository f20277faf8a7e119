"""Balanced orthogonal designs and the additive level-effects predictor.

The array construction uses modular arithmetic over a prime level count:
with a = row div p and b = row mod p, the columns are a, b, and
(a + m*b) mod p for m = 1..p-1, giving p^2 rows and up to p+1 columns in
which every ordered level pair appears exactly once per column pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design_space import DesignPoint, DesignSpace, validate_point
from .errors import CoverageError, UnsupportedError, ValidationError


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % k for k in range(2, int(n**0.5) + 1))


@dataclass(frozen=True)
class OrthogonalArray:
    """A strength-2 design matrix of level indices."""

    levels: int
    cells: tuple[tuple[int, ...], ...]

    @property
    def rows(self) -> int:
        return len(self.cells)

    @property
    def columns(self) -> int:
        return len(self.cells[0])


def build_orthogonal_array(levels: int = 5, columns: int | None = None) -> OrthogonalArray:
    """Construct the p^2-row orthogonal array for a prime level count.

    Args:
        levels: number of levels per column; must be prime.
        columns: how many columns to emit, at most levels + 1 (default).
    """
    if not _is_prime(levels):
        raise UnsupportedError(
            f"orthogonal array construction needs a prime level count, got {levels}"
        )
    if columns is None:
        columns = levels + 1
    if not 1 <= columns <= levels + 1:
        raise ValidationError(
            f"columns must be in 1..{levels + 1} for {levels} levels, got {columns}"
        )
    cells = []
    for row in range(levels * levels):
        a, b = divmod(row, levels)
        full = [a, b] + [(a + m * b) % levels for m in range(1, levels)]
        cells.append(tuple(full[:columns]))
    return OrthogonalArray(levels=levels, cells=tuple(cells))


def array_design(space: DesignSpace) -> list[DesignPoint]:
    """The orthogonal-array rows as grid points for ``space``.

    Requires every factor to share one prime level count (the five-level,
    three-factor default gives the familiar 25-row plan).
    """
    counts = {len(f.levels) for f in space.factors}
    if len(counts) != 1:
        raise UnsupportedError(
            "orthogonal-array planning needs equal level counts per factor, "
            f"got {sorted(counts)}"
        )
    (levels,) = counts
    array = build_orthogonal_array(levels=levels, columns=space.dims)
    return [tuple(row) for row in array.cells]


@dataclass(frozen=True)
class MainEffectsModel:
    """Additive predictor: overall mean plus a per-factor, per-level offset."""

    space: DesignSpace
    overall_mean: float
    effects: tuple[tuple[float, ...], ...]


@dataclass(frozen=True)
class FactorAnalysis:
    """Per-factor level means, spread (delta), and influence rank."""

    factor_names: tuple[str, ...]
    level_values: tuple[tuple[float, ...], ...]
    level_means: tuple[tuple[float, ...], ...]
    deltas: tuple[float, ...]
    ranks: tuple[int, ...]


def fit_main_effects(
    space: DesignSpace,
    design: list[DesignPoint],
    responses: list[float],
) -> MainEffectsModel:
    """Fit the additive model from observed (point, response) pairs.

    Replicated cells are collapsed to their mean first, so repeated runs of
    one combination do not skew the level means. Every (factor, level) must
    be observed at least once.
    """
    if len(design) != len(responses):
        raise ValidationError(
            f"{len(design)} design points vs {len(responses)} responses"
        )
    if not design:
        raise ValidationError("cannot fit on an empty design")
    cells: dict[DesignPoint, list[float]] = {}
    for point, y in zip(design, responses):
        cells.setdefault(validate_point(space, point), []).append(float(y))
    points = list(cells)
    cell_means = np.array([np.mean(cells[p]) for p in points])

    for k, factor in enumerate(space.factors):
        seen = {p[k] for p in points}
        for lv in range(len(factor.levels)):
            if lv not in seen:
                raise CoverageError(
                    f"no observations for factor {factor.name!r} at level index "
                    f"{lv} (value {factor.levels[lv]})"
                )

    mu = float(cell_means.mean())
    effects = []
    for k, factor in enumerate(space.factors):
        per_level = []
        for lv in range(len(factor.levels)):
            sel = [i for i, p in enumerate(points) if p[k] == lv]
            per_level.append(float(cell_means[sel].mean()) - mu)
        effects.append(tuple(per_level))
    return MainEffectsModel(space=space, overall_mean=mu, effects=tuple(effects))


def predict_main_effects(model: MainEffectsModel, point: DesignPoint) -> float:
    """Overall mean plus the summed level effects at ``point``."""
    point = validate_point(model.space, point)
    return model.overall_mean + sum(
        model.effects[k][idx] for k, idx in enumerate(point)
    )


def analyze_factors(model: MainEffectsModel) -> FactorAnalysis:
    """Level means, per-factor delta (max - min), and influence ranking.

    Rank 1 goes to the largest delta; ties keep factor declaration order.
    """
    level_means = tuple(
        tuple(model.overall_mean + e for e in per_factor)
        for per_factor in model.effects
    )
    deltas = tuple(max(m) - min(m) for m in level_means)
    order = sorted(range(len(deltas)), key=lambda k: (-deltas[k], k))
    ranks = [0] * len(deltas)
    for rank, k in enumerate(order, start=1):
        ranks[k] = rank
    return FactorAnalysis(
        factor_names=tuple(f.name for f in model.space.factors),
        level_values=tuple(f.levels for f in model.space.factors),
        level_means=level_means,
        deltas=deltas,
        ranks=tuple(ranks),
    )
