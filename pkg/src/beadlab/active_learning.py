"""Uncertainty-driven sequential selection on the candidate grid.

Each loop iteration fits the surrogate on everything measured so far,
queries the candidate with the highest predictive standard deviation,
and records held-out metrics after the new result lands.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gpr
from .design_space import DesignPoint, DesignSpace, enumerate_grid, to_real
from .errors import ValidationError
from .oracle import SyntheticOracle
from .response import MetricPair, composite_response, r2_score, rmse
from .sampling import lhs_maximin, snap_to_grid

# Subsystem seeds derive from the campaign seed by fixed offsets.
TEST_SEED_OFFSET = 1
LHS_SEED_OFFSET = 2
ORACLE_SEED_OFFSET = 3

MAXIMIN_RESTARTS = 64


@dataclass(frozen=True)
class AlConfig:
    """Loop sizing: seed-design size, iteration budget, refit cadence."""

    init_samples: int = 5
    max_iterations: int = 15
    reoptimize_every: int = 1

    def __post_init__(self):
        if self.init_samples < 1:
            raise ValidationError(f"init_samples must be >= 1, got {self.init_samples}")
        if self.max_iterations < 0:
            raise ValidationError(
                f"max_iterations must be >= 0, got {self.max_iterations}"
            )
        if self.reoptimize_every < 1:
            raise ValidationError(
                f"reoptimize_every must be >= 1, got {self.reoptimize_every}"
            )


@dataclass(frozen=True)
class AcquisitionResult:
    """Chosen candidate and the predictive std of every candidate."""

    chosen: DesignPoint
    scores: tuple[float, ...]


@dataclass(frozen=True)
class TraceEntry:
    """Held-out metrics after one evaluation of the growing model."""

    iteration: int
    training_size: int
    metrics: MetricPair


@dataclass
class CampaignTrace:
    """Metric history plus the order in which points were queried."""

    entries: list[TraceEntry] = field(default_factory=list)
    queried: list[DesignPoint] = field(default_factory=list)


def initial_design(space: DesignSpace, n: int, campaign_seed: int) -> list[DesignPoint]:
    """Grid-snapped maximin Latin hypercube seeding for a campaign."""
    design = lhs_maximin(
        n, space.dims, campaign_seed + LHS_SEED_OFFSET, restarts=MAXIMIN_RESTARTS
    )
    return snap_to_grid(design, space)


def reoptimize_due(training_size: int, config: AlConfig) -> bool:
    """Whether the hyperparameters are re-optimized at this training size."""
    return (training_size - config.init_samples) % config.reoptimize_every == 0


def acquire(
    model: gpr.GprModel,
    candidates: list[DesignPoint],
    space: DesignSpace,
) -> AcquisitionResult:
    """Pick the candidate with the highest predictive std.

    Candidates are scored at their real-valued coordinates; ties go to the
    lowest index in the supplied order.
    """
    if not candidates:
        raise ValidationError("acquisition needs a nonempty candidate set")
    coords = np.array([to_real(space, p) for p in candidates])
    _, stds = gpr.predict_batch(model, coords)
    chosen = int(np.argmax(stds))
    return AcquisitionResult(
        chosen=candidates[chosen], scores=tuple(float(s) for s in stds)
    )


def _fit_step(
    x: np.ndarray,
    y: np.ndarray,
    config: AlConfig,
    params: gpr.KernelParams | None,
) -> tuple[gpr.GprModel, gpr.KernelParams]:
    if params is None or reoptimize_due(len(x), config):
        params, _ = gpr.optimize_hyperparameters(x, y)
    return gpr.fit(x, y, params), params


def run_al_loop(
    space: DesignSpace,
    oracle: SyntheticOracle,
    config: AlConfig,
    test_set: set[DesignPoint],
    seed: int,
) -> CampaignTrace:
    """Run a full simulated campaign and return its metric trace.

    Seeds with a grid-snapped Latin hypercube, then alternates fit /
    acquire / measure until the iteration budget or the candidate pool is
    exhausted. Test points are measured noise-free, never queried, and
    evaluated after the seeding and after every added point, so a run that
    does not exhaust the pool produces max_iterations + 1 entries.
    """
    test_points = sorted(test_set)
    n_test = len(test_points)
    init = initial_design(space, config.init_samples, seed)
    overlap = set(init) & set(test_points)
    if overlap:
        raise ValidationError(
            f"test set overlaps the seeded design at {sorted(overlap)}; "
            "select the test set excluding the initial design"
        )

    trace = CampaignTrace()
    queried = trace.queried
    ys: list[float] = []
    for point in init:
        geometry = oracle.measure(point, n_test + len(queried))
        queried.append(point)
        ys.append(composite_response(geometry))

    actual = [oracle.true_response(p) for p in test_points]
    test_coords = np.array([to_real(space, p) for p in test_points])
    grid = enumerate_grid(space)
    blocked = set(test_points)

    def evaluate(model: gpr.GprModel, iteration: int) -> None:
        means, _ = gpr.predict_batch(model, test_coords)
        trace.entries.append(
            TraceEntry(
                iteration=iteration,
                training_size=len(queried),
                metrics=MetricPair(rmse=rmse(means, actual), r2=r2_score(means, actual)),
            )
        )

    x = np.array([to_real(space, p) for p in queried])
    model, params = _fit_step(x, np.array(ys), config, None)
    evaluate(model, iteration=0)

    for iteration in range(1, config.max_iterations + 1):
        taken = set(queried)
        pool = [p for p in grid if p not in taken and p not in blocked]
        if not pool:
            break
        result = acquire(model, pool, space)
        geometry = oracle.measure(result.chosen, n_test + len(queried))
        queried.append(result.chosen)
        ys.append(composite_response(geometry))
        x = np.array([to_real(space, p) for p in queried])
        model, params = _fit_step(x, np.array(ys), config, params)
        evaluate(model, iteration=iteration)

    return trace
