"""Campaign orchestration: strategy plans, the run log, held-out evaluation,
comparison reports, CSV exports, and canonical JSON persistence.

A campaign is the persistent unit of a whole study. One writer at a time
mutates a state; every mutation bumps ``version`` by exactly one so the
service layer can do compare-and-set. Synthetic campaigns execute
suggestions immediately; manual campaigns park a pending measurement until
the operator records the result.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from . import gpr
from .active_learning import (
    TEST_SEED_OFFSET,
    AlConfig,
    TraceEntry,
    acquire,
    initial_design,
)
from .design_space import (
    DesignPoint,
    DesignSpace,
    Factor,
    enumerate_grid,
    select_test_set,
    to_real,
    validate_point,
)
from .errors import (
    PendingConflictError,
    SchemaError,
    ValidationError,
)
from .oracle import OracleSpec, PendingMeasurement, SyntheticOracle
from .response import BeadGeometry, MetricPair, composite_response, r2_score, rmse
from .taguchi import (
    FactorAnalysis,
    analyze_factors,
    array_design,
    fit_main_effects,
    predict_main_effects,
)

SCHEMA_VERSION = 1
STRATEGIES = ("taguchi", "gpr_al")
STATUSES = ("created", "running", "awaiting_measurement", "complete")

# Fixed epoch for auto-executed runs: reruns of the same seed must produce
# byte-identical campaign files, which rules out wall-clock stamps.
_SYNTHETIC_EPOCH = datetime(2001, 1, 1, tzinfo=timezone.utc)


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")


def _synthetic_timestamp(index: int) -> str:
    stamp = _SYNTHETIC_EPOCH + timedelta(seconds=index)
    return stamp.isoformat().replace("+00:00", "Z")


@dataclass(frozen=True)
class RunRecord:
    """One executed experiment: the point, its geometry, and the response."""

    point: DesignPoint
    geometry: BeadGeometry
    response: float
    timestamp: str


@dataclass
class TestCase:
    """A held-out point, with its measurement once available."""

    point: DesignPoint
    geometry: BeadGeometry | None = None
    response: float | None = None


@dataclass
class CampaignState:
    """Everything a campaign needs to resume, evaluate, and export."""

    id: str
    space: DesignSpace
    strategy: str
    oracle: OracleSpec
    config: AlConfig | None
    seed: int
    noisy_test: bool
    plan: list[DesignPoint]
    runs: list[RunRecord] = field(default_factory=list)
    test_set: list[TestCase] = field(default_factory=list)
    trace: list[TraceEntry] = field(default_factory=list)
    status: str = "created"
    pending: PendingMeasurement | None = None
    version: int = 0
    schema_version: int = SCHEMA_VERSION
    _params_cache: dict[int, gpr.KernelParams] = field(
        default_factory=dict, repr=False, compare=False
    )

    @property
    def run_points(self) -> set[DesignPoint]:
        return {r.point for r in self.runs}

    @property
    def test_points(self) -> set[DesignPoint]:
        return {t.point for t in self.test_set}


@dataclass(frozen=True)
class Suggestion:
    """What to do next: a point, and the measurement when auto-executed."""

    point: DesignPoint
    executed: bool
    geometry: BeadGeometry | None = None
    response: float | None = None


def _make_oracle(state: CampaignState) -> SyntheticOracle | None:
    if state.oracle.kind != "synthetic":
        return None
    return SyntheticOracle(spec=state.oracle, space=state.space)


def init_campaign(
    space: DesignSpace,
    strategy: str,
    oracle: OracleSpec,
    config: AlConfig | None = None,
    seed: int = 0,
    *,
    test_size: int = 15,
    test_set: set[DesignPoint] | None = None,
    noisy_test: bool = False,
    campaign_id: str | None = None,
) -> CampaignState:
    """Create a campaign: plan the experiments and hold out the test set.

    The orthogonal-array strategy pre-plans all its rows; the surrogate
    strategy plans only its seeded design and grows by acquisition. The
    test set is disjoint from every planned point, either by construction
    or by validation when supplied explicitly (paired benchmarks share one
    test set across both strategies).
    """
    if strategy not in STRATEGIES:
        raise ValidationError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    if strategy == "gpr_al":
        config = config or AlConfig()
        plan = initial_design(space, config.init_samples, seed)
    else:
        config = None
        plan = array_design(space)

    if test_set is None:
        chosen = select_test_set(
            space, test_size, seed + TEST_SEED_OFFSET, excluded=set(plan)
        )
    else:
        chosen = {validate_point(space, p) for p in test_set}
        overlap = chosen & set(plan)
        if overlap:
            raise ValidationError(
                f"supplied test set overlaps planned points at {sorted(overlap)}"
            )
    cases = [TestCase(point=p) for p in sorted(chosen)]

    state = CampaignState(
        id=campaign_id or f"{strategy}-s{seed}",
        space=space,
        strategy=strategy,
        oracle=oracle,
        config=config,
        seed=seed,
        noisy_test=noisy_test,
        plan=plan,
        test_set=cases,
    )
    synthetic = _make_oracle(state)
    if synthetic is not None:
        # Held-out truth is measured up front: noise-free by default so both
        # strategies score against the same surface, optionally noisy via
        # the reserved query indices 0..n_test-1.
        for i, case in enumerate(state.test_set):
            geometry = (
                synthetic.measure(case.point, i)
                if noisy_test
                else synthetic.measure_true(case.point)
            )
            case.geometry = geometry
            case.response = composite_response(geometry)
    return state


def peek_suggestion(state: CampaignState) -> DesignPoint | None:
    """Next planned point, if the plan is not exhausted. No side effects."""
    if state.status == "complete":
        return None
    if len(state.runs) < len(state.plan):
        return state.plan[len(state.runs)]
    return None


def _params_for_size(state: CampaignState, size: int) -> gpr.KernelParams:
    """Hyperparameters used for a fit on the first ``size`` runs.

    Re-optimized at sizes hitting the reoptimize cadence, carried forward
    otherwise; anchored sizes are cached per in-memory state (recomputing
    is deterministic, so the cache never changes results).
    """
    config = state.config
    since_init = size - config.init_samples
    anchor = config.init_samples + (since_init // config.reoptimize_every) * (
        config.reoptimize_every
    )
    anchor = max(anchor, config.init_samples)
    if anchor not in state._params_cache:
        runs = state.runs[:anchor]
        x = np.array([to_real(state.space, r.point) for r in runs])
        y = np.array([r.response for r in runs])
        params, _ = gpr.optimize_hyperparameters(x, y)
        state._params_cache[anchor] = params
    return state._params_cache[anchor]


def _fit_gpr(state: CampaignState, size: int | None = None) -> gpr.GprModel:
    size = len(state.runs) if size is None else size
    if size < max(3, state.config.init_samples):
        raise ValidationError(
            f"surrogate evaluation needs at least "
            f"{max(3, state.config.init_samples)} runs, have {size}"
        )
    params = _params_for_size(state, size)
    runs = state.runs[:size]
    x = np.array([to_real(state.space, r.point) for r in runs])
    y = np.array([r.response for r in runs])
    return gpr.fit(x, y, params)


def _predict_points(
    state: CampaignState, points: list[DesignPoint], size: int | None = None
) -> list[float]:
    if state.strategy == "taguchi":
        design = [r.point for r in state.runs]
        responses = [r.response for r in state.runs]
        model = fit_main_effects(state.space, design, responses)
        return [predict_main_effects(model, p) for p in points]
    model = _fit_gpr(state, size)
    coords = np.array([to_real(state.space, p) for p in points])
    means, _ = gpr.predict_batch(model, coords)
    return [float(m) for m in means]


def _require_test_measurements(state: CampaignState) -> list[float]:
    missing = [t.point for t in state.test_set if t.response is None]
    if missing:
        raise ValidationError(
            f"{len(missing)} test point(s) lack measurements, e.g. {missing[0]}"
        )
    return [t.response for t in state.test_set]


def evaluate(state: CampaignState, holdout: str = "test") -> MetricPair:
    """Fit on the run log and score predictions on held-out points.

    ``holdout="test"`` scores the campaign's test set; ``holdout="grid"``
    scores every non-design grid point against the noise-free surface
    (synthetic oracles only), exposing the broader generalization view.
    """
    if holdout == "test":
        actual = _require_test_measurements(state)
        points = [t.point for t in state.test_set]
    elif holdout == "grid":
        synthetic = _make_oracle(state)
        if synthetic is None:
            raise ValidationError("grid holdout needs a synthetic oracle")
        taken = state.run_points
        points = [p for p in enumerate_grid(state.space) if p not in taken]
        actual = [synthetic.true_response(p) for p in points]
    else:
        raise ValidationError(f"holdout must be 'test' or 'grid', got {holdout!r}")
    preds = _predict_points(state, points)
    return MetricPair(rmse=rmse(preds, actual), r2=r2_score(preds, actual))


def _ready_sizes(state: CampaignState) -> list[int]:
    """Training sizes whose evaluation can enter the trace right now."""
    if any(t.response is None for t in state.test_set):
        return []
    if state.strategy == "taguchi":
        return [len(state.runs)] if len(state.runs) == len(state.plan) else []
    first = max(3, state.config.init_samples)
    return list(range(first, len(state.runs) + 1))


def _evaluate_into_trace(state: CampaignState) -> None:
    """Append (or refresh) trace entries for every evaluable training size.

    Backfills sizes that could not be evaluated earlier (manual campaigns
    often receive test measurements late); re-evaluating an existing size
    replaces its entry, keeping the trace one entry per size.
    """
    have = {e.training_size for e in state.trace}
    for size in _ready_sizes(state):
        if size in have:
            continue
        points = [t.point for t in state.test_set]
        actual = [t.response for t in state.test_set]
        preds = _predict_points(state, points, size=size)
        iteration = (
            0 if state.strategy == "taguchi" else size - state.config.init_samples
        )
        state.trace.append(
            TraceEntry(
                iteration=iteration,
                training_size=size,
                metrics=MetricPair(rmse=rmse(preds, actual), r2=r2_score(preds, actual)),
            )
        )
        have.add(size)


def _planned_total(state: CampaignState) -> int:
    if state.strategy == "taguchi":
        return len(state.plan)
    return state.config.init_samples + state.config.max_iterations


def _check_complete(state: CampaignState) -> None:
    done = len(state.runs) >= _planned_total(state)
    evaluated = any(e.training_size == len(state.runs) for e in state.trace)
    if done and evaluated:
        state.status = "complete"


def _candidate_pool(state: CampaignState) -> list[DesignPoint]:
    blocked = state.run_points | state.test_points
    return [p for p in enumerate_grid(state.space) if p not in blocked]


def _next_point(state: CampaignState) -> DesignPoint | None:
    if len(state.runs) < len(state.plan):
        return state.plan[len(state.runs)]
    if state.strategy == "gpr_al" and len(state.runs) < _planned_total(state):
        pool = _candidate_pool(state)
        if not pool:
            return None
        model = _fit_gpr(state)
        return acquire(model, pool, state.space).chosen
    return None


def _append_run(
    state: CampaignState, point: DesignPoint, geometry: BeadGeometry, timestamp: str
) -> RunRecord:
    record = RunRecord(
        point=point,
        geometry=geometry,
        response=composite_response(geometry),
        timestamp=timestamp,
    )
    state.runs.append(record)
    return record


def next_suggestion(state: CampaignState) -> Suggestion | None:
    """Advance the campaign by one step.

    Synthetic campaigns measure and record the chosen point immediately;
    manual campaigns mark it pending and wait for ``record_result``.
    Returns None when there is nothing left to run.
    """
    if state.status == "complete":
        return None
    if state.pending is not None:
        raise PendingConflictError(
            f"measurement for point {state.pending.point} is still pending"
        )
    point = _next_point(state)
    if point is None:
        return None
    synthetic = _make_oracle(state)
    if synthetic is not None:
        query_index = len(state.test_set) + len(state.runs)
        geometry = synthetic.measure(point, query_index)
        record = _append_run(state, point, geometry, _synthetic_timestamp(len(state.runs)))
        state.status = "running"
        _evaluate_into_trace(state)
        _check_complete(state)
        state.version += 1
        return Suggestion(
            point=point, executed=True, geometry=geometry, response=record.response
        )
    state.pending = PendingMeasurement(point=point, requested_at=_now_iso())
    state.status = "awaiting_measurement"
    state.version += 1
    return Suggestion(point=point, executed=False)


def record_result(
    state: CampaignState, point: DesignPoint, geometry: BeadGeometry
) -> None:
    """Record an operator-entered measurement for a run or test point."""
    if state.status == "complete":
        raise ValidationError("campaign is complete; no further measurements accepted")
    point = validate_point(state.space, point)

    if point in state.test_points:
        case = next(t for t in state.test_set if t.point == point)
        if case.response is not None:
            raise ValidationError(f"test point {point} already has a measurement")
        case.geometry = geometry
        case.response = composite_response(geometry)
        _evaluate_into_trace(state)
        _check_complete(state)
        state.version += 1
        return

    if state.oracle.kind == "synthetic":
        raise ValidationError(
            "synthetic campaigns record run measurements automatically"
        )
    if point in state.run_points:
        raise ValidationError(f"point {point} already has a recorded run")
    if state.pending is not None and state.pending.point == point:
        state.pending = None
    elif state.strategy == "taguchi":
        if point not in state.plan:
            raise ValidationError(f"point {point} is not in the planned design")
    else:
        raise ValidationError(
            f"point {point} is not the suggested point; request a suggestion first"
        )

    _append_run(state, point, geometry, _now_iso())
    state.status = "awaiting_measurement" if state.pending is not None else "running"
    _evaluate_into_trace(state)
    _check_complete(state)
    state.version += 1


# ---------------------------------------------------------------------------
# Comparison reports and CSV exports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StrategySection:
    """One campaign's slice of a comparison report."""

    strategy: str
    training_size: int
    metrics: MetricPair
    parity: tuple[tuple[DesignPoint, float, float], ...]
    signed_errors: tuple[tuple[DesignPoint, float], ...]


@dataclass(frozen=True)
class ComparisonReport:
    """Paired report in argument order, plus strategy-specific sections."""

    first: StrategySection
    second: StrategySection
    learning_curve: tuple[TraceEntry, ...] | None
    factor_analysis: FactorAnalysis | None
    crossover_size: int | None


def strategy_section(state: CampaignState) -> StrategySection:
    """Metrics, parity pairs, and signed errors for one campaign."""
    actual = _require_test_measurements(state)
    points = [t.point for t in state.test_set]
    preds = _predict_points(state, points)
    parity = tuple((p, pred, act) for p, pred, act in zip(points, preds, actual))
    errors = tuple((p, pred - act) for p, pred, act in zip(points, preds, actual))
    return StrategySection(
        strategy=state.strategy,
        training_size=len(state.runs),
        metrics=MetricPair(rmse=rmse(preds, actual), r2=r2_score(preds, actual)),
        parity=parity,
        signed_errors=errors,
    )


def compare(a: CampaignState, b: CampaignState) -> ComparisonReport:
    """Assemble the side-by-side report for two campaigns on one test set.

    Swapping the arguments swaps the sections and changes no numbers. The
    learning curve comes from whichever side ran the surrogate strategy,
    factor analysis from whichever ran the orthogonal array, and the
    crossover size is defined only when the pair has one of each.
    """
    if a.space != b.space:
        raise ValidationError("campaigns use different design spaces")
    if a.oracle != b.oracle:
        raise ValidationError("campaigns use different oracle specs")
    if a.test_points != b.test_points:
        raise ValidationError("campaigns use different test sets")

    first, second = strategy_section(a), strategy_section(b)

    gpr_state = next((s for s in (a, b) if s.strategy == "gpr_al"), None)
    tag_state = next((s for s in (a, b) if s.strategy == "taguchi"), None)
    learning_curve = tuple(gpr_state.trace) if gpr_state is not None else None
    factor_analysis = None
    if tag_state is not None and tag_state.runs:
        model = fit_main_effects(
            tag_state.space,
            [r.point for r in tag_state.runs],
            [r.response for r in tag_state.runs],
        )
        factor_analysis = analyze_factors(model)

    crossover = None
    if gpr_state is not None and tag_state is not None and gpr_state is not tag_state:
        tag_rmse = strategy_section(tag_state).metrics.rmse
        for entry in gpr_state.trace:
            if entry.metrics.rmse < tag_rmse:
                crossover = entry.training_size
                break
    return ComparisonReport(
        first=first,
        second=second,
        learning_curve=learning_curve,
        factor_analysis=factor_analysis,
        crossover_size=crossover,
    )


EXPORT_KINDS = ("parity", "learning_curve", "error_distribution", "mean_of_means")


def _fmt_point(point: DesignPoint) -> str:
    return "-".join(str(i) for i in point)


def _fmt_float(v: float) -> str:
    return str(float(v))


def export_csv(report: ComparisonReport, kind: str) -> str:
    """Render one report section as an RFC-4180 CSV document."""
    import csv
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    if kind == "parity":
        writer.writerow(["strategy", "point", "predicted_y", "actual_y"])
        for section in (report.first, report.second):
            for point, pred, act in section.parity:
                writer.writerow(
                    [section.strategy, _fmt_point(point), _fmt_float(pred), _fmt_float(act)]
                )
    elif kind == "learning_curve":
        if report.learning_curve is None:
            raise ValidationError("report has no learning curve section")
        writer.writerow(["iteration", "training_size", "rmse", "r2"])
        for entry in report.learning_curve:
            writer.writerow(
                [
                    entry.iteration,
                    entry.training_size,
                    _fmt_float(entry.metrics.rmse),
                    _fmt_float(entry.metrics.r2),
                ]
            )
    elif kind == "error_distribution":
        writer.writerow(["strategy", "point", "signed_error"])
        for section in (report.first, report.second):
            for point, err in section.signed_errors:
                writer.writerow([section.strategy, _fmt_point(point), _fmt_float(err)])
    elif kind == "mean_of_means":
        if report.factor_analysis is None:
            raise ValidationError("report has no factor analysis section")
        writer.writerow(["factor", "level_value", "mean_y"])
        fa = report.factor_analysis
        for name, values, means in zip(fa.factor_names, fa.level_values, fa.level_means):
            for value, mean in zip(values, means):
                writer.writerow([name, _fmt_float(value), _fmt_float(mean)])
    else:
        raise ValidationError(f"kind must be one of {EXPORT_KINDS}, got {kind!r}")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Persistence: canonical JSON with fixed float formatting
# ---------------------------------------------------------------------------


def _emit(value, indent: int) -> str:
    pad = "  " * indent
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValidationError(f"cannot serialize non-finite float {value}")
        return "%.17g" % value
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=True)
    if isinstance(value, (list, tuple)):
        items = list(value)
        if not items:
            return "[]"
        if all(isinstance(v, (int, float, bool)) or v is None for v in items):
            return "[" + ", ".join(_emit(v, 0) for v in items) + "]"
        inner = ",\n".join(
            pad + "  " + _emit(v, indent + 1) for v in items
        )
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(value, dict):
        if not value:
            return "{}"
        inner = ",\n".join(
            pad + "  " + json.dumps(str(k)) + ": " + _emit(value[k], indent + 1)
            for k in sorted(value)
        )
        return "{\n" + inner + "\n" + pad + "}"
    raise ValidationError(f"cannot serialize {type(value).__name__}")


def _dumps_canonical(doc: dict) -> str:
    return _emit(doc, 0) + "\n"


def _geometry_doc(g: BeadGeometry) -> dict:
    return {"d": g.depth, "w": g.width, "h": g.height}


def state_to_doc(state: CampaignState) -> dict:
    """Plain-JSON document for a campaign (also the service wire shape)."""
    return {
        "schema_version": state.schema_version,
        "id": state.id,
        "strategy": state.strategy,
        "status": state.status,
        "seed": state.seed,
        "noisy_test": state.noisy_test,
        "version": state.version,
        "space": {
            "factors": [
                {"name": f.name, "unit": f.unit, "levels": list(f.levels)}
                for f in state.space.factors
            ]
        },
        "oracle": {
            "kind": state.oracle.kind,
            "surface_id": state.oracle.surface_id,
            "noise_sd": state.oracle.noise_sd,
            "seed": state.oracle.seed,
            "surface_params": state.oracle.surface_params,
        },
        "config": (
            None
            if state.config is None
            else {
                "init_samples": state.config.init_samples,
                "max_iterations": state.config.max_iterations,
                "reoptimize_every": state.config.reoptimize_every,
            }
        ),
        "plan": [list(p) for p in state.plan],
        "runs": [
            {
                "point": list(r.point),
                **_geometry_doc(r.geometry),
                "y": r.response,
                "timestamp": r.timestamp,
            }
            for r in state.runs
        ],
        "test_set": [
            {
                "point": list(t.point),
                "d": None if t.geometry is None else t.geometry.depth,
                "w": None if t.geometry is None else t.geometry.width,
                "h": None if t.geometry is None else t.geometry.height,
                "y": t.response,
            }
            for t in state.test_set
        ],
        "trace": [
            {
                "iteration": e.iteration,
                "training_size": e.training_size,
                "rmse": e.metrics.rmse,
                "r2": e.metrics.r2,
            }
            for e in state.trace
        ],
        "pending": (
            None
            if state.pending is None
            else {
                "point": list(state.pending.point),
                "requested_at": state.pending.requested_at,
            }
        ),
    }


_DOC_KEYS = {
    "schema_version", "id", "strategy", "status", "seed", "noisy_test",
    "version", "space", "oracle", "config", "plan", "runs", "test_set",
    "trace", "pending",
}


def state_from_doc(doc: dict) -> CampaignState:
    """Rebuild and validate a campaign from its JSON document."""
    if not isinstance(doc, dict):
        raise SchemaError("campaign document must be a JSON object")
    keys = set(doc)
    if keys != _DOC_KEYS:
        missing, extra = _DOC_KEYS - keys, keys - _DOC_KEYS
        raise SchemaError(
            f"bad campaign document keys: missing {sorted(missing)}, "
            f"unknown {sorted(extra)}"
        )
    if doc["schema_version"] != SCHEMA_VERSION:
        raise SchemaError(
            f"unknown schema_version {doc['schema_version']!r}; "
            f"this build reads version {SCHEMA_VERSION}"
        )
    if doc["strategy"] not in STRATEGIES:
        raise SchemaError(f"unknown strategy {doc['strategy']!r}")
    if doc["status"] not in STATUSES:
        raise SchemaError(f"unknown status {doc['status']!r}")

    space = DesignSpace(
        factors=tuple(
            Factor(f["name"], f["unit"], tuple(f["levels"]))
            for f in doc["space"]["factors"]
        )
    )
    oracle = OracleSpec(
        kind=doc["oracle"]["kind"],
        surface_id=doc["oracle"]["surface_id"],
        noise_sd=float(doc["oracle"]["noise_sd"]),
        seed=int(doc["oracle"]["seed"]),
        surface_params=doc["oracle"]["surface_params"],
    )
    config = None
    if doc["config"] is not None:
        config = AlConfig(
            init_samples=int(doc["config"]["init_samples"]),
            max_iterations=int(doc["config"]["max_iterations"]),
            reoptimize_every=int(doc["config"]["reoptimize_every"]),
        )
    if (doc["strategy"] == "gpr_al") != (config is not None):
        raise SchemaError("config must be present exactly for gpr_al campaigns")

    plan = [validate_point(space, p) for p in doc["plan"]]
    if len(set(plan)) != len(plan):
        raise SchemaError("planned points contain duplicates")

    runs = []
    for r in doc["runs"]:
        geometry = BeadGeometry(depth=r["d"], width=r["w"], height=r["h"])
        y = float(r["y"])
        expected = composite_response(geometry)
        if not math.isclose(y, expected, rel_tol=1e-12, abs_tol=1e-12):
            raise SchemaError(
                f"run at {r['point']} has inconsistent response "
                f"{y} (geometry implies {expected})"
            )
        runs.append(
            RunRecord(
                point=validate_point(space, r["point"]),
                geometry=geometry,
                response=y,
                timestamp=str(r["timestamp"]),
            )
        )
    run_points = [r.point for r in runs]
    if len(set(run_points)) != len(run_points):
        raise SchemaError("run log contains duplicate points")

    test_set = []
    for t in doc["test_set"]:
        point = validate_point(space, t["point"])
        geometry = None
        response = None
        if t["d"] is not None:
            geometry = BeadGeometry(depth=t["d"], width=t["w"], height=t["h"])
            response = float(t["y"])
            expected = composite_response(geometry)
            if not math.isclose(response, expected, rel_tol=1e-12, abs_tol=1e-12):
                raise SchemaError(f"test case {t['point']} has inconsistent response")
        test_set.append(TestCase(point=point, geometry=geometry, response=response))
    test_points = [t.point for t in test_set]
    if len(set(test_points)) != len(test_points):
        raise SchemaError("test set contains duplicate points")
    if test_points != sorted(test_points):
        raise SchemaError("test set must be stored in sorted point order")
    if set(run_points) & set(test_points):
        raise SchemaError("run log intersects the test set")

    trace = [
        TraceEntry(
            iteration=int(e["iteration"]),
            training_size=int(e["training_size"]),
            metrics=MetricPair(rmse=float(e["rmse"]), r2=float(e["r2"])),
        )
        for e in doc["trace"]
    ]
    pending = None
    if doc["pending"] is not None:
        pending = PendingMeasurement(
            point=validate_point(space, doc["pending"]["point"]),
            requested_at=str(doc["pending"]["requested_at"]),
        )
        if oracle.kind != "manual":
            raise SchemaError("pending measurements only exist for manual oracles")
    if (pending is not None) != (doc["status"] == "awaiting_measurement"):
        raise SchemaError("pending measurement and status disagree")

    version = int(doc["version"])
    if version < 0:
        raise SchemaError(f"version must be >= 0, got {version}")

    return CampaignState(
        id=str(doc["id"]),
        space=space,
        strategy=doc["strategy"],
        oracle=oracle,
        config=config,
        seed=int(doc["seed"]),
        noisy_test=bool(doc["noisy_test"]),
        plan=plan,
        runs=runs,
        test_set=test_set,
        trace=trace,
        status=doc["status"],
        pending=pending,
        version=version,
    )


def save(state: CampaignState, path: str | Path) -> None:
    """Write the campaign file atomically (temp file + rename)."""
    path = Path(path)
    text = _dumps_canonical(state_to_doc(state))
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load(path: str | Path) -> CampaignState:
    """Read and validate a campaign file."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except json.JSONDecodeError as err:
        raise SchemaError(f"campaign file {path} is not valid JSON: {err}") from err
    return state_from_doc(doc)
