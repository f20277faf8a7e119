"""HTTP/JSON facade over campaign operations for the operator console.

Every response is an envelope carrying either ``data`` or ``error`` plus
the campaign's current version. Mutations for one campaign are linearized
behind a per-campaign lock (in-process) and a file lock (cross-process);
measurement posts carry ``expected_version`` for compare-and-set.
"""

from __future__ import annotations

import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from filelock import FileLock
from pydantic import BaseModel

from . import campaign as camp
from .active_learning import AlConfig
from .design_space import DesignSpace, Factor, PRESETS, to_real
from .errors import (
    BeadLabError,
    NotFoundError,
    PendingConflictError,
    ValidationError,
    VersionConflictError,
)
from .oracle import OracleSpec
from .response import BeadGeometry

_STATUS_BY_CODE = {
    "not_found": 404,
    "pending_conflict": 409,
    "version_conflict": 409,
}


class CampaignStore:
    """File-backed campaign storage with per-campaign exclusive mutation."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._meta = threading.Lock()

    def _path(self, campaign_id: str) -> Path:
        safe = campaign_id.replace("/", "_")
        return self.data_dir / f"{safe}.json"

    def lock(self, campaign_id: str) -> threading.Lock:
        with self._meta:
            return self._locks.setdefault(campaign_id, threading.Lock())

    def file_lock(self, campaign_id: str) -> FileLock:
        return FileLock(str(self._path(campaign_id)) + ".lock")

    def ids(self) -> list[str]:
        return sorted(p.stem for p in self.data_dir.glob("*.json"))

    def load(self, campaign_id: str) -> camp.CampaignState:
        path = self._path(campaign_id)
        if not path.exists():
            raise NotFoundError(f"no campaign {campaign_id!r}")
        return camp.load(path)

    def save(self, state: camp.CampaignState) -> None:
        camp.save(state, self._path(state.id))

    def exists(self, campaign_id: str) -> bool:
        return self._path(campaign_id).exists()


class MeasurementIn(BaseModel):
    point: list[int]
    d: float
    w: float
    h: float
    expected_version: int


class CreateCampaignIn(BaseModel):
    strategy: str
    oracle: dict
    seed: int = 0
    space: dict | str | None = None
    config: dict | None = None
    test_size: int = 15
    noisy_test: bool = False
    id: str | None = None


def _envelope(data=None, error=None, version=None, status_code: int = 200):
    content = (
        {"data": data, "campaign_version": version}
        if error is None
        else {"error": error, "campaign_version": version}
    )
    return JSONResponse(status_code=status_code, content=content)


def _parse_space(body: dict | str | None) -> DesignSpace:
    if body is None or isinstance(body, str):
        name = body or "default"
        if name not in PRESETS:
            raise ValidationError(f"unknown space preset {name!r}")
        return PRESETS[name]()
    return DesignSpace(
        factors=tuple(
            Factor(f["name"], f["unit"], tuple(f["levels"]))
            for f in body["factors"]
        )
    )


def _suggestion_payload(state: camp.CampaignState, suggestion, already_pending: bool):
    if suggestion is None:
        return {"complete": state.status == "complete", "point": None}
    real = to_real(state.space, suggestion.point)
    payload = {
        "complete": False,
        "point": list(suggestion.point),
        "executed": suggestion.executed,
        "already_pending": already_pending,
        "settings": [
            {"name": f.name, "unit": f.unit, "value": v}
            for f, v in zip(state.space.factors, real)
        ],
    }
    if suggestion.executed:
        payload["geometry"] = {
            "d": suggestion.geometry.depth,
            "w": suggestion.geometry.width,
            "h": suggestion.geometry.height,
        }
        payload["response"] = suggestion.response
    return payload


def _metric_doc(m) -> dict:
    return {"rmse": m.rmse, "r2": m.r2}


def _trace_doc(entries) -> list[dict]:
    return [
        {
            "iteration": e.iteration,
            "training_size": e.training_size,
            "rmse": e.metrics.rmse,
            "r2": e.metrics.r2,
        }
        for e in entries
    ]


def _report_payload(state: camp.CampaignState) -> dict:
    payload = {
        "strategy": state.strategy,
        "training_size": len(state.runs),
        "metrics": None,
        "parity": None,
        "error_distribution": None,
        "learning_curve": _trace_doc(state.trace),
        "mean_of_means": None,
        "crossover_size": None,
    }
    try:
        section = camp.strategy_section(state)
    except BeadLabError:
        section = None
    if section is not None:
        payload["metrics"] = _metric_doc(section.metrics)
        payload["parity"] = [
            {"point": list(p), "predicted_y": pred, "actual_y": act}
            for p, pred, act in section.parity
        ]
        payload["error_distribution"] = [
            {"point": list(p), "signed_error": err}
            for p, err in section.signed_errors
        ]
    if state.strategy == "taguchi" and state.runs:
        try:
            from .taguchi import analyze_factors, fit_main_effects

            model = fit_main_effects(
                state.space,
                [r.point for r in state.runs],
                [r.response for r in state.runs],
            )
            fa = analyze_factors(model)
            payload["mean_of_means"] = [
                {"factor": name, "level_value": value, "mean_y": mean}
                for name, values, means in zip(
                    fa.factor_names, fa.level_values, fa.level_means
                )
                for value, mean in zip(values, means)
            ]
        except BeadLabError:
            pass
    return payload


def create_app(data_dir: str | Path, ui_dir: str | Path | None = None) -> FastAPI:
    """Build the service around a campaign storage directory."""
    app = FastAPI(title="beadlab service")
    store = CampaignStore(data_dir)
    app.state.store = store

    @app.exception_handler(BeadLabError)
    async def domain_error(_: Request, err: BeadLabError):
        return _envelope(
            error={"code": err.code, "message": str(err)},
            status_code=_STATUS_BY_CODE.get(err.code, 422),
        )

    @app.exception_handler(RequestValidationError)
    async def body_error(_: Request, err: RequestValidationError):
        return _envelope(
            error={"code": "invalid", "message": str(err.errors()[:3])},
            status_code=422,
        )

    @app.get("/campaigns")
    def list_campaigns():
        rows = []
        for campaign_id in store.ids():
            state = store.load(campaign_id)
            rows.append(
                {
                    "id": state.id,
                    "strategy": state.strategy,
                    "oracle_kind": state.oracle.kind,
                    "status": state.status,
                    "runs": len(state.runs),
                    "planned": len(state.plan),
                    "version": state.version,
                }
            )
        return _envelope(data=rows)

    @app.post("/campaigns", status_code=201)
    def create_campaign(body: CreateCampaignIn):
        space = _parse_space(body.space)
        oracle = OracleSpec(
            kind=body.oracle.get("kind", "manual"),
            surface_id=body.oracle.get("surface_id", "waam-like-v1"),
            noise_sd=float(body.oracle.get("noise_sd", 0.1)),
            seed=int(body.oracle.get("seed", body.seed)),
            surface_params=body.oracle.get("surface_params"),
        )
        config = None
        if body.strategy == "gpr_al":
            allowed = {"init_samples", "max_iterations", "reoptimize_every"}
            given = body.config or {}
            unknown = set(given) - allowed
            if unknown:
                raise ValidationError(f"unknown config keys: {sorted(unknown)}")
            config = AlConfig(**given)
        campaign_id = body.id or f"{body.strategy}-s{body.seed}"
        if store.exists(campaign_id):
            raise ValidationError(f"campaign {campaign_id!r} already exists")
        state = camp.init_campaign(
            space,
            body.strategy,
            oracle,
            config=config,
            seed=body.seed,
            test_size=body.test_size,
            noisy_test=body.noisy_test,
            campaign_id=campaign_id,
        )
        with store.lock(state.id), store.file_lock(state.id):
            store.save(state)
        return _envelope(
            data=camp.state_to_doc(state), version=state.version, status_code=201
        )

    @app.get("/campaigns/{campaign_id}")
    def get_campaign(campaign_id: str):
        state = store.load(campaign_id)
        return _envelope(data=camp.state_to_doc(state), version=state.version)

    @app.get("/campaigns/{campaign_id}/suggestion")
    def get_suggestion(campaign_id: str):
        with store.lock(campaign_id), store.file_lock(campaign_id):
            state = store.load(campaign_id)
            if state.pending is not None:
                # Refreshing the console must not skip an experiment: the
                # pending point is returned as-is, no new suggestion drawn.
                suggestion = camp.Suggestion(
                    point=state.pending.point, executed=False
                )
                return _envelope(
                    data=_suggestion_payload(state, suggestion, already_pending=True),
                    version=state.version,
                )
            suggestion = camp.next_suggestion(state)
            store.save(state)
            return _envelope(
                data=_suggestion_payload(state, suggestion, already_pending=False),
                version=state.version,
            )

    @app.post("/campaigns/{campaign_id}/measurements")
    def post_measurement(campaign_id: str, body: MeasurementIn):
        with store.lock(campaign_id), store.file_lock(campaign_id):
            state = store.load(campaign_id)
            if body.expected_version != state.version:
                raise VersionConflictError(
                    f"expected version {body.expected_version}, campaign is at "
                    f"{state.version}"
                )
            geometry = BeadGeometry(depth=body.d, width=body.w, height=body.h)
            camp.record_result(state, tuple(body.point), geometry)
            store.save(state)
            return _envelope(
                data={
                    "id": state.id,
                    "status": state.status,
                    "runs": len(state.runs),
                    "trace_length": len(state.trace),
                },
                version=state.version,
            )

    @app.get("/campaigns/{campaign_id}/metrics")
    def get_metrics(campaign_id: str):
        state = store.load(campaign_id)
        current = _metric_doc(state.trace[-1].metrics) if state.trace else None
        return _envelope(
            data={"trace": _trace_doc(state.trace), "current": current},
            version=state.version,
        )

    @app.get("/campaigns/{campaign_id}/report")
    def get_report(campaign_id: str):
        state = store.load(campaign_id)
        return _envelope(data=_report_payload(state), version=state.version)

    if ui_dir is not None and Path(ui_dir).exists():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
