"""Bead geometry, the scalar response transform, and prediction metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# Decade-separated priority weights: depth dominates, then width, then height.
DEPTH_WEIGHT = 1e10
WIDTH_WEIGHT = 1e6
HEIGHT_WEIGHT = 1e2
LOG_BASE = 10.0


@dataclass(frozen=True)
class BeadGeometry:
    """Measured cross-section of a single weld bead, in millimetres."""

    depth: float
    width: float
    height: float

    def __post_init__(self):
        for name in ("depth", "width", "height"):
            v = float(getattr(self, name))
            object.__setattr__(self, name, v)
            if not math.isfinite(v) or v <= 0:
                raise ValidationError(f"{name} must be finite and > 0, got {v}")


@dataclass(frozen=True)
class MetricPair:
    """RMSE and the coefficient of determination on the response scale."""

    rmse: float
    r2: float


def composite_response(geometry: BeadGeometry) -> float:
    """Collapse (depth, width, height) into one scalar response.

    Ten times the base-10 log of the priority-weighted sum over the plain
    sum. Strictly increasing in depth for fixed width and height.
    """
    weighted = (
        geometry.depth * DEPTH_WEIGHT
        + geometry.width * WIDTH_WEIGHT
        + geometry.height * HEIGHT_WEIGHT
    )
    plain = geometry.depth + geometry.width + geometry.height
    return 10.0 * math.log(weighted / plain, LOG_BASE)


def rmse(pred, actual) -> float:
    """Root mean squared error between two equal-length sequences."""
    p = np.asarray(pred, dtype=float)
    a = np.asarray(actual, dtype=float)
    if p.shape != a.shape or p.ndim != 1:
        raise ValidationError(f"shape mismatch: pred {p.shape} vs actual {a.shape}")
    if p.size == 0:
        raise ValidationError("rmse of empty sequences is undefined")
    return float(np.sqrt(np.mean((p - a) ** 2)))


def r2_score(pred, actual) -> float:
    """1 - SS_res/SS_tot, with SS_tot about the mean of ``actual``."""
    p = np.asarray(pred, dtype=float)
    a = np.asarray(actual, dtype=float)
    if p.shape != a.shape or p.ndim != 1:
        raise ValidationError(f"shape mismatch: pred {p.shape} vs actual {a.shape}")
    if p.size < 2:
        raise ValidationError("r2 needs at least 2 points")
    ss_tot = float(np.sum((a - a.mean()) ** 2))
    if ss_tot == 0.0:
        raise ValidationError("r2 undefined: actual values have zero variance")
    ss_res = float(np.sum((p - a) ** 2))
    return 1.0 - ss_res / ss_tot
