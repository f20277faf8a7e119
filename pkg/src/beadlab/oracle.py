"""Experiment back-ends: a synthetic bead-geometry simulator and manual entry.

Synthetic measurements are pure functions of (surface, point, oracle seed,
query index), so replaying a campaign reproduces identical geometries.
Query indices 0..n_test-1 are reserved for test-point measurement; run
queries start at n_test (see campaign module).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .design_space import DesignPoint, DesignSpace, normalize, to_real
from .errors import UnsupportedError, ValidationError
from .response import (
    DEPTH_WEIGHT,
    HEIGHT_WEIGHT,
    WIDTH_WEIGHT,
    BeadGeometry,
    composite_response,
)

GEOMETRY_FLOOR_MM = 0.05

# Coefficients of the bead-surface family:
#   D = d0 + d1 * I^d2 * (1 - d3*S) + d4 * I*C
#   W = w0 + w1 * I * (1 - S)^w2 + w3 * sin(w4 * C)
#   H = h0 + h1 * (1 - S) * (1 - h2*I) + h3 * C^2
# with I, S, C the factor values min-max normalized to [0, 1].
BEAD_SURFACE_DEFAULTS = {
    "d0": 2.3, "d1": 4.0, "d2": 2.5, "d3": 0.5, "d4": 2.4,
    "w0": 0.9, "w1": 28.0, "w2": 2.8, "w3": 0.5, "w4": 3.0,
    "h0": 1.2, "h1": 3.0, "h2": 0.7, "h3": 0.7,
}

# Coefficients of the response-additive family: the response is
#   y0 + ai*I + as_*S + ac*C  (exactly additive per factor),
# realized as geometry by holding width/height fixed and solving depth.
ADDITIVE_SURFACE_DEFAULTS = {
    "y0": 88.0, "ai": 5.0, "as_": -4.0, "ac": 2.0,
    "width": 6.0, "height": 3.0,
}


def _eval_bead_surface(params: dict, coords: tuple[float, ...]) -> BeadGeometry:
    if len(coords) != 3:
        raise UnsupportedError(
            f"bead surfaces take exactly 3 factors, got {len(coords)}"
        )
    i, s, c = coords
    p = params
    depth = p["d0"] + p["d1"] * i ** p["d2"] * (1.0 - p["d3"] * s) + p["d4"] * i * c
    width = p["w0"] + p["w1"] * i * (1.0 - s) ** p["w2"] + p["w3"] * math.sin(p["w4"] * c)
    height = p["h0"] + p["h1"] * (1.0 - s) * (1.0 - p["h2"] * i) + p["h3"] * c**2
    return BeadGeometry(
        depth=max(depth, GEOMETRY_FLOOR_MM),
        width=max(width, GEOMETRY_FLOOR_MM),
        height=max(height, GEOMETRY_FLOOR_MM),
    )


def _eval_additive_surface(params: dict, coords: tuple[float, ...]) -> BeadGeometry:
    if len(coords) != 3:
        raise UnsupportedError(
            f"additive surfaces take exactly 3 factors, got {len(coords)}"
        )
    i, s, c = coords
    p = params
    y = p["y0"] + p["ai"] * i + p["as_"] * s + p["ac"] * c
    w, h = p["width"], p["height"]
    # Invert the composite response for depth at fixed width/height: the
    # weighted-over-plain ratio is linear in depth, so the solve is exact.
    ratio = 10.0 ** (y / 10.0)
    depth = (w * WIDTH_WEIGHT + h * HEIGHT_WEIGHT - ratio * (w + h)) / (
        ratio - DEPTH_WEIGHT
    )
    if depth <= 0:
        raise ValidationError(
            f"additive surface target response {y} is unreachable with "
            f"width={w}, height={h}"
        )
    return BeadGeometry(depth=depth, width=w, height=h)


_FAMILIES = {
    "bead-v1": _eval_bead_surface,
    "response-additive-v1": _eval_additive_surface,
}

_REGISTRY: dict[str, tuple[str, dict]] = {}


def register_surface(name: str, family: str, params: dict) -> None:
    """Register a named coefficient set for one of the surface families."""
    if family not in _FAMILIES:
        raise UnsupportedError(
            f"unknown surface family {family!r}; known: {sorted(_FAMILIES)}"
        )
    _REGISTRY[name] = (family, dict(params))


def registered_surfaces() -> list[str]:
    return sorted(_REGISTRY)


register_surface("waam-like-v1", "bead-v1", BEAD_SURFACE_DEFAULTS)
register_surface("additive-v1", "response-additive-v1", ADDITIVE_SURFACE_DEFAULTS)


@dataclass(frozen=True)
class OracleSpec:
    """How measurements are produced: simulated surface or human entry."""

    kind: str
    surface_id: str = "waam-like-v1"
    noise_sd: float = 0.1
    seed: int = 0
    surface_params: dict | None = None

    def __post_init__(self):
        if self.kind not in ("synthetic", "manual"):
            raise ValidationError(f"oracle kind must be synthetic or manual, got {self.kind!r}")
        if self.noise_sd < 0 or not math.isfinite(self.noise_sd):
            raise ValidationError(f"noise_sd must be finite and >= 0, got {self.noise_sd}")
        if self.kind == "synthetic" and self.surface_id not in _REGISTRY:
            raise UnsupportedError(
                f"unknown surface {self.surface_id!r}; known: {registered_surfaces()}"
            )


@dataclass(frozen=True)
class PendingMeasurement:
    """A suggested point awaiting a human-entered measurement."""

    point: DesignPoint
    requested_at: str


def _surface_for(spec: OracleSpec):
    family, params = _REGISTRY[spec.surface_id]
    if spec.surface_params:
        params = {**params, **spec.surface_params}
    return _FAMILIES[family], params


def query_synthetic(
    spec: OracleSpec,
    space: DesignSpace,
    x,
    query_index: int = 0,
) -> BeadGeometry:
    """Evaluate the surface at a real-valued point, plus seeded channel noise.

    Noise draws depend only on (spec.seed, query_index); a zero noise_sd
    returns the base surface unchanged.
    """
    if spec.kind != "synthetic":
        raise ValidationError("query_synthetic needs a synthetic oracle spec")
    x = tuple(float(v) for v in x)
    for k, v in enumerate(x):
        factor = space.factors[k]
        if not factor.levels[0] <= v <= factor.levels[-1]:
            raise ValidationError(
                f"value {v} outside factor {factor.name!r} range "
                f"[{factor.levels[0]}, {factor.levels[-1]}]"
            )
    evaluate, params = _surface_for(spec)
    geometry = evaluate(params, normalize(space, x))
    if spec.noise_sd == 0.0:
        return geometry
    rng = np.random.default_rng([spec.seed, int(query_index)])
    noise = rng.normal(0.0, spec.noise_sd, 3)
    return BeadGeometry(
        depth=max(geometry.depth + noise[0], GEOMETRY_FLOOR_MM),
        width=max(geometry.width + noise[1], GEOMETRY_FLOOR_MM),
        height=max(geometry.height + noise[2], GEOMETRY_FLOOR_MM),
    )


@dataclass(frozen=True)
class SyntheticOracle:
    """Bound (spec, space) pair answering grid points directly."""

    spec: OracleSpec
    space: DesignSpace

    def measure(self, point: DesignPoint, query_index: int) -> BeadGeometry:
        return query_synthetic(
            self.spec, self.space, to_real(self.space, point), query_index
        )

    def measure_true(self, point: DesignPoint) -> BeadGeometry:
        evaluate, params = _surface_for(self.spec)
        real = to_real(self.space, point)
        return evaluate(params, normalize(self.space, real))

    def true_response(self, point: DesignPoint) -> float:
        return composite_response(self.measure_true(point))
