"""Gaussian-process regression with a squared-exponential kernel.

Inputs are standardized per feature and targets centered before any kernel
math; the posterior runs through a Cholesky factor of the regularized Gram
matrix. Hyperparameters come from a deterministic log-grid search over the
marginal likelihood followed by coordinate-wise golden-section refinement,
with k-fold cross-validation reported for assessment only.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import IllConditionedError, ValidationError

JITTER_START = 1e-10
JITTER_MAX = 1e-4
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class KernelParams:
    """RBF hyperparameters: length scale, signal variance, noise variance."""

    length_scale: float
    signal_variance: float
    noise_variance: float

    def __post_init__(self):
        for name in ("length_scale", "signal_variance", "noise_variance"):
            v = float(getattr(self, name))
            object.__setattr__(self, name, v)
            if not math.isfinite(v):
                raise ValidationError(f"{name} must be finite, got {v}")
        if self.length_scale <= 0 or self.signal_variance <= 0:
            raise ValidationError(
                "length_scale and signal_variance must be > 0, got "
                f"{self.length_scale}, {self.signal_variance}"
            )
        if self.noise_variance < 0:
            raise ValidationError(
                f"noise_variance must be >= 0, got {self.noise_variance}"
            )


@dataclass(frozen=True)
class Standardizer:
    """Per-feature location/scale for inputs plus the target mean."""

    feature_means: tuple[float, ...]
    feature_stds: tuple[float, ...]
    target_mean: float

    @classmethod
    def from_data(cls, x: np.ndarray, y: np.ndarray, lenient: bool = False) -> "Standardizer":
        means = x.mean(axis=0)
        stds = x.std(axis=0)
        if len(x) == 1 or lenient:
            # A single observation makes every feature constant; keep the
            # centering but skip scaling so one-point fits stay legal. The
            # lenient path exists for cross-validation sub-fits, where a
            # fold's training slice may lose a feature's variation even
            # though the full data set passed the strict check.
            stds = np.where(stds == 0, 1.0, stds)
        elif np.any(stds == 0):
            bad = [k for k, s in enumerate(stds) if s == 0]
            raise ValidationError(
                f"constant feature(s) at column(s) {bad}: cannot standardize"
            )
        return cls(
            feature_means=tuple(float(v) for v in means),
            feature_stds=tuple(float(v) for v in stds),
            target_mean=float(y.mean()),
        )

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (x - np.asarray(self.feature_means)) / np.asarray(self.feature_stds)


@dataclass(frozen=True, eq=False)
class GprModel:
    """Fitted posterior state: standardized training set, Cholesky factor
    of the regularized Gram matrix, and the weight vector."""

    standardizer: Standardizer
    params: KernelParams
    x_train: np.ndarray
    y_centered: np.ndarray
    chol: np.ndarray
    alpha: np.ndarray
    jitter_used: float


@dataclass(frozen=True)
class GridSpec:
    """Log-spaced search grid for the three hyperparameters."""

    length_scale_bounds: tuple[float, float] = (1e-1, 1e2)
    signal_variance_bounds: tuple[float, float] = (1e-2, 1e2)
    noise_variance_bounds: tuple[float, float] = (1e-6, 1e1)
    points_per_axis: int = 8

    def axes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        def axis(bounds):
            return np.logspace(
                math.log10(bounds[0]), math.log10(bounds[1]), self.points_per_axis
            )

        return (
            axis(self.length_scale_bounds),
            axis(self.signal_variance_bounds),
            axis(self.noise_variance_bounds),
        )


@dataclass(frozen=True)
class FitReport:
    """Optimizer outcome: best marginal likelihood, held-out CV RMSE."""

    log_marginal_likelihood: float
    cv_rmse: float
    cv_folds: int
    jitter_used: float


def _as_matrix(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValidationError(f"expected 2-D inputs, got shape {arr.shape}")
    return arr


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=-1)


def _gram(a: np.ndarray, b: np.ndarray, params: KernelParams) -> np.ndarray:
    return params.signal_variance * np.exp(
        -_sq_dists(a, b) / (2.0 * params.length_scale**2)
    )


def rbf_kernel(x, z, params: KernelParams) -> float:
    """Covariance between two input vectors (no noise term)."""
    xv = np.asarray(x, dtype=float).ravel()
    zv = np.asarray(z, dtype=float).ravel()
    if xv.shape != zv.shape:
        raise ValidationError(f"dimension mismatch: {xv.shape} vs {zv.shape}")
    sq = float(((xv - zv) ** 2).sum())
    return params.signal_variance * math.exp(-sq / (2.0 * params.length_scale**2))


def _cholesky_with_jitter(k_reg: np.ndarray) -> tuple[np.ndarray, float]:
    """Factor K, escalating diagonal jitter 1e-10 -> 1e-4 on failure."""
    jitter = 0.0
    eye = np.eye(len(k_reg))
    while True:
        try:
            return np.linalg.cholesky(k_reg + jitter * eye), jitter
        except np.linalg.LinAlgError:
            jitter = JITTER_START if jitter == 0.0 else jitter * 10.0
            if jitter > JITTER_MAX:
                raise IllConditionedError(
                    f"Cholesky failed at maximum jitter {JITTER_MAX:g}"
                ) from None


def fit(x, y, params: KernelParams, _lenient: bool = False) -> GprModel:
    """Standardize, build the regularized Gram matrix, and factorize."""
    x = _as_matrix(x)
    yv = np.asarray(y, dtype=float).ravel()
    if len(x) != len(yv):
        raise ValidationError(f"{len(x)} inputs vs {len(yv)} targets")
    if len(x) == 0:
        raise ValidationError("cannot fit on an empty training set")
    if params.noise_variance == 0.0:
        if len(np.unique(x, axis=0)) != len(x):
            raise ValidationError(
                "duplicate training rows need noise_variance > 0"
            )
    std = Standardizer.from_data(x, yv, lenient=_lenient)
    xs = std.transform(x)
    yc = yv - std.target_mean
    k_reg = _gram(xs, xs, params) + params.noise_variance * np.eye(len(xs))
    chol, jitter = _cholesky_with_jitter(k_reg)
    alpha = solve_triangular(
        chol.T, solve_triangular(chol, yc, lower=True), lower=False
    )
    return GprModel(
        standardizer=std,
        params=params,
        x_train=xs,
        y_centered=yc,
        chol=chol,
        alpha=alpha,
        jitter_used=jitter,
    )


def predict_batch(model: GprModel, x) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and latent (noise-free) std at each query row."""
    q = _as_matrix(x)
    if q.shape[1] != model.x_train.shape[1]:
        raise ValidationError(
            f"query dimension {q.shape[1]} != training dimension "
            f"{model.x_train.shape[1]}"
        )
    qs = model.standardizer.transform(q)
    k_star = _gram(qs, model.x_train, model.params)
    means = k_star @ model.alpha + model.standardizer.target_mean
    v = solve_triangular(model.chol, k_star.T, lower=True)
    variances = np.maximum(
        model.params.signal_variance - (v * v).sum(axis=0), 0.0
    )
    return means, np.sqrt(variances)


def predict(model: GprModel, x) -> tuple[float, float]:
    """Posterior mean and latent std at a single query point."""
    means, stds = predict_batch(model, np.asarray(x, dtype=float).reshape(1, -1))
    return float(means[0]), float(stds[0])


def log_marginal_likelihood(x, y, params: KernelParams) -> float:
    """Marginal likelihood of the centered targets under ``params``."""
    model = fit(x, y, params)
    return _lml_from_factor(model.y_centered, model.chol, model.alpha)


def _lml_from_factor(yc: np.ndarray, chol: np.ndarray, alpha: np.ndarray) -> float:
    return float(
        -0.5 * yc @ alpha
        - np.log(np.diag(chol)).sum()
        - 0.5 * len(yc) * _LOG_2PI
    )


class _LmlWorkspace:
    """Caches the standardized data and pairwise distances so the grid
    search pays only one Gram build + Cholesky per parameter triple."""

    def __init__(self, x: np.ndarray, y: np.ndarray):
        self.std = Standardizer.from_data(x, y)
        self.xs = self.std.transform(x)
        self.yc = y - self.std.target_mean
        self.sq = _sq_dists(self.xs, self.xs)
        self.eye = np.eye(len(x))

    def lml(self, length_scale: float, signal_var: float, noise_var: float):
        k_reg = (
            signal_var * np.exp(-self.sq / (2.0 * length_scale**2))
            + noise_var * self.eye
        )
        try:
            chol, _ = _cholesky_with_jitter(k_reg)
        except IllConditionedError:
            return None
        yc = self.yc
        alpha = solve_triangular(
            chol.T, solve_triangular(chol, yc, lower=True), lower=False
        )
        return _lml_from_factor(yc, chol, alpha)


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(f, lo: float, hi: float, steps: int) -> float:
    """Golden-section maximization of ``f`` on [lo, hi]; returns argmax."""
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(steps):
        if (fc if fc is not None else -math.inf) >= (
            fd if fd is not None else -math.inf
        ):
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def optimize_hyperparameters(
    x,
    y,
    grid: GridSpec | None = None,
    refine_steps: int = 24,
    cv_seed: int = 0,
) -> tuple[KernelParams, FitReport]:
    """Maximize the marginal likelihood over a log grid, then refine.

    The refinement walks the three axes in order (length scale, signal
    variance, noise variance), running a golden section within one grid
    step of the incumbent, clipped to the grid bounds; a refined value is
    kept only if it improves the objective. Deterministic throughout.
    Cross-validation RMSE at the optimum is reported for assessment and
    plays no part in selection.
    """
    x = _as_matrix(x)
    yv = np.asarray(y, dtype=float).ravel()
    if len(x) < 3:
        raise ValidationError(f"need at least 3 points to optimize, got {len(x)}")
    grid = grid or GridSpec()
    ws = _LmlWorkspace(x, yv)
    axes = grid.axes()

    best: list[float] | None = None
    best_lml = -math.inf
    for ell, sf2, sn2 in itertools.product(*axes):
        value = ws.lml(ell, sf2, sn2)
        if value is not None and value > best_lml:
            best_lml = value
            best = [float(ell), float(sf2), float(sn2)]
    if best is None:
        raise IllConditionedError("every grid point failed to factorize")

    bounds = (
        grid.length_scale_bounds,
        grid.signal_variance_bounds,
        grid.noise_variance_bounds,
    )
    for axis in range(3):
        lo_b, hi_b = bounds[axis]
        step = (math.log10(hi_b) - math.log10(lo_b)) / (grid.points_per_axis - 1)
        center = math.log10(best[axis])
        lo = max(center - step, math.log10(lo_b))
        hi = min(center + step, math.log10(hi_b))

        def objective(t: float, axis: int = axis):
            trial = list(best)
            trial[axis] = 10.0**t
            return ws.lml(*trial)

        refined = 10.0 ** _golden_max(objective, lo, hi, refine_steps)
        candidate = list(best)
        candidate[axis] = refined
        value = ws.lml(*candidate)
        if value is not None and value > best_lml:
            best_lml = value
            best = candidate

    params = KernelParams(
        length_scale=best[0], signal_variance=best[1], noise_variance=best[2]
    )
    folds = min(5, len(x))
    cv = cross_validate(x, yv, params, folds=folds, seed=cv_seed)
    model = fit(x, yv, params)
    report = FitReport(
        log_marginal_likelihood=best_lml,
        cv_rmse=cv,
        cv_folds=folds,
        jitter_used=model.jitter_used,
    )
    return params, report


def cross_validate(x, y, params: KernelParams, folds: int = 5, seed: int = 0) -> float:
    """Mean held-out RMSE over a seeded shuffle split into contiguous folds.

    Sub-fits standardize leniently: a fold whose training slice happens to
    make some feature constant still scores (the feature just carries no
    signal within that fold).
    """
    x = _as_matrix(x)
    yv = np.asarray(y, dtype=float).ravel()
    if folds < 2:
        raise ValidationError(f"need at least 2 folds, got {folds}")
    if len(x) < folds:
        raise ValidationError(f"{len(x)} points cannot fill {folds} folds")
    order = np.random.default_rng(seed).permutation(len(x))
    scores = []
    for chunk in np.array_split(order, folds):
        train = np.setdiff1d(order, chunk, assume_unique=True)
        model = fit(x[train], yv[train], params, _lenient=True)
        means, _ = predict_batch(model, x[chunk])
        scores.append(float(np.sqrt(np.mean((means - yv[chunk]) ** 2))))
    return float(np.mean(scores))
