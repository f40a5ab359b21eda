"""Fitting engines and error estimation.

Two ways to produce expert networks: exact piecewise-linear
interpolation in one dimension, and ridge-regularized least squares on
random ReLU features in any dimension.  Sup-norm errors are estimated on
dense grids with a refinement cross-check, and convergence rates are
fitted by least squares in log-log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError, FitError, RateFitError
from .nn_core import AffineLayer, FfnNetwork, PwlSpec, encode_pwl, ffn_eval

# Sup errors measured in floating point never drop below a few ulps even
# for exact constructions; treat anything at or under this as "exact".
_RATE_ERROR_FLOOR = 1e-15

__all__ = [
    "GridSpec",
    "ErrorReport",
    "RateReport",
    "fit_expert_1d",
    "fit_ls_random_features",
    "fit_ls_on_samples",
    "fit_dense_baseline",
    "estimate_linf",
    "fit_rate",
]


@dataclass(frozen=True)
class GridSpec:
    """A deterministic evaluation grid, refinable with nesting guaranteed.

    ``bounds``/``counts`` describe a product grid in parameter space.
    With ``endpoint=False`` (periodic parameters such as angles) the
    right endpoint is dropped.  ``embed`` optionally maps parameter
    points to ambient points (e.g. angles onto the circle).
    ``exclude_band`` is carried along for routing audits that skip
    points too close to region boundaries.
    """

    bounds: tuple[tuple[float, float], ...]
    counts: tuple[int, ...]
    embed: Optional[Callable] = None
    endpoint: bool = True
    exclude_band: float = 0.0

    def __post_init__(self):
        if len(self.bounds) != len(self.counts):
            raise ConfigError("bounds and counts must have equal length")
        if any(c < 2 for c in self.counts):
            raise ConfigError("grids need at least 2 points per axis")

    @property
    def dim(self) -> int:
        return len(self.bounds)

    def axis_points(self, axis: int) -> np.ndarray:
        lo, hi = self.bounds[axis]
        return np.linspace(lo, hi, self.counts[axis], endpoint=self.endpoint)

    def param_points(self) -> np.ndarray:
        """All grid points in parameter space, shape (n, dim)."""
        axes = [self.axis_points(a) for a in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def points(self) -> np.ndarray:
        """Evaluation points: embedded when an embedding is set."""
        p = self.param_points()
        return self.embed(p) if self.embed is not None else p

    def refined(self, factor: int = 2) -> "GridSpec":
        """A finer grid whose points contain this grid's points exactly."""
        if self.endpoint:
            counts = tuple((c - 1) * factor + 1 for c in self.counts)
        else:
            counts = tuple(c * factor for c in self.counts)
        return GridSpec(
            bounds=self.bounds,
            counts=counts,
            embed=self.embed,
            endpoint=self.endpoint,
            exclude_band=self.exclude_band,
        )


@dataclass(frozen=True)
class ErrorReport:
    """Sup-norm error over a grid, with a refinement cross-check.

    ``refinement_ok`` is False when the estimate grew by more than 10%
    on a once-refined grid — a sign the grid is too coarse to trust.
    """

    sup_error: float
    argmax_point: list
    refined_sup_error: float
    refinement_ok: bool
    points_used: int

    def to_dict(self) -> dict:
        return {
            "sup_error": self.sup_error,
            "argmax_point": self.argmax_point,
            "refined_sup_error": self.refined_sup_error,
            "refinement_ok": self.refinement_ok,
            "points_used": self.points_used,
        }


@dataclass(frozen=True)
class RateReport:
    """Slope/intercept of a log-log least-squares rate fit."""

    slope: float
    intercept: float
    residual_rms: float
    clamped: bool
    points: tuple[tuple[int, float], ...]

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "residual_rms": self.residual_rms,
            "clamped": self.clamped,
            "points": [[int(m), float(e)] for m, e in self.points],
        }


def _sup_gap(f: Callable, g: Callable, pts: np.ndarray) -> tuple[float, int]:
    fv = np.asarray(f(pts), dtype=np.float64)
    gv = np.asarray(g(pts), dtype=np.float64)
    if fv.shape != gv.shape:
        raise ConfigError(
            f"compared maps return shapes {fv.shape} vs {gv.shape} on the grid"
        )
    gaps = np.abs(fv - gv)
    if gaps.ndim > 1:
        gaps = gaps.max(axis=tuple(range(1, gaps.ndim)))
    arg = int(np.argmax(gaps))
    return float(gaps[arg]), arg


def estimate_linf(f: Callable, g: Callable, grid: GridSpec) -> ErrorReport:
    """Estimate sup |f - g| over the grid; cross-check on a 2x refined grid.

    Both maps must accept a batch of points (n, d) and return (n,) or
    (n, k) values.
    """
    pts = grid.points()
    sup, arg = _sup_gap(f, g, pts)
    fine_pts = grid.refined(2).points()
    fine_sup, _ = _sup_gap(f, g, fine_pts)
    ok = fine_sup <= sup * 1.1 + 1e-15
    return ErrorReport(
        sup_error=sup,
        argmax_point=np.atleast_1d(pts[arg]).tolist(),
        refined_sup_error=fine_sup,
        refinement_ok=bool(ok),
        points_used=pts.shape[0],
    )


def fit_expert_1d(
    f: Callable, m: int, domain: tuple[float, float]
) -> tuple[FfnNetwork, float]:
    """Piecewise-linear interpolation of a 1-d map at m uniform knots.

    Returns the width-m two-layer encoding and its sup error measured on
    a grid 8x denser than the knots.  ``f`` must accept an (n,) array.
    """
    if m < 2:
        raise FitError(f"need at least 2 knots, got {m}")
    a, b = float(domain[0]), float(domain[1])
    if not b > a:
        raise ConfigError(f"empty domain [{a}, {b}]")
    knots = np.linspace(a, b, m)
    values = np.asarray(f(knots), dtype=np.float64)
    if values.shape != knots.shape:
        raise FitError("1-d fitting needs a scalar-valued map")
    net = encode_pwl(PwlSpec(knots=knots, values=values))
    dense = np.linspace(a, b, (m - 1) * 8 + 1)
    err = float(
        np.max(np.abs(np.asarray(f(dense)) - ffn_eval(net, dense[:, None])[:, 0]))
    )
    return net, err


def _solve_ridge(a: np.ndarray, y: np.ndarray, penalty: np.ndarray, ridge: float):
    """Normal-equation ridge solve with x100 escalation on breakdown."""
    gram = a.T @ a
    rhs = a.T @ y
    lam = ridge
    for _ in range(4):
        try:
            beta = np.linalg.solve(gram + lam * np.diag(penalty), rhs)
        except np.linalg.LinAlgError:
            lam *= 100.0
            continue
        if np.all(np.isfinite(beta)):
            return beta
        lam *= 100.0
    raise FitError(
        f"ridge solve failed up to regularization {lam:.1e}; features degenerate"
    )


def fit_ls_on_samples(
    x: np.ndarray,
    y: np.ndarray,
    m: int,
    *,
    seed: int = 0,
    ridge: float = 1e-10,
) -> FfnNetwork:
    """Least-squares fit of a width-m two-layer network on given samples.

    Hidden features are ReLUs of seeded random directions (unit-norm
    rows) with biases uniform over the sample radius; the output layer
    (with an unpenalized intercept) solves a ridge problem.  Fully
    deterministic for a given seed.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 1:
        y = y[:, None]
    if y.shape[0] != x.shape[0]:
        raise FitError("sample inputs and values disagree in length")
    n, d = x.shape
    if n < 10 * m:
        raise FitError(f"need at least 10*m = {10 * m} samples, got {n}")
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(m, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radius = float(np.max(np.linalg.norm(x, axis=1)))
    biases = rng.uniform(-radius, radius, size=m) if radius > 0 else np.zeros(m)

    feats = np.maximum(x @ dirs.T + biases, 0.0)
    a = np.concatenate([feats, np.ones((n, 1))], axis=1)
    penalty = np.concatenate([np.ones(m), [0.0]])
    beta = _solve_ridge(a, y, penalty, ridge)
    return FfnNetwork(
        layers=(
            AffineLayer(dirs, biases, relu=True),
            AffineLayer(beta[:-1].T, beta[-1], relu=False),
        )
    )


def _box_grid(bounds, total: int) -> np.ndarray:
    d = len(bounds)
    per_axis = max(2, int(math.ceil(total ** (1.0 / d))))
    axes = [np.linspace(lo, hi, per_axis) for lo, hi in bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def fit_ls_random_features(
    f: Callable,
    dim: int,
    m: int,
    *,
    sample_count: Optional[int] = None,
    seed: int = 0,
    ridge: float = 1e-10,
    bounds: Optional[Sequence[tuple[float, float]]] = None,
) -> tuple[FfnNetwork, float]:
    """Random-feature least squares on a box domain (default [0,1]^dim).

    Training points are seeded uniform draws; the returned sup error is
    measured on a deterministic dense grid of about 4096 points.
    """
    if bounds is None:
        bounds = ((0.0, 1.0),) * dim
    bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)
    if len(bounds) != dim:
        raise ConfigError("bounds length must equal dim")
    n = 10 * m if sample_count is None else int(sample_count)
    if n < 10 * m:
        raise FitError(f"sample_count must be at least 10*m = {10 * m}, got {n}")
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    x = rng.uniform(lo, hi, size=(n, dim))
    y = np.asarray(f(x), dtype=np.float64)
    net = fit_ls_on_samples(x, y, m, seed=seed, ridge=ridge)

    eval_pts = _box_grid(bounds, 4096)
    fv = np.asarray(f(eval_pts), dtype=np.float64)
    gv = ffn_eval(net, eval_pts)
    if fv.ndim == 1:
        gv = gv[:, 0]
    err = float(np.max(np.abs(fv - gv)))
    return net, err


def fit_dense_baseline(
    f: Callable,
    m: int,
    method: str,
    *,
    domain: Optional[tuple[float, float]] = None,
    dim: int = 1,
    bounds=None,
    seed: int = 0,
) -> tuple[FfnNetwork, float]:
    """A plain dense approximant of a global (possibly kinked) target.

    ``pwl_global_1d`` interpolates at m uniform knots over ``domain``;
    ``ls_random_features`` runs the random-feature fit over ``bounds``.
    """
    if method == "pwl_global_1d":
        if domain is None:
            raise ConfigError("pwl_global_1d needs an explicit domain")
        return fit_expert_1d(f, m, domain)
    if method == "ls_random_features":
        return fit_ls_random_features(f, dim, m, seed=seed, bounds=bounds)
    raise ConfigError(f"unknown dense baseline method {method!r}")


def fit_rate(points: Sequence[tuple[int, float]]) -> RateReport:
    """Least-squares slope of log(error) against log(width).

    Needs at least 3 strictly increasing widths.  Errors at or below the
    floating-point noise floor (1e-15, a few ulps of a unit-scale sup) are
    clamped to it and the report is flagged, since they carry no rate
    information.
    """
    pts = [(int(m), float(e)) for m, e in points]
    if len(pts) < 3:
        raise RateFitError(f"need at least 3 sweep points, got {len(pts)}")
    widths = np.array([m for m, _ in pts], dtype=np.float64)
    if np.any(np.diff(widths) <= 0):
        raise RateFitError("widths must be strictly increasing")
    errors = np.array([e for _, e in pts])
    clamped = bool(np.any(errors <= _RATE_ERROR_FLOOR))
    errors = np.maximum(errors, _RATE_ERROR_FLOOR)
    coeffs, residuals, *_ = np.polyfit(
        np.log(widths), np.log(errors), 1, full=True
    )
    rms = float(np.sqrt(residuals[0] / len(pts))) if residuals.size else 0.0
    return RateReport(
        slope=float(coeffs[0]),
        intercept=float(coeffs[1]),
        residual_rms=rms,
        clamped=clamped,
        points=tuple(pts),
    )
