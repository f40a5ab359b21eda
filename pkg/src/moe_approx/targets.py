"""Piecewise compositional target functions.

Two families are supported.  Cube-grid targets live on [0, E]^L and
apply one of E smooth pieces per coordinate, piece j owning the cell
[j, j+1].  Product-manifold targets live on a product of compact
manifolds, each covered by an atlas of overlapping charts with a smooth
partition of unity; one subfunction per chart, expressed in chart
coordinates on [0,1]^d.

Points on region boundaries (cell faces, chart overlaps) may belong to
several regions; targets must agree across them, and evaluation always
uses the smallest admissible region index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError, DomainError, TargetValidationError

__all__ = [
    "Subfunction",
    "Chart",
    "LinearChartData",
    "Atlas",
    "CubeFactor",
    "ManifoldFactor",
    "PiecewiseTarget",
    "region_index",
    "eval_target",
    "eval_factor_piece",
    "fig3_target",
    "fig3_slice_target",
    "abs_kink_target",
    "sin_circle_target",
    "sincos_torus_target",
    "build_circle_atlas",
    "build_torus_atlas",
    "build_manifold_target",
    "build_product_target",
    "chart_maps_from_global",
    "validate_overlap_consistency",
    "target_from_config",
    "BUILTIN_TARGETS",
]

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Subfunction:
    """One smooth piece of a target.

    ``fn`` is vectorized: it maps an (n,) coordinate array (cube pieces)
    or an (n, d) chart-coordinate array (manifold pieces) to (n,) values.
    ``domain`` is the owned interval for cube pieces, None for chart
    pieces (whose domain is the chart's coordinate cube).
    """

    fn: Callable
    domain: Optional[tuple[float, float]] = None
    smoothness: float = math.inf

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=np.float64))


@dataclass(frozen=True)
class LinearChartData:
    """Parameters of a linear chart ``u = scale * (frame^T (x - center) + shift)``."""

    scale: float
    frame: np.ndarray  # (ambient_dim, chart_dim), orthonormal columns
    center: np.ndarray  # (ambient_dim,)
    shift: np.ndarray  # (chart_dim,)


@dataclass(frozen=True)
class Chart:
    """A coordinate patch mapping part of a manifold into [0,1]^d."""

    forward: Callable  # (n, D) -> (n, d)
    inverse: Callable  # (n, d) -> (n, D)
    membership: Callable  # (n, D) -> (n,) bool
    ambient_dim: int
    chart_dim: int
    linear: Optional[LinearChartData] = None


@dataclass(frozen=True)
class Atlas:
    """Charts covering a manifold, with a smooth partition of unity.

    ``partition_values`` evaluates all partition functions at once:
    (n, D) ambient points -> (n, E) nonnegative rows summing to 1.
    ``param_embed`` maps intrinsic parameters (angles) to ambient points
    and is what deterministic sample grids are built from.
    """

    charts: tuple[Chart, ...]
    partition_values: Callable  # (n, D) -> (n, E)
    param_bounds: tuple[tuple[float, float], ...]
    param_embed: Callable  # (n, p) -> (n, D)
    name: str = ""

    @property
    def expert_count(self) -> int:
        return len(self.charts)

    @property
    def ambient_dim(self) -> int:
        return self.charts[0].ambient_dim

    @property
    def chart_dim(self) -> int:
        return self.charts[0].chart_dim

    def sample_points(self, n: int) -> np.ndarray:
        """About n ambient points from a uniform parameter grid."""
        return self.param_embed(_param_grid(self.param_bounds, n))

    def membership_matrix(self, x: np.ndarray) -> np.ndarray:
        """(n, E) boolean chart-membership indicators."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return np.stack([c.membership(x) for c in self.charts], axis=1)


def _param_grid(bounds, n: int) -> np.ndarray:
    """A deterministic grid of about n points over the parameter box.

    Periodic parameters (angles) are sampled without the endpoint.
    """
    p = len(bounds)
    per_axis = max(2, int(math.ceil(n ** (1.0 / p))))
    axes = [
        np.linspace(lo, hi, per_axis, endpoint=False) for lo, hi in bounds
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass(frozen=True)
class CubeFactor:
    """One cube-grid coordinate: E pieces, piece j on [j, j+1]."""

    pieces: tuple[Subfunction, ...]

    @property
    def expert_count(self) -> int:
        return len(self.pieces)

    @property
    def ambient_dim(self) -> int:
        return 1

    @property
    def domain(self) -> tuple[float, float]:
        return (0.0, float(len(self.pieces)))


@dataclass(frozen=True)
class ManifoldFactor:
    """One manifold coordinate: an atlas plus one chart map per chart."""

    atlas: Atlas
    chart_maps: tuple[Subfunction, ...]

    def __post_init__(self):
        if len(self.chart_maps) != self.atlas.expert_count:
            raise ConfigError(
                f"{len(self.chart_maps)} chart maps for "
                f"{self.atlas.expert_count} charts"
            )

    @property
    def expert_count(self) -> int:
        return len(self.chart_maps)

    @property
    def ambient_dim(self) -> int:
        return self.atlas.ambient_dim


@dataclass(frozen=True)
class PiecewiseTarget:
    """A piecewise compositional function with one output per factor."""

    kind: str  # "cube_grid" | "product_manifold"
    factors: tuple
    name: str = ""
    global_continuity: int = 0

    def __post_init__(self):
        if self.kind not in ("cube_grid", "product_manifold"):
            raise ConfigError(f"unknown target kind {self.kind!r}")
        expected = CubeFactor if self.kind == "cube_grid" else ManifoldFactor
        for f in self.factors:
            if not isinstance(f, expected):
                raise ConfigError(
                    f"{self.kind} target holds a {type(f).__name__} factor"
                )

    @property
    def num_factors(self) -> int:
        return len(self.factors)

    @property
    def input_dim(self) -> int:
        return sum(f.ambient_dim for f in self.factors)

    @property
    def output_dim(self) -> int:
        return len(self.factors)

    @property
    def factor_slices(self) -> tuple[slice, ...]:
        out, start = [], 0
        for f in self.factors:
            out.append(slice(start, start + f.ambient_dim))
            start += f.ambient_dim
        return tuple(out)

    def __call__(self, x):
        return eval_target(self, x)


def _cube_admissible(factor: CubeFactor, z: np.ndarray) -> np.ndarray:
    """(n, E) admissibility for cube cells [j, j+1] (closed, so faces overlap)."""
    e = factor.expert_count
    j = np.arange(e)
    return (z[:, None] >= j) & (z[:, None] <= j + 1)


def region_index(target: PiecewiseTarget, factor: int, x) -> np.ndarray:
    """All admissible region indices for one factor coordinate, ascending.

    ``x`` is a scalar for cube factors and an ambient point for manifold
    factors.  Interior cube points yield exactly one index; cell faces
    yield both neighbours.
    """
    fac = target.factors[factor]
    if isinstance(fac, CubeFactor):
        z = np.asarray([float(x)])
        mask = _cube_admissible(fac, z)[0]
    else:
        pt = np.asarray(x, dtype=np.float64).reshape(1, -1)
        mask = fac.atlas.membership_matrix(pt)[0]
    return np.flatnonzero(mask)


def _smallest_cube_index(factor: CubeFactor, z: np.ndarray) -> np.ndarray:
    e = factor.expert_count
    if np.any(z < 0.0) or np.any(z > e):
        bad = z[(z < 0.0) | (z > e)][0]
        raise DomainError(f"coordinate {bad} outside [0, {e}]")
    return np.clip(np.ceil(z).astype(np.int64) - 1, 0, e - 1)


def _smallest_manifold_index(factor: ManifoldFactor, x: np.ndarray) -> np.ndarray:
    mask = factor.atlas.membership_matrix(x)
    covered = mask.any(axis=1)
    if not covered.all():
        bad = x[~covered][0]
        raise DomainError(f"point {bad.tolist()} lies in no chart")
    return mask.argmax(axis=1)


def eval_factor_piece(factor, index: int, x) -> np.ndarray:
    """Evaluate one factor's piece ``index`` on a batch of coordinates.

    Cube factors take an (n,) coordinate array; manifold factors take
    (n, D) ambient points (converted through the chart's forward map).
    """
    if isinstance(factor, CubeFactor):
        return factor.pieces[index](np.asarray(x, dtype=np.float64))
    u = factor.atlas.charts[index].forward(np.atleast_2d(x))
    return factor.chart_maps[index](u)


def eval_target(target: PiecewiseTarget, x) -> np.ndarray:
    """Evaluate the target, using the smallest admissible region per factor.

    ``x`` may be one point of shape (input_dim,) or a batch (n, input_dim).
    """
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    pts = np.atleast_2d(arr)
    if pts.shape[1] != target.input_dim:
        raise DomainError(
            f"point has {pts.shape[1]} coordinates, target takes {target.input_dim}"
        )
    out = np.empty((pts.shape[0], target.output_dim))
    for l, (fac, sl) in enumerate(zip(target.factors, target.factor_slices)):
        block = pts[:, sl]
        if isinstance(fac, CubeFactor):
            z = block[:, 0]
            idx = _smallest_cube_index(fac, z)
        else:
            z = block
            idx = _smallest_manifold_index(fac, block)
        col = np.empty(pts.shape[0])
        for i in np.unique(idx):
            m = idx == i
            col[m] = eval_factor_piece(fac, int(i), z[m])
        out[:, l] = col
    return out[0] if single else out


# ---------------------------------------------------------------------------
# Built-in cube-grid targets


def fig3_target() -> PiecewiseTarget:
    """The 3x3 demo grid target: two factors, three polynomial pieces each.

    Factor 1 pieces are cubic-free quadratics i(i-1-z)(z-i); factor 2
    squares the same bracket, i(i-1-z)^2(z-i)^2.  All pieces vanish at
    cell faces, so the target is continuous but kinked across faces.
    """

    def piece_one(i: int) -> Subfunction:
        def fn(z, a=float(i - 1), b=float(i), c=float(i)):
            return c * (a - z) * (z - b)

        return Subfunction(fn=fn, domain=(float(i - 1), float(i)))

    def piece_two(i: int) -> Subfunction:
        def fn(z, a=float(i - 1), b=float(i), c=float(i)):
            return c * (a - z) ** 2 * (z - b) ** 2

        return Subfunction(fn=fn, domain=(float(i - 1), float(i)))

    return PiecewiseTarget(
        kind="cube_grid",
        factors=(
            CubeFactor(pieces=tuple(piece_one(i) for i in (1, 2, 3))),
            CubeFactor(pieces=tuple(piece_two(i) for i in (1, 2, 3))),
        ),
        name="fig3",
    )


def fig3_slice_target() -> PiecewiseTarget:
    """First factor of the demo grid alone: a kinked 1-d target on [0, 3]."""
    return PiecewiseTarget(
        kind="cube_grid", factors=(fig3_target().factors[0],), name="fig3_x1"
    )


def abs_kink_target() -> PiecewiseTarget:
    """|z - 1| on [0, 2] as two linear pieces; both pieces are exactly PWL."""
    left = Subfunction(fn=lambda z: 1.0 - z, domain=(0.0, 1.0))
    right = Subfunction(fn=lambda z: z - 1.0, domain=(1.0, 2.0))
    return PiecewiseTarget(
        kind="cube_grid", factors=(CubeFactor(pieces=(left, right)),), name="abs_kink"
    )


def _poly_piece(coeffs: Sequence[float], j: int) -> Subfunction:
    c = np.asarray(list(coeffs), dtype=np.float64)

    def fn(z, c=c):
        return np.polynomial.polynomial.polyval(z, c)

    return Subfunction(fn=fn, domain=(float(j), float(j + 1)))


def _cube_target_from_coeffs(factors_coeffs, name="") -> PiecewiseTarget:
    factors = []
    for coeff_lists in factors_coeffs:
        pieces = tuple(
            _poly_piece(coeffs, j) for j, coeffs in enumerate(coeff_lists)
        )
        factors.append(CubeFactor(pieces=pieces))
    return PiecewiseTarget(kind="cube_grid", factors=tuple(factors), name=name)


# ---------------------------------------------------------------------------
# Circle and torus atlases


def _wrap_angle(delta: np.ndarray) -> np.ndarray:
    """Wrap angle differences into [-pi, pi)."""
    return (delta + math.pi) % _TWO_PI - math.pi


def _smooth_bump(t: np.ndarray) -> np.ndarray:
    """The classic C-infinity bump exp(-1/(1-t^2)) on |t|<1, zero outside."""
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


def build_circle_atlas(expert_count: int, overlap_frac: float) -> Atlas:
    """Overlapping-arc atlas of the unit circle with linear charts.

    ``expert_count`` arcs are centred at angles 2*pi*i/E.  Each arc
    extends ``overlap_frac`` of the basic spacing pi/E beyond its share
    on both sides, so adjacent arcs overlap and every point is covered.
    Charts are linear: tangent-line projection, scaled and shifted into
    [0, 1].  The partition of unity is built from smooth bumps of the
    angular offset.
    """
    e = int(expert_count)
    if e < 3:
        raise ConfigError(f"need at least 3 arcs to cover the circle, got {e}")
    if not 0.0 < overlap_frac < 0.5:
        raise ConfigError(
            f"overlap_frac must lie strictly between 0 and 0.5, got {overlap_frac}"
        )
    half_width = (1.0 + overlap_frac) * math.pi / e
    if half_width >= math.pi / 2:
        raise ConfigError(
            "arcs would span a half-circle or more; tangent charts lose injectivity"
        )
    centers = _TWO_PI * np.arange(e) / e
    sin_w = math.sin(half_width)
    scale = 1.0 / (2.0 * sin_w)

    def make_chart(theta: float) -> Chart:
        center = np.array([math.cos(theta), math.sin(theta)])
        frame = np.array([[-math.sin(theta)], [math.cos(theta)]])
        shift = np.array([sin_w])
        data = LinearChartData(scale=scale, frame=frame, center=center, shift=shift)

        def forward(x, d=data):
            x = np.atleast_2d(np.asarray(x, dtype=np.float64))
            return d.scale * ((x - d.center) @ d.frame + d.shift)

        def inverse(u, th=theta):
            u = np.atleast_2d(np.asarray(u, dtype=np.float64))
            delta = np.arcsin(np.clip((2.0 * u[:, 0] - 1.0) * sin_w, -1.0, 1.0))
            ang = th + delta
            return np.stack([np.cos(ang), np.sin(ang)], axis=1)

        def membership(x, th=theta):
            x = np.atleast_2d(np.asarray(x, dtype=np.float64))
            delta = _wrap_angle(np.arctan2(x[:, 1], x[:, 0]) - th)
            return np.abs(delta) < half_width

        return Chart(
            forward=forward,
            inverse=inverse,
            membership=membership,
            ambient_dim=2,
            chart_dim=1,
            linear=data,
        )

    def partition_values(x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        theta = np.arctan2(x[:, 1], x[:, 0])
        bumps = np.stack(
            [_smooth_bump(_wrap_angle(theta - c) / half_width) for c in centers],
            axis=1,
        )
        return bumps / bumps.sum(axis=1, keepdims=True)

    def param_embed(p):
        p = np.atleast_2d(np.asarray(p, dtype=np.float64))
        ang = p[:, 0]
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)

    return Atlas(
        charts=tuple(make_chart(t) for t in centers),
        partition_values=partition_values,
        param_bounds=((0.0, _TWO_PI),),
        param_embed=param_embed,
        name=f"circle_e{e}",
    )


def build_torus_atlas(experts_per_factor: int, overlap_frac: float) -> Atlas:
    """Product atlas of the flat torus (two unit circles) embedded in R^4.

    Charts are products of circle arcs: E^2 charts of intrinsic
    dimension 2, each still linear because both circle factors share the
    same scale.  Partition functions are products of the circle ones.
    """
    base = build_circle_atlas(experts_per_factor, overlap_frac)
    e = base.expert_count

    def product_chart(ci: Chart, cj: Chart) -> Chart:
        di, dj = ci.linear, cj.linear
        frame = np.zeros((4, 2))
        frame[:2, 0] = di.frame[:, 0]
        frame[2:, 1] = dj.frame[:, 0]
        data = LinearChartData(
            scale=di.scale,
            frame=frame,
            center=np.concatenate([di.center, dj.center]),
            shift=np.concatenate([di.shift, dj.shift]),
        )

        def forward(x, d=data):
            x = np.atleast_2d(np.asarray(x, dtype=np.float64))
            return d.scale * ((x - d.center) @ d.frame + d.shift)

        def inverse(u, a=ci, b=cj):
            u = np.atleast_2d(np.asarray(u, dtype=np.float64))
            return np.concatenate(
                [a.inverse(u[:, :1]), b.inverse(u[:, 1:])], axis=1
            )

        def membership(x, a=ci, b=cj):
            x = np.atleast_2d(np.asarray(x, dtype=np.float64))
            return a.membership(x[:, :2]) & b.membership(x[:, 2:])

        return Chart(
            forward=forward,
            inverse=inverse,
            membership=membership,
            ambient_dim=4,
            chart_dim=2,
            linear=data,
        )

    charts = tuple(
        product_chart(base.charts[i], base.charts[j])
        for i in range(e)
        for j in range(e)
    )

    def partition_values(x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        pa = base.partition_values(x[:, :2])
        pb = base.partition_values(x[:, 2:])
        return (pa[:, :, None] * pb[:, None, :]).reshape(x.shape[0], e * e)

    def param_embed(p):
        p = np.atleast_2d(np.asarray(p, dtype=np.float64))
        return np.stack(
            [np.cos(p[:, 0]), np.sin(p[:, 0]), np.cos(p[:, 1]), np.sin(p[:, 1])],
            axis=1,
        )

    return Atlas(
        charts=charts,
        partition_values=partition_values,
        param_bounds=((0.0, _TWO_PI), (0.0, _TWO_PI)),
        param_embed=param_embed,
        name=f"torus_e{e}x{e}",
    )


# ---------------------------------------------------------------------------
# Manifold targets


def chart_maps_from_global(atlas: Atlas, fn: Callable) -> tuple[Subfunction, ...]:
    """Express a global manifold function in every chart's coordinates.

    ``fn`` maps (n, D) ambient points to (n,) values.  The returned chart
    maps are fn composed with the chart inverses, so they agree on
    overlaps by construction.
    """

    def make(chart: Chart) -> Subfunction:
        def g(u, c=chart):
            return np.asarray(fn(c.inverse(u)), dtype=np.float64)

        return Subfunction(fn=g, domain=None)

    return tuple(make(c) for c in atlas.charts)


def validate_overlap_consistency(
    target: PiecewiseTarget, samples: int = 2048, tol: float = 1e-9
) -> dict:
    """Check that pieces agree wherever regions overlap.

    Returns {"ok", "max_discrepancy", "witness"}; raises
    TargetValidationError (with the worst witness) when the discrepancy
    exceeds ``tol``.  The witness is (factor, point, region_a, region_b,
    discrepancy).
    """
    worst = 0.0
    witness = None
    for l, fac in enumerate(target.factors):
        if isinstance(fac, CubeFactor):
            for j in range(fac.expert_count - 1):
                edge = float(j + 1)
                va = eval_factor_piece(fac, j, [edge])[0]
                vb = eval_factor_piece(fac, j + 1, [edge])[0]
                gap = abs(va - vb)
                if gap > worst:
                    worst, witness = gap, (l, edge, j, j + 1, gap)
        else:
            pts = fac.atlas.sample_points(samples)
            mask = fac.atlas.membership_matrix(pts)
            for a in range(fac.expert_count):
                for b in range(a + 1, fac.expert_count):
                    both = mask[:, a] & mask[:, b]
                    if not both.any():
                        continue
                    va = eval_factor_piece(fac, a, pts[both])
                    vb = eval_factor_piece(fac, b, pts[both])
                    gaps = np.abs(va - vb)
                    g = int(np.argmax(gaps))
                    if gaps[g] > worst:
                        worst = float(gaps[g])
                        witness = (l, pts[both][g].tolist(), a, b, worst)
    report = {"ok": worst <= tol, "max_discrepancy": worst, "witness": witness}
    if not report["ok"]:
        raise TargetValidationError(
            f"pieces disagree by {worst:.3e} (> {tol:.1e}) at {witness}",
            witness=witness,
        )
    return report


def build_manifold_target(
    atlas: Atlas,
    chart_maps: Sequence[Subfunction],
    *,
    name: str = "",
    validate: bool = True,
    samples: int = 2048,
    tol: float = 1e-9,
) -> PiecewiseTarget:
    """A single-factor manifold target from an atlas and per-chart maps."""
    return build_product_target(
        [(atlas, chart_maps)], name=name, validate=validate, samples=samples, tol=tol
    )


def build_product_target(
    factors: Sequence[tuple[Atlas, Sequence[Subfunction]]],
    *,
    name: str = "",
    validate: bool = True,
    samples: int = 2048,
    tol: float = 1e-9,
) -> PiecewiseTarget:
    """A product-manifold target; one (atlas, chart maps) pair per factor."""
    built = tuple(
        ManifoldFactor(atlas=a, chart_maps=tuple(maps)) for a, maps in factors
    )
    target = PiecewiseTarget(kind="product_manifold", factors=built, name=name)
    if validate:
        validate_overlap_consistency(target, samples=samples, tol=tol)
    return target


def sin_circle_target(
    expert_count: int = 4, overlap_frac: float = 0.25
) -> PiecewiseTarget:
    """sin(angle) on the unit circle, expressed per chart."""
    atlas = build_circle_atlas(expert_count, overlap_frac)
    maps = chart_maps_from_global(atlas, lambda x: x[:, 1])
    return build_manifold_target(atlas, maps, name="sin_circle")


def sincos_torus_target(
    experts_per_factor: int = 4, overlap_frac: float = 0.25
) -> PiecewiseTarget:
    """Two circle factors: sin(angle) on the first, cos(2*angle) on the second."""
    a1 = build_circle_atlas(experts_per_factor, overlap_frac)
    a2 = build_circle_atlas(experts_per_factor, overlap_frac)
    maps1 = chart_maps_from_global(a1, lambda x: x[:, 1])
    # cos(2t) = x^2 - y^2 on the unit circle.
    maps2 = chart_maps_from_global(a2, lambda x: x[:, 0] ** 2 - x[:, 1] ** 2)
    return build_product_target(
        [(a1, maps1), (a2, maps2)], name="sincos_torus"
    )


# ---------------------------------------------------------------------------
# Config-driven construction

BUILTIN_TARGETS = {
    "fig3": fig3_target,
    "fig3_x1": fig3_slice_target,
    "abs_kink": abs_kink_target,
    "sin_circle": sin_circle_target,
    "sincos_torus": sincos_torus_target,
}


def target_from_config(cfg: dict) -> PiecewiseTarget:
    """Build a target from a config table.

    Either ``name`` selects a built-in (with optional ``experts`` /
    ``overlap`` parameters for the manifold ones), or ``kind =
    "cube_grid"`` with ``factors`` gives explicit polynomial pieces as
    ascending-power coefficient lists, one list per piece per factor.
    """
    if not isinstance(cfg, dict):
        raise ConfigError("target config must be a table")
    if "name" in cfg:
        name = cfg["name"]
        if name not in BUILTIN_TARGETS:
            raise ConfigError(
                f"unknown target {name!r}; known: {sorted(BUILTIN_TARGETS)}"
            )
        builder = BUILTIN_TARGETS[name]
        if name in ("sin_circle", "sincos_torus"):
            kwargs = {}
            if "experts" in cfg:
                kwargs["expert_count" if name == "sin_circle" else "experts_per_factor"] = int(cfg["experts"])
            if "overlap" in cfg:
                kwargs["overlap_frac"] = float(cfg["overlap"])
            return builder(**kwargs)
        return builder()
    if cfg.get("kind") == "cube_grid":
        if "factors" not in cfg:
            raise ConfigError("cube_grid target config needs 'factors'")
        return _cube_target_from_coeffs(cfg["factors"], name=cfg.get("label", "custom"))
    raise ConfigError("target config needs 'name' or kind='cube_grid' with factors")
