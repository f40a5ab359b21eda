"""Experiment drivers behind the CLI.

Five experiment kinds, each writing a self-contained report bundle (JSON
reports, CSV sweeps, figures, plus an ``index.json``) into its output
directory:

* ``construct``  — build a routed network, measure end-to-end error,
  check it against the component fit errors, audit the routing.
* ``audit``      — routing audit only.
* ``rate_sweep`` — error against expert width, with a log-log rate fit.
* ``compare``    — routed network vs a dense baseline at matched active
  parameter budgets.
* ``verify_gadgets`` — bit-level checks of the cell-indicator gadget.

Grid sizes default to values whose evaluation points are subsets of the
(denser) grids the component fit errors were certified on, so the
end-to-end inequality checks are sharp rather than approximate.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .. import __version__
from ..approx_fit import GridSpec, fit_dense_baseline, fit_rate
from ..constructor import (
    ConstructionResult,
    assemble_deep_moe,
    assemble_shallow_moe,
    assemble_warmup_moe,
    build_indicator_gadget,
)
from ..errors import ConfigError
from ..moe_core import MoeNetwork, moe_network_eval
from ..nn_core import ffn_eval, ffn_param_count
from ..targets import PiecewiseTarget, eval_target, target_from_config
from . import io, plots

EXPERIMENT_KINDS = ("construct", "audit", "rate_sweep", "compare", "verify_gadgets")

_DEFAULT_RATE_WIDTHS = (8, 16, 32, 64, 128, 256)
_DEFAULT_COMPARE_WIDTHS = (16, 32, 64, 128, 256)
_EVAL_CHUNK = 65536


@dataclass
class ExperimentConfig:
    """Validated experiment description (config file plus CLI overrides)."""

    kind: str
    out_dir: Path
    seed: int = 0
    target: Optional[dict] = None
    construction: str = "auto"
    chart_mode: str = "auto"
    expert_width: int = 32
    widths: Optional[tuple] = None
    grid: int = 0  # 0 = per-kind default
    band: float = 1e-12
    cells: int = 8
    points: int = 100_000
    tau_max_width: int = 1024
    max_slope: Optional[float] = None
    require_gap: Optional[float] = None
    require_match: Optional[float] = None
    figures: bool = True
    fig_ext: str = "png"

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(
                f"unknown experiment kind {self.kind!r}; known: {EXPERIMENT_KINDS}"
            )
        self.out_dir = Path(self.out_dir)
        if self.widths is not None:
            ws = tuple(int(w) for w in self.widths)
            if len(ws) < 1 or any(w < 2 for w in ws):
                raise ConfigError(f"widths must all be >= 2, got {ws}")
            if any(b <= a for a, b in zip(ws, ws[1:])):
                raise ConfigError(f"widths must be strictly increasing, got {ws}")
            self.widths = ws
        if self.expert_width < 2:
            raise ConfigError(f"expert_width must be >= 2, got {self.expert_width}")
        if self.grid < 0:
            raise ConfigError("grid must be nonnegative (0 means default)")
        if self.cells < 1:
            raise ConfigError("cells must be positive")
        if self.points < 1:
            raise ConfigError("points must be positive")
        if self.band < 0:
            raise ConfigError("band must be nonnegative")
        if self.fig_ext not in ("png", "svg", "pdf"):
            raise ConfigError(f"unsupported figure format {self.fig_ext!r}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "target": self.target,
            "construction": self.construction,
            "chart_mode": self.chart_mode,
            "expert_width": self.expert_width,
            "widths": list(self.widths) if self.widths is not None else None,
            "grid": self.grid,
            "band": self.band,
            "cells": self.cells,
            "points": self.points,
            "tau_max_width": self.tau_max_width,
            "max_slope": self.max_slope,
            "require_gap": self.require_gap,
            "require_match": self.require_match,
        }


_CONFIG_KEYS = {
    "kind",
    "seed",
    "target",
    "construction",
    "chart_mode",
    "expert_width",
    "widths",
    "grid",
    "band",
    "cells",
    "points",
    "tau_max_width",
    "max_slope",
    "require_gap",
    "require_match",
    "figures",
    "fig_ext",
}


def experiment_config(data: dict, out_dir) -> ExperimentConfig:
    """Build a validated config from a plain dict (file and/or flags)."""
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "kind" not in data:
        raise ConfigError("config needs a 'kind'")
    return ExperimentConfig(out_dir=out_dir, **data)


@dataclass
class ReportBundle:
    """What an experiment run produced."""

    kind: str
    out_dir: Path
    passed: bool
    artifacts: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Shared plumbing


def default_target_spec(kind: str) -> dict:
    return {"name": "fig3_x1"} if kind == "compare" else {"name": "fig3"}


def build_construction(
    target: PiecewiseTarget,
    expert_width: int,
    *,
    construction: str = "auto",
    chart_mode: str = "auto",
    seed: int = 0,
    tau_max_width: int = 1024,
) -> ConstructionResult:
    """Dispatch to the assembly matching the target (or an explicit choice)."""
    kind = construction
    if kind == "auto":
        if target.kind == "cube_grid":
            kind = "warmup"
        else:
            kind = "shallow" if target.num_factors == 1 else "deep"
    if kind == "warmup":
        return assemble_warmup_moe(target, expert_width)
    if kind == "shallow":
        return assemble_shallow_moe(
            target,
            expert_width,
            chart_mode=chart_mode,
            tau_max_width=tau_max_width,
            seed=seed,
        )
    if kind == "deep":
        return assemble_deep_moe(
            target,
            expert_width,
            chart_mode="general" if chart_mode == "auto" else chart_mode,
            tau_max_width=tau_max_width,
            seed=seed,
        )
    raise ConfigError(f"unknown construction {construction!r}")


def _param_axis_count(target: PiecewiseTarget) -> int:
    if target.kind == "cube_grid":
        return target.num_factors
    return sum(len(f.atlas.param_bounds) for f in target.factors)


def _default_axis_points(target: PiecewiseTarget) -> int:
    if target.kind == "cube_grid":
        return 512
    return 4096 if _param_axis_count(target) == 1 else 128


def audit_grid(target: PiecewiseTarget, per_axis: int, band: float) -> GridSpec:
    """The audit grid in the target's parameter space.

    Cube-grid targets use their coordinates directly (endpoint grid);
    manifold targets get a product of periodic angle grids embedded via
    the factor atlases.  Default sizes divide the certification grids.
    """
    if target.kind == "cube_grid":
        bounds = tuple((0.0, float(f.expert_count)) for f in target.factors)
        return GridSpec(
            bounds=bounds,
            counts=(per_axis,) * len(bounds),
            endpoint=True,
            exclude_band=band,
        )
    bounds = []
    splits = []
    for f in target.factors:
        bounds.extend(f.atlas.param_bounds)
        splits.append(len(f.atlas.param_bounds))
    factors = target.factors

    def embed(p):
        cols, start = [], 0
        for f, width in zip(factors, splits):
            cols.append(f.atlas.param_embed(p[:, start : start + width]))
            start += width
        return np.concatenate(cols, axis=1)

    return GridSpec(
        bounds=tuple(bounds),
        counts=(per_axis,) * len(bounds),
        embed=embed,
        endpoint=False,
        exclude_band=band,
    )


def error_grid(target: PiecewiseTarget, per_axis: int, band: float) -> GridSpec:
    """Like :func:`audit_grid`, but endpoint grids get one extra point per
    axis so their intervals divide the power-of-two certification grids."""
    if target.kind == "cube_grid":
        return audit_grid(target, per_axis + 1, band)
    return audit_grid(target, per_axis, band)


def _include_mask(target: PiecewiseTarget, params: np.ndarray, band: float) -> np.ndarray:
    """Points kept by the boundary exclusion band.

    Only cube-grid targets have razor-thin routing boundaries (cell
    faces, where every indicator is exactly zero); the manifold partition
    is smooth and its certified routing needs no exclusion.
    """
    mask = np.ones(params.shape[0], dtype=bool)
    if band <= 0.0 or target.kind != "cube_grid":
        return mask
    for axis in range(target.num_factors):
        z = params[:, axis]
        mask &= np.abs(z - np.round(z)) > band
    return mask


def _eval_network(net: MoeNetwork, pts: np.ndarray) -> np.ndarray:
    if pts.shape[0] <= _EVAL_CHUNK:
        return moe_network_eval(net, pts)
    chunks = [
        moe_network_eval(net, pts[i : i + _EVAL_CHUNK])
        for i in range(0, pts.shape[0], _EVAL_CHUNK)
    ]
    return np.concatenate(chunks, axis=0)


def end_to_end_error(net: MoeNetwork, target: PiecewiseTarget, grid: GridSpec) -> dict:
    """Banded sup error of the network against the target, with refinement.

    Points inside the grid's exclusion band (cube-grid cell faces) are
    skipped; everything else follows the usual coarse/refined pattern.
    """

    def banded_sup(g: GridSpec):
        params = g.param_points()
        pts = g.points()
        mask = _include_mask(target, params, g.exclude_band)
        params, pts = params[mask], pts[mask]
        fv = eval_target(target, pts)
        gv = _eval_network(net, pts)
        gaps = np.abs(fv - gv).max(axis=1)
        arg = int(np.argmax(gaps))
        return float(gaps[arg]), params[arg], int(mask.sum()), int((~mask).sum())

    sup, arg_param, included, excluded = banded_sup(grid)
    fine_sup, _, fine_included, _ = banded_sup(grid.refined(2))
    return {
        "sup_error": sup,
        "argmax_param": np.atleast_1d(arg_param).tolist(),
        "included": included,
        "excluded": excluded,
        "refined_sup_error": fine_sup,
        "refined_included": fine_included,
        "refinement_ok": bool(fine_sup <= sup * 1.1 + 1e-15),
    }


def routing_audit(
    net: MoeNetwork,
    target: PiecewiseTarget,
    grid: GridSpec,
    *,
    max_witnesses: int = 10,
) -> dict:
    """Check that every selection layer picked an admissible region.

    Selection layers sit at odd indices (each factor contributes a
    broadcast layer then a selection layer).  A selection is admissible
    when the point lies in the selected piece's closed cell (cube grids)
    or inside the selected chart (manifolds).  Points within the
    exclusion band of a cube cell face are skipped and reported.
    """
    params = grid.param_points()
    pts = grid.points()
    n = pts.shape[0]
    if net.depth != 2 * target.num_factors:
        raise ConfigError(
            f"network depth {net.depth} does not match "
            f"{target.num_factors} target factors (expected pairs of layers)"
        )
    _, selections = moe_network_eval(net, pts, trace=True)

    include = _include_mask(target, params, grid.exclude_band)
    ok = np.ones(n, dtype=bool)
    per_factor = []
    witnesses = []
    slices = target.factor_slices
    for l, factor in enumerate(target.factors):
        sel = np.asarray(selections[2 * l + 1])[:, 0]
        if target.kind == "cube_grid":
            z = params[:, l]
            admissible = (z >= sel) & (z <= sel + 1)
        else:
            member = factor.atlas.membership_matrix(pts[:, slices[l]])
            admissible = member[np.arange(n), sel]
        ok &= admissible
        bad = include & ~admissible
        per_factor.append(
            {"factor": l, "failures": int(bad.sum())}
        )
        for idx in np.flatnonzero(bad)[: max(0, max_witnesses - len(witnesses))]:
            witnesses.append(
                {
                    "factor": l,
                    "selected": int(sel[idx]),
                    "param": params[idx].tolist(),
                    "point": pts[idx].tolist(),
                }
            )
    checked = int(include.sum())
    good = int((ok & include).sum())
    return {
        "pass_fraction": (good / checked) if checked else 1.0,
        "checked": checked,
        "excluded": int(n - checked),
        "failures": checked - good,
        "per_factor": per_factor,
        "witnesses": witnesses,
        "ok": good == checked,
    }


# ---------------------------------------------------------------------------
# Experiment runners


def _resolve_target(cfg: ExperimentConfig) -> PiecewiseTarget:
    spec = cfg.target if cfg.target is not None else default_target_spec(cfg.kind)
    return target_from_config(spec)


def _target_label(target: PiecewiseTarget) -> str:
    return target.name or "custom"


def _resolve_grids(cfg: ExperimentConfig, target: PiecewiseTarget):
    per_axis = cfg.grid if cfg.grid else _default_axis_points(target)
    return (
        audit_grid(target, per_axis, cfg.band),
        error_grid(target, per_axis, cfg.band),
    )


def _error_figure(cfg, target, net, out_dir) -> list:
    """Pointwise-error figure over the parameter space (1-d or 2-d only)."""
    axes = _param_axis_count(target)
    if axes > 2:
        return []
    per_axis = 2048 if axes == 1 else 192
    grid = error_grid(target, per_axis, cfg.band)
    params = grid.param_points()
    pts = grid.points()
    errs = np.abs(eval_target(target, pts) - _eval_network(net, pts)).max(axis=1)
    mask = _include_mask(target, params, grid.exclude_band)
    errs = np.where(mask, errs, np.nan)
    if axes == 1:
        path = plots.save_error_profile(
            out_dir / f"error_profile.{cfg.fig_ext}", params[:, 0], errs
        )
        return [path.name]
    gx = grid.axis_points(0)
    gy = grid.axis_points(1)
    path = plots.save_error_heatmap(
        out_dir / f"error_heatmap.{cfg.fig_ext}", gy, gx, errs.reshape(len(gx), len(gy)).T
    )
    return [path.name]


def _selection_figure(cfg, target, net, out_dir) -> list:
    axes = _param_axis_count(target)
    if axes != 1:
        return []
    grid = audit_grid(target, 2048, cfg.band)
    pts = grid.points()
    _, selections = moe_network_eval(net, pts, trace=True)
    series = [
        (f"factor {l}", np.asarray(selections[2 * l + 1])[:, 0])
        for l in range(target.num_factors)
    ]
    path = plots.save_selection_figure(
        out_dir / f"selections.{cfg.fig_ext}", grid.param_points()[:, 0], series
    )
    return [path.name]


def run_construct(cfg: ExperimentConfig) -> ReportBundle:
    target = _resolve_target(cfg)
    t0 = time.perf_counter()
    result = build_construction(
        target,
        cfg.expert_width,
        construction=cfg.construction,
        chart_mode=cfg.chart_mode,
        seed=cfg.seed,
        tau_max_width=cfg.tau_max_width,
    )
    build_seconds = time.perf_counter() - t0
    g_audit, g_err = _resolve_grids(cfg, target)
    err = end_to_end_error(result.network, target, g_err)
    aud = routing_audit(result.network, target, g_audit)
    bound = result.report.max_expert_fit_error + 1e-9
    inequality = {
        "sup_error": err["sup_error"],
        "bound": bound,
        "satisfied": bool(err["sup_error"] <= bound),
    }
    passed = inequality["satisfied"] and aud["ok"] and err["refinement_ok"]

    artifacts = []
    out = cfg.out_dir
    artifacts.append(io.save_network(out / "network.json", result.network).name)
    report = {
        "version": io.FORMAT_VERSION,
        "kind": "construct",
        "config": cfg.to_dict(),
        "construction": result.report.to_dict(),
        "end_to_end": err,
        "audit": aud,
        "inequality": inequality,
        "build_seconds": build_seconds,
        "passed": passed,
    }
    artifacts.append(io.dump_json(out / "report.json", report).name)
    if cfg.figures:
        artifacts += _error_figure(cfg, target, result.network, out)
        artifacts += _selection_figure(cfg, target, result.network, out)
    summary = {
        "target": _target_label(target),
        "construction": result.report.construction,
        "sup_error": err["sup_error"],
        "bound": bound,
        "pass_fraction": aud["pass_fraction"],
        "active_params": result.report.active_params,
    }
    return ReportBundle(cfg.kind, out, passed, artifacts, summary)


def run_audit(cfg: ExperimentConfig) -> ReportBundle:
    target = _resolve_target(cfg)
    result = build_construction(
        target,
        cfg.expert_width,
        construction=cfg.construction,
        chart_mode=cfg.chart_mode,
        seed=cfg.seed,
        tau_max_width=cfg.tau_max_width,
    )
    g_audit, _ = _resolve_grids(cfg, target)
    aud = routing_audit(result.network, target, g_audit)
    passed = aud["ok"]
    out = cfg.out_dir
    artifacts = [
        io.dump_json(
            out / "audit.json",
            {
                "version": io.FORMAT_VERSION,
                "kind": "audit",
                "config": cfg.to_dict(),
                "construction": result.report.to_dict(),
                "audit": aud,
                "passed": passed,
            },
        ).name
    ]
    if cfg.figures:
        artifacts += _selection_figure(cfg, target, result.network, out)
    summary = {
        "target": _target_label(target),
        "pass_fraction": aud["pass_fraction"],
        "checked": aud["checked"],
        "failures": aud["failures"],
    }
    return ReportBundle(cfg.kind, out, passed, artifacts, summary)


def run_rate_sweep(cfg: ExperimentConfig) -> ReportBundle:
    target = _resolve_target(cfg)
    widths = cfg.widths if cfg.widths is not None else _DEFAULT_RATE_WIDTHS
    label = _target_label(target)
    t0 = time.perf_counter()
    rows = []
    refinements = []
    for m in widths:
        result = build_construction(
            target,
            m,
            construction=cfg.construction,
            chart_mode=cfg.chart_mode,
            seed=cfg.seed,
            tau_max_width=cfg.tau_max_width,
        )
        _, g_err = _resolve_grids(cfg, target)
        err = end_to_end_error(result.network, target, g_err)
        refinements.append(err["refinement_ok"])
        rows.append(
            {
                "m": int(m),
                "error": err["sup_error"],
                "active_params": result.report.active_params,
                "construction": result.report.construction,
                "target": label,
                "seed": cfg.seed,
            }
        )
    elapsed = time.perf_counter() - t0
    rate = fit_rate([(r["m"], r["error"]) for r in rows])
    passed = all(refinements)
    if cfg.max_slope is not None:
        passed = passed and rate.slope <= cfg.max_slope

    out = cfg.out_dir
    artifacts = [
        io.write_sweep_csv(
            out / "sweep.csv",
            [
                (r["m"], r["error"], r["active_params"], r["construction"], r["target"], r["seed"])
                for r in rows
            ],
        ).name,
        io.dump_json(
            out / "rate.json",
            {
                "version": io.FORMAT_VERSION,
                "kind": "rate_sweep",
                "config": cfg.to_dict(),
                "rows": rows,
                "rate": rate.to_dict(),
                "refinement_ok": all(refinements),
                "elapsed_seconds": elapsed,
                "passed": passed,
            },
        ).name,
    ]
    if cfg.figures:
        artifacts.append(
            plots.save_rate_figure(
                out / f"rate.{cfg.fig_ext}",
                [(label, [r["m"] for r in rows], [r["error"] for r in rows], rate.slope)],
                title=f"{label}: error vs expert width",
            ).name
        )
    summary = {
        "target": label,
        "slope": rate.slope,
        "widths": list(widths),
        "elapsed_seconds": elapsed,
    }
    return ReportBundle(cfg.kind, out, passed, artifacts, summary)


def _banded_dense_error(dense_net, target, grid: GridSpec) -> dict:
    """Sup error of a dense 1-d baseline on the same banded grid."""

    def banded_sup(g):
        params = g.param_points()
        mask = _include_mask(target, params, g.exclude_band)
        pts = params[mask]
        fv = eval_target(target, pts)[:, 0]
        gv = ffn_eval(dense_net, pts)[:, 0]
        return float(np.max(np.abs(fv - gv)))

    sup = banded_sup(grid)
    fine = banded_sup(grid.refined(2))
    return {
        "sup_error": sup,
        "refined_sup_error": fine,
        "refinement_ok": bool(fine <= sup * 1.1 + 1e-15),
    }


def _matched_dense_width(active_params: int, cells: int) -> int:
    """Smallest dense width whose budget reaches ``active_params``.

    A width-w one-input PWL network carries 3w + 1 parameters.  Widths
    whose uniform knots land exactly on interior cell faces are skipped
    (by growing the budget, never shrinking it): a knot pinned to the
    kink would let the baseline reproduce it exactly, which says nothing
    about generic placement.
    """
    w = max(2, -(-(active_params - 1) // 3))
    while any((j * (w - 1)) % cells == 0 for j in range(1, cells)):
        w += 1
    return w


def run_compare(cfg: ExperimentConfig) -> ReportBundle:
    target = _resolve_target(cfg)
    if target.kind != "cube_grid" or target.num_factors != 1:
        raise ConfigError(
            "compare needs a single-factor cube_grid target "
            "(the dense arm is a global 1-d interpolant)"
        )
    cells = target.factors[0].expert_count
    widths = cfg.widths if cfg.widths is not None else _DEFAULT_COMPARE_WIDTHS
    label = _target_label(target)
    # The dense arm's error peaks in a band one knot spacing wide around
    # each kink, so the grid must be much finer than the largest matched
    # dense width for the sup estimates to survive refinement.
    per_axis = cfg.grid if cfg.grid else 16384
    grid = error_grid(target, per_axis, cfg.band)

    def global_fn(z):
        return eval_target(target, np.asarray(z)[:, None])[:, 0]

    t0 = time.perf_counter()
    moe_rows, dense_rows = [], []
    refinements = []
    for m in widths:
        result = assemble_warmup_moe(target, m)
        err = end_to_end_error(result.network, target, grid)
        refinements.append(err["refinement_ok"])
        budget = result.report.active_params
        moe_rows.append(
            {
                "m": int(m),
                "error": err["sup_error"],
                "active_params": budget,
                "construction": result.report.construction,
                "target": label,
                "seed": cfg.seed,
            }
        )
        w = _matched_dense_width(budget, cells)
        dense_net, _ = fit_dense_baseline(
            global_fn, w, "pwl_global_1d", domain=(0.0, float(cells))
        )
        dense_err = _banded_dense_error(dense_net, target, grid)
        refinements.append(dense_err["refinement_ok"])
        dense_rows.append(
            {
                "m": int(w),
                "error": dense_err["sup_error"],
                "active_params": ffn_param_count(dense_net),
                "construction": "dense_pwl",
                "target": label,
                "seed": cfg.seed,
            }
        )
    elapsed = time.perf_counter() - t0

    # Each arm's slope is fitted against its own width column: the routed
    # arm's expert width and the dense arm's (inflated) knot count.  Using
    # the raw parameter count as the x-axis would fold its affine offset
    # into the slope and blur the comparison.
    moe_rate = fit_rate([(r["m"], r["error"]) for r in moe_rows])
    dense_rate = fit_rate([(r["m"], r["error"]) for r in dense_rows])
    gap = dense_rate.slope - moe_rate.slope
    checks = {"refinement_ok": all(refinements)}
    passed = all(refinements)
    if cfg.require_gap is not None:
        checks["gap_ok"] = bool(moe_rate.slope <= dense_rate.slope - cfg.require_gap)
        passed = passed and checks["gap_ok"]
    if cfg.require_match is not None:
        checks["match_ok"] = bool(abs(gap) <= cfg.require_match)
        passed = passed and checks["match_ok"]

    out = cfg.out_dir
    all_rows = moe_rows + dense_rows
    artifacts = [
        io.write_sweep_csv(
            out / "compare.csv",
            [
                (r["m"], r["error"], r["active_params"], r["construction"], r["target"], r["seed"])
                for r in all_rows
            ],
        ).name,
        io.dump_json(
            out / "compare.json",
            {
                "version": io.FORMAT_VERSION,
                "kind": "compare",
                "config": cfg.to_dict(),
                "moe": {"rows": moe_rows, "rate": moe_rate.to_dict()},
                "dense": {"rows": dense_rows, "rate": dense_rate.to_dict()},
                "slope_gap": gap,
                "checks": checks,
                "elapsed_seconds": elapsed,
                "passed": passed,
            },
        ).name,
    ]
    if cfg.figures:
        artifacts.append(
            plots.save_compare_figure(
                out / f"compare.{cfg.fig_ext}",
                moe_rows,
                dense_rows,
                title=f"{label}: routed vs dense at matched budget",
            ).name
        )
    summary = {
        "target": label,
        "moe_slope": moe_rate.slope,
        "dense_slope": dense_rate.slope,
        "slope_gap": gap,
        "elapsed_seconds": elapsed,
    }
    return ReportBundle(cfg.kind, out, passed, artifacts, summary)


def gadget_bit_checks(cells: int, points: int, seed: int) -> dict:
    """Bit-level verification of the cell-indicator gadget.

    Compares the network's outputs against the closed-form tent
    ``min(x - i, i + 1 - x)_+`` at random points plus every integer and
    half-integer knot — with zero tolerance.  All the subtractions
    involved are exact in double precision over this range, so the
    comparison is meaningful bit by bit.
    """
    net = build_indicator_gadget(cells)
    rng = np.random.default_rng(seed)
    xs = rng.uniform(0.0, float(cells), size=points)
    knots = np.arange(0.0, cells + 0.25, 0.5)
    xs = np.concatenate([xs, knots])
    taus = ffn_eval(net, xs[:, None])

    idx = np.arange(cells, dtype=np.float64)
    left = xs[:, None] - idx
    right = (idx + 1.0) - xs[:, None]
    inside = (left > 0.0) & (right > 0.0)
    oracle = np.where(inside, np.minimum(left, right), 0.0)

    outside_vals = taus[~inside]
    return {
        "cells": cells,
        "points": int(xs.size),
        "bit_exact": bool(np.array_equal(taus, oracle)),
        "outside_exact_zero": bool(np.all(outside_vals == 0.0)),
        "max_outside_abs": float(np.max(np.abs(outside_vals))),
        "inside_positive": bool(np.all(taus[inside] > 0.0)),
        "face_values_zero": bool(
            np.all(ffn_eval(net, np.arange(cells + 1.0)[:, None]) == 0.0)
        ),
    }


def run_verify_gadgets(cfg: ExperimentConfig) -> ReportBundle:
    checks = gadget_bit_checks(cfg.cells, cfg.points, cfg.seed)
    passed = (
        checks["bit_exact"]
        and checks["outside_exact_zero"]
        and checks["inside_positive"]
        and checks["face_values_zero"]
    )
    out = cfg.out_dir
    artifacts = [
        io.dump_json(
            out / "gadgets.json",
            {
                "version": io.FORMAT_VERSION,
                "kind": "verify_gadgets",
                "config": cfg.to_dict(),
                "checks": checks,
                "passed": passed,
            },
        ).name
    ]
    if cfg.figures:
        net = build_indicator_gadget(cfg.cells)
        xs = np.linspace(0.0, float(cfg.cells), 2001)
        artifacts.append(
            plots.save_gadget_figure(
                out / f"gadget_curves.{cfg.fig_ext}", xs, ffn_eval(net, xs[:, None])
            ).name
        )
    return ReportBundle(cfg.kind, out, passed, artifacts, dict(checks))


_RUNNERS = {
    "construct": run_construct,
    "audit": run_audit,
    "rate_sweep": run_rate_sweep,
    "compare": run_compare,
    "verify_gadgets": run_verify_gadgets,
}


def run_experiment(cfg: ExperimentConfig) -> ReportBundle:
    """Run one experiment and write its bundle index."""
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    bundle = _RUNNERS[cfg.kind](cfg)
    io.dump_json(
        cfg.out_dir / "index.json",
        {
            "version": io.FORMAT_VERSION,
            "kind": cfg.kind,
            "seed": cfg.seed,
            "passed": bundle.passed,
            "artifacts": sorted(bundle.artifacts),
            "env": {"package": "moe-approx", "package_version": __version__, "numpy": np.__version__},
        },
    )
    return bundle
