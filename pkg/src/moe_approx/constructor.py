"""Constructive assembly of routed networks for piecewise targets.

Each factor of a target contributes a pair of layers.  A broadcast layer
(identical experts, constant gating) appends per-region scores to the
state; the following expert layer reads those scores through a
block-selector gate matrix, so hard top-1 routing picks the region, and
the selected expert writes its piece's value while passing the rest of
the state through unchanged.

Cube-grid factors get exact tent-shaped region scores (zero outside the
owning cell in exact floating point).  Manifold factors get fitted
approximations of the atlas's partition of unity, certified on a dense
grid to half the tolerance that guarantees correct routing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .approx_fit import GridSpec, fit_expert_1d, fit_ls_on_samples
from .errors import CertificationError, ConfigError, DimensionError
from .moe_core import (
    AffineMap,
    GatingNetwork,
    MoeLayer,
    MoeNetwork,
    active_param_count,
)
from .nn_core import (
    AffineLayer,
    FfnNetwork,
    ffn_affine_precompose,
    ffn_compose,
    ffn_embed_inputs,
    ffn_eval,
    ffn_with_passthrough,
)
from .targets import (
    Chart,
    CubeFactor,
    ManifoldFactor,
    PiecewiseTarget,
    eval_factor_piece,
)

__all__ = [
    "RoutingBlock",
    "PartitionFit",
    "ConstructionReport",
    "ConstructionResult",
    "build_indicator_gadget",
    "fit_partition_approximators",
    "build_routing_block",
    "build_expert_shallow",
    "assemble_shallow_moe",
    "assemble_warmup_moe",
    "assemble_deep_moe",
]


def build_indicator_gadget(cells: int) -> FfnNetwork:
    """Exact cell indicators on [0, cells]: one tent per unit cell.

    The returned two-layer network (input 1, hidden 3*cells, output
    cells) computes, per cell i, ReLU(x-i) + ReLU(x-(i+1)) -
    2*ReLU(x-(i+1/2)): a tent of height 1/2 on (i, i+1) that is exactly
    0.0 outside the open cell — the three hinge terms cancel without
    rounding because all knots are half-integers.
    """
    e = int(cells)
    if e < 1:
        raise ConfigError(f"need at least one cell, got {e}")
    w1 = np.ones((3 * e, 1))
    b1 = np.empty(3 * e)
    for i in range(e):
        b1[3 * i : 3 * i + 3] = (-float(i), -float(i + 1), -(i + 0.5))
    w2 = np.zeros((e, 3 * e))
    for i in range(e):
        w2[i, 3 * i : 3 * i + 3] = (1.0, 1.0, -2.0)
    return FfnNetwork(
        layers=(
            AffineLayer(w1, b1, relu=True),
            AffineLayer(w2, np.zeros(e), relu=False),
        )
    )


@dataclass(frozen=True)
class PartitionFit:
    """A certified fit of an atlas's partition of unity.

    ``certified_tol`` is the max over charts of the sup gap between the
    fitted scores and the true partition values, measured on
    ``verify_points`` grid points.  Certification demands
    ``certified_tol <= certify_threshold`` (half the routing-correctness
    threshold ``pass_threshold``, for safety).
    """

    score_net: FfnNetwork
    certified_tol: float
    achieved_width: int
    pass_threshold: float
    certify_threshold: float
    verify_points: int


def _default_verify_grid(atlas) -> GridSpec:
    per_axis = max(64, int(math.ceil(16384 ** (1.0 / len(atlas.param_bounds)))))
    return GridSpec(
        bounds=atlas.param_bounds,
        counts=(per_axis,) * len(atlas.param_bounds),
        embed=atlas.param_embed,
        endpoint=False,
    )


def fit_partition_approximators(
    atlas,
    max_width: int = 1024,
    verify_grid: Optional[GridSpec] = None,
    *,
    start_width: int = 32,
    seed: int = 0,
) -> PartitionFit:
    """Fit all partition functions with one multi-output network.

    Random-feature least squares on manifold samples, verified in sup
    norm on the grid; the width doubles until the certify threshold
    1/(8E) is met or ``max_width`` is exhausted, in which case a
    CertificationError carries the best tolerance achieved.
    """
    e = atlas.expert_count
    pass_threshold = 1.0 / (4.0 * e)
    certify_threshold = 1.0 / (8.0 * e)
    if verify_grid is None:
        verify_grid = _default_verify_grid(atlas)
    verify_pts = verify_grid.points()
    verify_vals = atlas.partition_values(verify_pts)

    best_tol, best_width, best_net = math.inf, 0, None
    width = min(int(start_width), int(max_width))
    while True:
        samples = atlas.sample_points(max(10 * width, 2048))
        values = atlas.partition_values(samples)
        net = fit_ls_on_samples(samples, values, width, seed=seed)
        tol = float(np.max(np.abs(ffn_eval(net, verify_pts) - verify_vals)))
        if tol < best_tol:
            best_tol, best_width, best_net = tol, width, net
        if tol <= certify_threshold:
            return PartitionFit(
                score_net=net,
                certified_tol=tol,
                achieved_width=width,
                pass_threshold=pass_threshold,
                certify_threshold=certify_threshold,
                verify_points=verify_pts.shape[0],
            )
        if width >= max_width:
            raise CertificationError(
                f"partition fit reached {best_tol:.3e} at width {best_width}, "
                f"needed {certify_threshold:.3e} within width {max_width}",
                best_tol=best_tol,
                best_width=best_width,
            )
        width = min(2 * width, int(max_width))


@dataclass(frozen=True)
class RoutingBlock:
    """The two-layer routing unit for one factor.

    ``prelayer`` broadcasts (state, scores(x_l)) with constant gating;
    ``gate_matrix`` is the next layer's gating — zeros over the state,
    identity over the appended scores — so top-1 selection reads the
    scores verbatim.
    """

    prelayer: MoeLayer
    gate_matrix: np.ndarray
    score_net: FfnNetwork
    certified_tol: float
    state_dim: int
    expert_count: int


def build_routing_block(
    score_net: FfnNetwork,
    state_dim: int,
    offset: int,
    *,
    certified_tol: float,
    nonnegative_state: bool = False,
) -> RoutingBlock:
    """Wrap a score network (reading state coords at ``offset``) for routing."""
    e = score_net.output_dim
    embedded = ffn_embed_inputs(score_net, state_dim, offset)
    carrier = ffn_with_passthrough(
        embedded, state_dim, nonnegative=nonnegative_state
    )
    gating = GatingNetwork(mode="linear", matrix=np.zeros((e, state_dim)))
    prelayer = MoeLayer(gating=gating, experts=tuple([carrier] * e), k=1)
    gate_matrix = np.concatenate([np.zeros((e, state_dim)), np.eye(e)], axis=1)
    gate_matrix.setflags(write=False)
    return RoutingBlock(
        prelayer=prelayer,
        gate_matrix=gate_matrix,
        score_net=score_net,
        certified_tol=float(certified_tol),
        state_dim=state_dim,
        expert_count=e,
    )


def _linear_chart_affine(chart: Chart) -> tuple[np.ndarray, np.ndarray]:
    """The chart's forward map as (matrix, offset): u = A x + c."""
    if chart.linear is None:
        raise ConfigError("chart has no linear data")
    d = chart.linear
    a = d.scale * d.frame.T
    c = d.scale * (d.shift - d.frame.T @ d.center)
    return a, c


def build_expert_shallow(
    g_net: FfnNetwork,
    chart: Chart,
    input_dim: int,
    *,
    chart_mode: str,
    psi_net: Optional[FfnNetwork] = None,
) -> FfnNetwork:
    """One selected-region expert for a broadcast-then-select pair.

    The expert receives (state, scores) of length ``input_dim`` and must
    ignore the trailing score coordinates, so the chart-coordinate map
    ``g_net`` is composed with the chart — absorbed into the first
    affine layer when the chart is linear ("linear" mode, depth 2), or
    with a fitted chart approximator ``psi_net`` ("general" mode,
    depth 3) — and then re-read from the leading coordinates only.
    """
    if chart_mode == "linear":
        a, c = _linear_chart_affine(chart)
        inner = ffn_affine_precompose(g_net, a, c)
    elif chart_mode == "general":
        if psi_net is None:
            raise ConfigError("general mode needs a fitted chart approximator")
        inner = ffn_compose(g_net, psi_net)
    else:
        raise ConfigError(f"unknown chart mode {chart_mode!r}")
    return ffn_embed_inputs(inner, input_dim, 0)


def _with_state_passthrough(
    inner: FfnNetwork, state_dim: int, slot: int, *, nonnegative: bool
) -> FfnNetwork:
    """Output the input state with coordinate ``slot`` replaced by inner(x).

    ``inner`` maps the full (state, scores) input to one value; all other
    state coordinates are carried through inner's hidden layers by
    identity ReLU neurons (paired when signed values must survive) and
    the trailing score coordinates are dropped.
    """
    if inner.output_dim != 1:
        raise DimensionError("slot writer needs a scalar-valued inner network")
    if not 0 <= slot < state_dim:
        raise DimensionError(f"slot {slot} outside state of size {state_dim}")
    carried = [j for j in range(state_dim) if j != slot]
    p = len(carried)
    per = 1 if nonnegative else 2
    c = per * p
    depth = inner.depth

    layers = []
    first = inner.layers[0]
    w = np.zeros((c + first.out_dim, inner.input_dim))
    for k, j in enumerate(carried):
        w[per * k, j] = 1.0
        if not nonnegative:
            w[per * k + 1, j] = -1.0
    w[c:] = first.weight
    layers.append(
        AffineLayer(w, np.concatenate([np.zeros(c), first.bias]), relu=True)
    )

    for t in range(1, depth - 1):
        blk = inner.layers[t]
        w = np.zeros((c + blk.out_dim, c + blk.in_dim))
        w[:c, :c] = np.eye(c)
        w[c:, c:] = blk.weight
        layers.append(
            AffineLayer(w, np.concatenate([np.zeros(c), blk.bias]), relu=True)
        )

    last = inner.layers[-1]
    w = np.zeros((state_dim, c + last.in_dim))
    bias = np.zeros(state_dim)
    for k, j in enumerate(carried):
        w[j, per * k] = 1.0
        if not nonnegative:
            w[j, per * k + 1] = -1.0
    w[slot, c:] = last.weight[0]
    bias[slot] = last.bias[0]
    layers.append(AffineLayer(w, bias, relu=False))
    return FfnNetwork(layers=tuple(layers))


@dataclass
class ConstructionReport:
    """What was built and how well each component fits."""

    construction: str
    target_name: str
    layer_count: int
    expert_depth: int
    experts_per_block: list
    expert_width: int
    routing_widths: list
    certified_tols: list
    certify_thresholds: list
    pass_thresholds: list
    expert_fit_errors: list  # [factor][region]
    max_expert_fit_error: float
    active_params: int
    layer_widths: list  # max hidden width per MoE layer
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "construction": self.construction,
            "target": self.target_name,
            "layer_count": self.layer_count,
            "expert_depth": self.expert_depth,
            "experts_per_block": list(self.experts_per_block),
            "expert_width": self.expert_width,
            "routing_widths": list(self.routing_widths),
            "certified_tols": list(self.certified_tols),
            "certify_thresholds": list(self.certify_thresholds),
            "pass_thresholds": list(self.pass_thresholds),
            "expert_fit_errors": [list(row) for row in self.expert_fit_errors],
            "max_expert_fit_error": self.max_expert_fit_error,
            "active_params": self.active_params,
            "layer_widths": list(self.layer_widths),
            "notes": dict(self.notes),
        }


@dataclass
class ConstructionResult:
    network: MoeNetwork
    report: ConstructionReport


def _network_layer_widths(net: MoeNetwork) -> list:
    return [max(e.width for e in layer.experts) for layer in net.layers]


def _expert_layer(
    gate_matrix: np.ndarray, experts: Sequence[FfnNetwork]
) -> MoeLayer:
    gating = GatingNetwork(mode="linear", matrix=gate_matrix)
    return MoeLayer(gating=gating, experts=tuple(experts), k=1)


def _cube_fit_errors(
    factor: CubeFactor, nets: Sequence[FfnNetwork], verify_count: int
) -> list:
    """Per-piece sup errors on a shared dense grid over [0, E]."""
    e = factor.expert_count
    grid = np.linspace(0.0, float(e), verify_count)
    errs = []
    for i, net in enumerate(nets):
        mask = (grid >= i) & (grid <= i + 1)
        vals = eval_factor_piece(factor, i, grid[mask])
        approx = ffn_eval(net, grid[mask][:, None])[:, 0]
        errs.append(float(np.max(np.abs(vals - approx))))
    return errs


def assemble_warmup_moe(
    target: PiecewiseTarget,
    expert_width: int,
    *,
    verify_points_per_factor: int = 8193,
) -> ConstructionResult:
    """Depth-2L network for a cube-grid target with exact tent routing.

    Factor l's pair of layers appends exact cell indicators of
    coordinate l, selects the owning piece, and overwrites coordinate l
    with a width-m interpolant of that piece.  Later factors read their
    raw coordinates untouched; identity pass-through is exact.
    """
    if target.kind != "cube_grid":
        raise ConfigError("warmup assembly needs a cube_grid target")
    state_dim = target.num_factors
    layers = []
    fit_errors = []
    routing_widths = []
    slot_min = 0.0  # min value ever written into a processed slot

    for l, factor in enumerate(target.factors):
        e = factor.expert_count
        gadget = build_indicator_gadget(e)
        routing_widths.append(gadget.width)
        block = build_routing_block(
            gadget,
            state_dim,
            l,
            certified_tol=0.0,
            nonnegative_state=slot_min >= 0.0,
        )
        layers.append(block.prelayer)

        piece_nets = []
        for i in range(e):
            net, _ = fit_expert_1d(
                factor.pieces[i], expert_width, (float(i), float(i + 1))
            )
            # Written slot values stay within the interpolant's knot range.
            knot_vals = np.asarray(
                factor.pieces[i](np.linspace(float(i), float(i + 1), expert_width))
            )
            slot_min = min(slot_min, float(knot_vals.min()))
            piece_nets.append(net)
        fit_errors.append(
            _cube_fit_errors(factor, piece_nets, verify_points_per_factor)
        )

        experts = []
        for i in range(e):
            inner = ffn_embed_inputs(piece_nets[i], state_dim + e, l)
            experts.append(
                _with_state_passthrough(
                    inner, state_dim, l, nonnegative=slot_min >= 0.0
                )
            )
        layers.append(_expert_layer(block.gate_matrix, experts))

    network = MoeNetwork(layers=tuple(layers))
    report = ConstructionReport(
        construction="warmup",
        target_name=target.name,
        layer_count=len(layers),
        expert_depth=2,
        experts_per_block=[f.expert_count for f in target.factors],
        expert_width=int(expert_width),
        routing_widths=routing_widths,
        certified_tols=[0.0] * target.num_factors,
        certify_thresholds=[0.0] * target.num_factors,
        pass_thresholds=[
            1.0 / (4.0 * f.expert_count) for f in target.factors
        ],
        expert_fit_errors=fit_errors,
        max_expert_fit_error=float(max(max(row) for row in fit_errors)),
        active_params=active_param_count(network),
        layer_widths=_network_layer_widths(network),
        notes={"routing": "exact tent indicators"},
    )
    return ConstructionResult(network=network, report=report)


def _fit_chart_scalar(chart_map, chart: Chart, width: int) -> tuple[FfnNetwork, float]:
    """Fit the chart-coordinate map on [0,1]^d (1-d: PWL interpolation)."""
    if chart.chart_dim == 1:
        return fit_expert_1d(lambda z: chart_map(z[:, None]), width, (0.0, 1.0))
    raise ConfigError("only 1-d chart coordinate maps are supported so far")


def _manifold_factor_layers(
    factor: ManifoldFactor,
    state_dim: int,
    offset: int,
    slot: int,
    expert_width: int,
    *,
    chart_mode: str,
    tau_max_width: int,
    seed: int,
    verify_grid: GridSpec,
    scalar_output: bool,
) -> tuple[MoeLayer, MoeLayer, dict]:
    """Build the (broadcast, select) pair for one manifold factor."""
    atlas = factor.atlas
    e = atlas.expert_count
    part = fit_partition_approximators(
        atlas, tau_max_width, verify_grid.refined(4), seed=seed
    )
    block = build_routing_block(
        part.score_net,
        state_dim,
        offset,
        certified_tol=part.certified_tol,
        nonnegative_state=False,
    )

    verify_pts = verify_grid.refined(4).points()
    membership = atlas.membership_matrix(verify_pts)

    experts = []
    fit_errs = []
    psi_errs = []
    for i in range(e):
        chart = atlas.charts[i]
        g_net, _ = _fit_chart_scalar(factor.chart_maps[i], chart, expert_width)
        psi_net = None
        if chart_mode == "general":
            inside = verify_pts[membership[:, i]]
            fit_x = _chart_param_samples(
                atlas, i, max(10 * expert_width, 1024)
            )
            psi_net = fit_ls_on_samples(
                fit_x, chart.forward(fit_x), expert_width, seed=seed + 1 + i
            )
            psi_errs.append(
                float(
                    np.max(np.abs(ffn_eval(psi_net, inside) - chart.forward(inside)))
                )
                if inside.size
                else 0.0
            )
        inner = build_expert_shallow(
            g_net,
            chart,
            state_dim + e,
            chart_mode=chart_mode,
            psi_net=psi_net,
        )
        # Re-read the factor's ambient block from its state offset.
        inner = _shift_input_block(inner, offset, atlas.ambient_dim, state_dim + e)

        pts_i = verify_pts[membership[:, i]]
        if pts_i.size:
            truth = eval_factor_piece(factor, i, pts_i)
            state_pts = np.zeros((pts_i.shape[0], state_dim + e))
            state_pts[:, offset : offset + atlas.ambient_dim] = pts_i
            approx = ffn_eval(inner, state_pts)[:, 0]
            fit_errs.append(float(np.max(np.abs(truth - approx))))
        else:
            fit_errs.append(0.0)

        if scalar_output:
            experts.append(inner)
        else:
            experts.append(
                _with_state_passthrough(inner, state_dim, slot, nonnegative=False)
            )

    select = _expert_layer(block.gate_matrix, experts)
    info = {
        "certified_tol": part.certified_tol,
        "certify_threshold": part.certify_threshold,
        "pass_threshold": part.pass_threshold,
        "routing_width": part.achieved_width,
        "fit_errors": fit_errs,
        "psi_errors": psi_errs,
    }
    return block.prelayer, select, info


def _chart_param_samples(atlas, index: int, n: int) -> np.ndarray:
    """At least n ambient sample points inside one chart."""
    # Oversample the whole manifold so the chart's share still covers n.
    total = int(2 * n * atlas.expert_count)
    pts = atlas.sample_points(total)
    inside = pts[atlas.membership_matrix(pts)[:, index]]
    if inside.shape[0] >= n:
        return inside
    return pts


def _shift_input_block(
    net: FfnNetwork, offset: int, block_dim: int, total_dim: int
) -> FfnNetwork:
    """Move the first-layer read window from columns [0, block) to offset."""
    first = net.layers[0]
    w = np.zeros((first.out_dim, total_dim))
    w[:, offset : offset + block_dim] = first.weight[:, :block_dim]
    return FfnNetwork(
        layers=(AffineLayer(w, first.bias, relu=first.relu),) + net.layers[1:]
    )


def assemble_shallow_moe(
    target: PiecewiseTarget,
    expert_width: int,
    *,
    chart_mode: str = "auto",
    tau_max_width: int = 1024,
    seed: int = 0,
    verify_grid: Optional[GridSpec] = None,
) -> ConstructionResult:
    """Depth-2 network for a single-factor manifold target.

    Layer 1 broadcasts fitted partition scores; layer 2 routes on them
    and applies the selected chart's expert.  ``chart_mode`` "linear"
    absorbs a linear chart into the expert's first layer (depth-2
    experts); "general" composes with a fitted chart approximator
    (depth-3 experts); "auto" picks "linear" when charts allow it.
    """
    if target.kind != "product_manifold" or target.num_factors != 1:
        raise ConfigError("shallow assembly needs a single-factor manifold target")
    factor: ManifoldFactor = target.factors[0]
    mode = _resolve_chart_mode(chart_mode, factor)
    state_dim = factor.ambient_dim
    if verify_grid is None:
        verify_grid = GridSpec(
            bounds=factor.atlas.param_bounds,
            counts=(4096,),
            embed=factor.atlas.param_embed,
            endpoint=False,
        )
    pre, select, info = _manifold_factor_layers(
        factor,
        state_dim,
        offset=0,
        slot=0,
        expert_width=expert_width,
        chart_mode=mode,
        tau_max_width=tau_max_width,
        seed=seed,
        verify_grid=verify_grid,
        scalar_output=True,
    )
    network = MoeNetwork(layers=(pre, select))
    report = ConstructionReport(
        construction=f"shallow_{mode}",
        target_name=target.name,
        layer_count=2,
        expert_depth=2 if mode == "linear" else 3,
        experts_per_block=[factor.expert_count],
        expert_width=int(expert_width),
        routing_widths=[info["routing_width"]],
        certified_tols=[info["certified_tol"]],
        certify_thresholds=[info["certify_threshold"]],
        pass_thresholds=[info["pass_threshold"]],
        expert_fit_errors=[info["fit_errors"]],
        max_expert_fit_error=float(max(info["fit_errors"])),
        active_params=active_param_count(network),
        layer_widths=_network_layer_widths(network),
        notes={"psi_errors": info["psi_errors"]},
    )
    return ConstructionResult(network=network, report=report)


def _resolve_chart_mode(chart_mode: str, factor: ManifoldFactor) -> str:
    if chart_mode not in ("auto", "linear", "general"):
        raise ConfigError(f"unknown chart mode {chart_mode!r}")
    linear_ok = all(c.linear is not None for c in factor.atlas.charts)
    if chart_mode == "auto":
        return "linear" if linear_ok else "general"
    if chart_mode == "linear" and not linear_ok:
        raise ConfigError("linear chart mode requested but charts are not linear")
    return chart_mode


def assemble_deep_moe(
    target: PiecewiseTarget,
    expert_width: int,
    *,
    chart_mode: str = "general",
    tau_max_width: int = 1024,
    seed: int = 0,
    verify_counts: Optional[Sequence[int]] = None,
) -> ConstructionResult:
    """Depth-2L network for a product-manifold target.

    The state is (all factor coordinates, L value slots); the embedding
    appends zero slots, each factor's layer pair routes on its own
    fitted partition scores and writes its piece value into its slot,
    and the readout extracts the slots.  Raw coordinates pass through
    every layer bit-exactly (signed identity pairs).
    """
    if target.kind != "product_manifold":
        raise ConfigError("deep assembly needs a product_manifold target")
    factors = target.factors
    ambient = sum(f.ambient_dim for f in factors)
    state_dim = ambient + target.num_factors

    embed_w = np.zeros((state_dim, ambient))
    embed_w[:ambient, :ambient] = np.eye(ambient)
    embed = AffineMap(embed_w, np.zeros(state_dim))
    readout_w = np.zeros((target.num_factors, state_dim))
    readout_w[:, ambient:] = np.eye(target.num_factors)
    readout = AffineMap(readout_w, np.zeros(target.num_factors))

    layers = []
    infos = []
    offset = 0
    for l, factor in enumerate(factors):
        mode = _resolve_chart_mode(chart_mode, factor)
        counts = (
            int(verify_counts[l])
            if verify_counts is not None
            else 1024
        )
        vgrid = GridSpec(
            bounds=factor.atlas.param_bounds,
            counts=(counts,) * len(factor.atlas.param_bounds),
            embed=factor.atlas.param_embed,
            endpoint=False,
        )
        pre, select, info = _manifold_factor_layers(
            factor,
            state_dim,
            offset=offset,
            slot=ambient + l,
            expert_width=expert_width,
            chart_mode=mode,
            tau_max_width=tau_max_width,
            seed=seed + 100 * l,
            verify_grid=vgrid,
            scalar_output=False,
        )
        layers.extend([pre, select])
        infos.append(info)
        offset += factor.ambient_dim

    network = MoeNetwork(layers=tuple(layers), embed=embed, readout=readout)
    mode = _resolve_chart_mode(chart_mode, factors[0])
    report = ConstructionReport(
        construction=f"deep_{mode}",
        target_name=target.name,
        layer_count=len(layers),
        expert_depth=2 if mode == "linear" else 3,
        experts_per_block=[f.expert_count for f in factors],
        expert_width=int(expert_width),
        routing_widths=[i["routing_width"] for i in infos],
        certified_tols=[i["certified_tol"] for i in infos],
        certify_thresholds=[i["certify_threshold"] for i in infos],
        pass_thresholds=[i["pass_threshold"] for i in infos],
        expert_fit_errors=[i["fit_errors"] for i in infos],
        max_expert_fit_error=float(
            max(max(i["fit_errors"]) for i in infos)
        ),
        active_params=active_param_count(network),
        layer_widths=_network_layer_widths(network),
        notes={"psi_errors": [i["psi_errors"] for i in infos]},
    )
    return ConstructionResult(network=network, report=report)
