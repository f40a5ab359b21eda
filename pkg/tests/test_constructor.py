"""Routed-network assembly: gadgets, certification, and the full builds."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from moe_approx.constructor import (
    assemble_deep_moe,
    assemble_shallow_moe,
    assemble_warmup_moe,
    build_indicator_gadget,
    build_routing_block,
    fit_partition_approximators,
)
from moe_approx.errors import CertificationError, ConfigError
from moe_approx.harness.experiments import (
    audit_grid,
    end_to_end_error,
    error_grid,
    routing_audit,
)
from moe_approx.moe_core import active_param_count, moe_layer_eval, moe_network_eval
from moe_approx.nn_core import ffn_eval
from moe_approx.targets import (
    build_circle_atlas,
    build_manifold_target,
    chart_maps_from_global,
    fig3_target,
    sin_circle_target,
    sincos_torus_target,
)


def tent_oracle(cells, x):
    """Reference indicator bank: distance to the nearest face, clipped at 0."""
    j = np.arange(cells)
    left = x[:, None] - j
    right = (j + 1) - x[:, None]
    inside = (left > 0) & (right > 0)
    return np.where(inside, np.minimum(left, right), 0.0)


class TestIndicatorGadget:
    def test_reference_rows(self):
        net = build_indicator_gadget(3)
        x = np.array([[0.25], [1.5], [2.0], [2.75]])
        y = ffn_eval(net, x)
        want = np.array(
            [
                [0.25, 0.0, 0.0],
                [0.0, 0.5, 0.0],
                [0.0, 0.0, 0.0],
                [0.0, 0.0, 0.25],
            ]
        )
        assert np.array_equal(y, want)

    def test_bit_exact_against_oracle(self):
        for cells in (2, 3, 8):
            net = build_indicator_gadget(cells)
            rng = np.random.default_rng(cells)
            x = np.concatenate(
                [
                    rng.uniform(0.0, cells, size=4096),
                    np.arange(0, 2 * cells + 1) / 2.0,  # all faces and midpoints
                ]
            )
            y = ffn_eval(net, x.reshape(-1, 1))
            assert np.array_equal(y, tent_oracle(cells, x))

    def test_support_is_open_cell(self):
        cells = 5
        net = build_indicator_gadget(cells)
        rng = np.random.default_rng(55)
        x = rng.uniform(0.0, cells, size=20_000)
        y = ffn_eval(net, x.reshape(-1, 1))
        cell = np.floor(x).astype(int)
        interior = x != cell  # almost surely true for uniform draws
        assert np.all(y[np.arange(len(x))[interior], cell[interior]] > 0)
        off = y.copy()
        off[np.arange(len(x))[interior], cell[interior]] = 0.0
        assert np.all(off == 0.0)

    def test_faces_are_exactly_zero(self):
        net = build_indicator_gadget(4)
        faces = np.arange(5.0)
        y = ffn_eval(net, faces.reshape(-1, 1))
        assert np.all(y == 0.0)

    def test_depth_and_width(self):
        net = build_indicator_gadget(6)
        assert len(net.layers) == 2
        assert net.layers[0].weight.shape == (3 * 6, 1)


class TestPartitionCertification:
    def test_certifies_below_threshold(self):
        atlas = build_circle_atlas(4, 0.25)
        fit = fit_partition_approximators(atlas, max_width=1024)
        assert fit.pass_threshold == 1.0 / 16.0
        assert fit.certify_threshold == 1.0 / 32.0
        assert fit.certified_tol <= fit.certify_threshold
        assert fit.achieved_width <= 1024
        assert fit.verify_points >= 4 * 4096

    def test_certified_tol_is_real(self):
        """The reported tol bounds the score error on a fresh dense grid."""
        atlas = build_circle_atlas(4, 0.25)
        fit = fit_partition_approximators(atlas, max_width=1024)
        th = np.linspace(0.0, 2 * np.pi, 12_288, endpoint=False)
        pts = np.stack([np.cos(th), np.sin(th)], axis=1)
        scores = ffn_eval(fit.score_net, pts)
        rho = atlas.partition_values(pts)
        assert np.abs(scores - rho).max() <= fit.certified_tol * 1.05

    def test_under_width_fails_with_best_tol(self):
        atlas = build_circle_atlas(4, 0.25)
        with pytest.raises(CertificationError) as exc:
            fit_partition_approximators(atlas, max_width=2, start_width=2)
        assert exc.value.best_tol > 1.0 / 32.0
        assert exc.value.best_width == 2


class TestRoutingBlock:
    def test_prelayer_broadcasts_state_and_scores(self):
        gadget = build_indicator_gadget(3)
        block = build_routing_block(
            gadget, 1, 0, certified_tol=0.0, nonnegative_state=True
        )
        x = np.array([[0.25], [1.5], [2.75]])
        pre = moe_layer_eval(block.prelayer, x)
        tau = ffn_eval(gadget, x)
        assert np.array_equal(pre, np.concatenate([x, tau], axis=1))

    def test_gate_matrix_reads_scores_exactly(self):
        gadget = build_indicator_gadget(3)
        block = build_routing_block(
            gadget, 1, 0, certified_tol=0.0, nonnegative_state=True
        )
        want = np.concatenate([np.zeros((3, 1)), np.eye(3)], axis=1)
        assert np.array_equal(block.gate_matrix, want)
        rng = np.random.default_rng(66)
        x = rng.uniform(0, 3, size=(100, 1))
        pre = moe_layer_eval(block.prelayer, x)
        assert np.array_equal(pre @ block.gate_matrix.T, ffn_eval(gadget, x))

    def test_prelayer_experts_all_identical(self):
        gadget = build_indicator_gadget(4)
        block = build_routing_block(
            gadget, 2, 0, certified_tol=0.0, nonnegative_state=True
        )
        first = block.prelayer.experts[0]
        assert len(block.prelayer.experts) == 4
        for other in block.prelayer.experts[1:]:
            for a, b in zip(first.layers, other.layers):
                assert np.array_equal(a.weight, b.weight)
                assert np.array_equal(a.bias, b.bias)


@pytest.fixture(scope="module")
def warmup_built():
    return assemble_warmup_moe(fig3_target(), 32)


@pytest.fixture(scope="module")
def shallow_general():
    return assemble_shallow_moe(sin_circle_target(), 32, chart_mode="general", seed=0)


@pytest.fixture(scope="module")
def shallow_linear():
    return assemble_shallow_moe(sin_circle_target(), 32, chart_mode="linear", seed=0)


@pytest.fixture(scope="module")
def deep_built():
    return assemble_deep_moe(sincos_torus_target(), 24, seed=0, verify_counts=(256, 256))


class TestWarmupConstruction:
    def test_report_shape(self, warmup_built):
        r = warmup_built.report
        assert r.construction == "warmup"
        assert r.layer_count == 4  # two factors, one routing block each
        assert r.expert_depth == 2
        assert r.experts_per_block == [3, 3]
        assert r.certified_tols == [0.0, 0.0]
        assert warmup_built.network.depth == 4
        assert r.active_params == active_param_count(warmup_built.network)

    def test_routing_trace(self, warmup_built):
        y, sel = moe_network_eval(
            warmup_built.network, np.array([[0.5, 2.5]]), trace=True
        )
        # selection happens on the odd layers, one factor at a time
        assert sel[1][0, 0] == 0
        assert sel[3][0, 0] == 2

    def test_error_within_expert_fit_budget(self, warmup_built):
        grid = error_grid(fig3_target(), 256, 1e-12)
        rep = end_to_end_error(warmup_built.network, fig3_target(), grid)
        assert rep["sup_error"] <= warmup_built.report.max_expert_fit_error + 1e-9
        assert rep["refinement_ok"]

    def test_audit_clean(self, warmup_built):
        aud = routing_audit(
            warmup_built.network, fig3_target(), audit_grid(fig3_target(), 256, 1e-12)
        )
        assert aud["pass_fraction"] == 1.0
        assert aud["ok"]

    def test_midpoint_value(self, warmup_built):
        y = moe_network_eval(warmup_built.network, np.array([0.5, 0.5]))
        tol = warmup_built.report.max_expert_fit_error + 1e-9
        assert np.abs(y - np.array([0.25, 0.0625])).max() <= tol

    def test_select_experts_ignore_score_coordinates(self, warmup_built):
        layer = warmup_built.network.layers[1]
        rng = np.random.default_rng(7)
        state = rng.uniform(0.0, 3.0, size=(64, 2))
        a = rng.uniform(0, 1, size=(64, 3))
        b = rng.uniform(0, 1, size=(64, 3))
        ya = ffn_eval(layer.experts[1], np.concatenate([state, a], axis=1))
        yb = ffn_eval(layer.experts[1], np.concatenate([state, b], axis=1))
        assert np.array_equal(ya, yb)

    def test_rejects_manifold_targets(self):
        with pytest.raises(ConfigError):
            assemble_warmup_moe(sin_circle_target(), 8)


class TestShallowConstruction:
    def test_general_report_shape(self, shallow_general):
        r = shallow_general.report
        assert r.construction == "shallow_general"
        assert r.layer_count == 2
        assert r.expert_depth == 3
        assert r.experts_per_block == [4]
        assert r.certified_tols[0] <= 1.0 / 32.0

    def test_linear_report_shape(self, shallow_linear):
        r = shallow_linear.report
        assert r.construction == "shallow_linear"
        assert r.layer_count == 2
        assert r.expert_depth == 2

    def test_auto_picks_linear_for_linear_charts(self):
        res = assemble_shallow_moe(sin_circle_target(), 16, chart_mode="auto", seed=0)
        assert res.report.construction == "shallow_linear"

    @pytest.mark.parametrize("mode", ["general", "linear"])
    def test_error_and_audit(self, mode, shallow_general, shallow_linear):
        res = shallow_general if mode == "general" else shallow_linear
        target = sin_circle_target()
        rep = end_to_end_error(res.network, target, error_grid(target, 2048, 0.0))
        assert rep["sup_error"] <= res.report.max_expert_fit_error + 1e-9
        aud = routing_audit(res.network, target, audit_grid(target, 2048, 0.0))
        assert aud["pass_fraction"] == 1.0

    def test_constant_target_is_exact(self):
        atlas = build_circle_atlas(4, 0.25)
        maps = chart_maps_from_global(atlas, lambda p: np.full(p.shape[0], 0.7))
        const = build_manifold_target(atlas, maps, name="const")
        res = assemble_shallow_moe(const, 8, seed=0)
        rep = end_to_end_error(res.network, const, error_grid(const, 1024, 0.0))
        assert rep["sup_error"] == 0.0

    def test_rejects_cube_targets(self):
        with pytest.raises(ConfigError):
            assemble_shallow_moe(fig3_target(), 8)


class TestDeepConstruction:
    def test_report_shape(self, deep_built):
        r = deep_built.report
        assert r.construction == "deep_general"
        assert r.layer_count == 4
        assert r.expert_depth == 3
        assert r.experts_per_block == [4, 4]
        assert all(t <= 1.0 / 32.0 for t in r.certified_tols)

    def test_embed_and_readout_are_padding(self):
        net = assemble_deep_moe(
            sincos_torus_target(), 8, seed=0, verify_counts=(64, 64)
        ).network
        d, out = 4, 2
        assert np.array_equal(
            net.embed.weight, np.vstack([np.eye(d), np.zeros((out, d))])
        )
        assert np.array_equal(net.embed.bias, np.zeros(d + out))
        assert np.array_equal(
            net.readout.weight, np.hstack([np.zeros((out, d)), np.eye(out)])
        )

    def test_error_and_audit(self, deep_built):
        target = sincos_torus_target()
        rep = end_to_end_error(deep_built.network, target, error_grid(target, 96, 0.0))
        assert rep["sup_error"] <= deep_built.report.max_expert_fit_error + 1e-9
        assert rep["refinement_ok"]
        aud = routing_audit(deep_built.network, target, audit_grid(target, 96, 0.0))
        assert aud["pass_fraction"] == 1.0

    def test_raw_coordinates_pass_through_exactly(self, deep_built):
        rng = np.random.default_rng(8)
        target = sincos_torus_target()
        ang = rng.uniform(0, 2 * np.pi, size=(64, 2))
        x = np.concatenate(
            [
                target.factors[0].atlas.param_embed(ang[:, :1]),
                target.factors[1].atlas.param_embed(ang[:, 1:]),
            ],
            axis=1,
        )
        _, _, states = moe_network_eval(
            deep_built.network, x, trace=True, return_states=True
        )
        for s in states:
            assert np.array_equal(s[:, :4], x)

    def test_linear_mode(self):
        res = assemble_deep_moe(
            sincos_torus_target(),
            24,
            chart_mode="linear",
            seed=0,
            verify_counts=(256, 256),
        )
        assert res.report.construction == "deep_linear"
        assert res.report.expert_depth == 2


class TestSerializationOfBuilds:
    def test_warmup_round_trips(self, tmp_path):
        from moe_approx.harness.io import load_network, save_network

        res = assemble_warmup_moe(fig3_target(), 8)
        path = tmp_path / "net.json"
        save_network(path, res.network)
        back = load_network(path)
        rng = np.random.default_rng(9)
        x = rng.uniform(0, 3, size=(100, 2))
        assert np.array_equal(
            moe_network_eval(res.network, x), moe_network_eval(back, x)
        )
