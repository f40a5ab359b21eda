"""Feed-forward building blocks: encoding, combinators, serialization."""

import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from moe_approx.errors import DimensionError, NetworkSpecError
from moe_approx.nn_core import (
    AffineLayer,
    FfnNetwork,
    PwlSpec,
    encode_pwl,
    ffn_affine_precompose,
    ffn_compose,
    ffn_concat,
    ffn_embed_inputs,
    ffn_eval,
    ffn_from_dict,
    ffn_param_count,
    ffn_to_dict,
    ffn_with_passthrough,
)


def random_ffn(rng, in_dim, hidden, out_dim):
    return FfnNetwork(
        layers=(
            AffineLayer(
                weight=rng.normal(size=(hidden, in_dim)),
                bias=rng.normal(size=hidden),
                relu=True,
            ),
            AffineLayer(
                weight=rng.normal(size=(out_dim, hidden)),
                bias=rng.normal(size=out_dim),
                relu=False,
            ),
        )
    )


def random_pwl(rng, n_knots, lo=-2.0, hi=2.0):
    knots = np.sort(rng.uniform(lo, hi, size=n_knots))
    while np.any(np.diff(knots) < 1e-6):
        knots = np.sort(rng.uniform(lo, hi, size=n_knots))
    values = rng.normal(size=n_knots)
    return PwlSpec(knots=knots, values=values)


def _supported_tent(i):
    """Unit tent on [i, i+1], pinned to zero across the rest of [0, 3]."""
    knots = [float(i), i + 0.5, i + 1.0]
    values = [0.0, 0.5, 0.0]
    if i > 0:
        knots, values = [0.0] + knots, [0.0] + values
    if i < 2:
        knots, values = knots + [3.0], values + [0.0]
    return PwlSpec(knots=np.array(knots), values=np.array(values))


class TestAffineEval:
    def test_identity_single_layer(self):
        net = FfnNetwork(
            layers=(AffineLayer(weight=np.eye(3), bias=np.zeros(3), relu=False),)
        )
        x = np.array([[0.3, -1.2, 4.0], [0.0, 0.5, -0.5]])
        assert np.array_equal(ffn_eval(net, x), x)

    def test_single_point_shape(self):
        net = FfnNetwork(
            layers=(AffineLayer(weight=np.eye(2), bias=np.ones(2), relu=False),)
        )
        y = ffn_eval(net, np.array([1.0, 2.0]))
        assert y.shape == (2,)
        assert np.array_equal(y, [2.0, 3.0])

    def test_relu_hidden_layer(self):
        rng = np.random.default_rng(7)
        net = random_ffn(rng, 2, 5, 3)
        x = rng.normal(size=(20, 2))
        h = np.maximum(x @ net.layers[0].weight.T + net.layers[0].bias, 0.0)
        expected = h @ net.layers[1].weight.T + net.layers[1].bias
        assert_allclose(ffn_eval(net, x), expected, rtol=0, atol=0)

    def test_final_layer_must_be_linear(self):
        with pytest.raises(NetworkSpecError, match="final layer"):
            FfnNetwork(
                layers=(AffineLayer(weight=np.eye(2), bias=np.zeros(2), relu=True),)
            )

    def test_layer_chaining_validated(self):
        with pytest.raises(NetworkSpecError, match="chain"):
            FfnNetwork(
                layers=(
                    AffineLayer(weight=np.eye(2), bias=np.zeros(2), relu=True),
                    AffineLayer(weight=np.ones((1, 3)), bias=np.zeros(1), relu=False),
                )
            )

    def test_wrong_input_dim_rejected(self):
        net = FfnNetwork(
            layers=(AffineLayer(weight=np.eye(2), bias=np.zeros(2), relu=False),)
        )
        with pytest.raises(DimensionError):
            ffn_eval(net, np.zeros((4, 3)))


class TestPwlEncoding:
    """Hinge encodings must reproduce exact piecewise-linear interpolation."""

    def test_identity_segment(self):
        net = encode_pwl(PwlSpec(knots=np.array([0.0, 1.0]), values=np.array([0.0, 1.0])))
        x = np.linspace(0.0, 1.0, 101)
        assert_allclose(ffn_eval(net, x.reshape(-1, 1))[:, 0], x, rtol=0, atol=1e-15)
        # linear extension beyond the last knot
        assert_allclose(ffn_eval(net, np.array([[1.7]]))[0, 0], 1.7, rtol=0, atol=1e-15)

    def test_tent_midpoints(self):
        # exact interpolation of the tent {(0,0),(1/2,1/2),(1,0)}: both
        # midpoints of the two segments sit at height 1/4
        spec = PwlSpec(
            knots=np.array([0.0, 0.5, 1.0]), values=np.array([0.0, 0.5, 0.0])
        )
        net = encode_pwl(spec)
        y = ffn_eval(net, np.array([[0.25], [0.75]]))[:, 0]
        assert_allclose(y, [0.25, 0.25], rtol=0, atol=1e-15)

    def test_knot_reproduction(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            spec = random_pwl(rng, int(rng.integers(2, 40)))
            net = encode_pwl(spec)
            y = ffn_eval(net, spec.knots.reshape(-1, 1))[:, 0]
            scale = max(1.0, np.abs(spec.values).max())
            assert np.abs(y - spec.values).max() <= 1e-12 * scale

    def test_matches_interp_oracle(self):
        rng = np.random.default_rng(12)
        for _ in range(25):
            spec = random_pwl(rng, int(rng.integers(3, 30)))
            net = encode_pwl(spec)
            x = rng.uniform(spec.knots[0], spec.knots[-1], size=400)
            got = ffn_eval(net, x.reshape(-1, 1))[:, 0]
            want = np.interp(x, spec.knots, spec.values)
            assert_allclose(got, want, rtol=0, atol=1e-11)

    def test_dense_interpolant_of_cubic(self):
        # 257 interpolation knots of z(1-z) on [0,1]; midpoint value is 1/4
        f = lambda z: z * (1.0 - z)
        knots = np.linspace(0.0, 1.0, 257)
        net = encode_pwl(PwlSpec(knots=knots, values=f(knots)))
        y = ffn_eval(net, np.array([[0.5]]))[0, 0]
        assert abs(y - 0.25) <= 1e-12

    def test_interior_linearity(self):
        """Second differences vanish on equispaced interior samples."""
        rng = np.random.default_rng(13)
        spec = random_pwl(rng, 9)
        net = encode_pwl(spec)
        scale = max(1.0, np.abs(spec.values).max())
        for a, b in zip(spec.knots[:-1], spec.knots[1:]):
            zs = np.linspace(a, b, 9)[1:-1]
            y = ffn_eval(net, zs.reshape(-1, 1))[:, 0]
            assert np.abs(np.diff(y, 2)).max() <= 1e-12 * scale

    def test_width_is_knot_count(self):
        spec = PwlSpec(knots=np.linspace(0, 1, 12), values=np.zeros(12))
        net = encode_pwl(spec)
        assert len(net.layers) == 2
        assert net.layers[0].weight.shape == (12, 1)

    def test_too_few_knots(self):
        with pytest.raises(NetworkSpecError, match="at least 2"):
            PwlSpec(knots=np.array([0.0]), values=np.array([1.0]))

    def test_non_increasing_knots(self):
        with pytest.raises(NetworkSpecError, match="strictly increasing"):
            PwlSpec(knots=np.array([0.0, 0.0, 1.0]), values=np.zeros(3))


class TestConcat:
    def test_identity_pair(self):
        seg = PwlSpec(knots=np.array([0.0, 1.0]), values=np.array([0.0, 1.0]))
        net = ffn_concat([encode_pwl(seg), encode_pwl(seg)])
        y = ffn_eval(net, np.array([[0.4]]))
        assert_allclose(y, [[0.4, 0.4]], rtol=0, atol=1e-15)

    def test_three_tents_make_gadget_row(self):
        # three unit tents side by side (guard knots pin each to zero over
        # the rest of [0,3]); only the middle one is active at 1.5
        tents = [encode_pwl(_supported_tent(i)) for i in range(3)]
        net = ffn_concat(tents)
        y = ffn_eval(net, np.array([[1.5]]))[0]
        assert_allclose(y, [0.0, 0.5, 0.0], rtol=0, atol=1e-15)

    def test_block_structure_exact(self):
        """Concat output is bit-identical to stacking individual outputs."""
        rng = np.random.default_rng(21)
        for _ in range(10):
            nets = [
                random_ffn(rng, 3, int(rng.integers(2, 6)), int(rng.integers(1, 4)))
                for _ in range(3)
            ]
            cat = ffn_concat(nets)
            x = rng.normal(size=(8, 3))
            want = np.concatenate([ffn_eval(n, x) for n in nets], axis=1)
            got = ffn_eval(cat, x)
            # dense blocks may re-associate dot products; allow ulp slack
            assert np.abs(got - want).max() <= 4 * np.spacing(np.abs(want).max())

    def test_depth_mismatch_rejected(self):
        rng = np.random.default_rng(22)
        a = random_ffn(rng, 2, 3, 1)
        deep = FfnNetwork(
            layers=a.layers[:1]
            + (AffineLayer(weight=np.eye(3), bias=np.zeros(3), relu=True),)
            + a.layers[1:]
        )
        with pytest.raises(NetworkSpecError):
            ffn_concat([a, deep])


class TestPassthrough:
    def test_nonnegative_prefix(self):
        # prepend the input itself ahead of a 3-tent bank; at 1.5 only the
        # middle tent fires
        tents = ffn_concat([encode_pwl(_supported_tent(i)) for i in range(3)])
        net = ffn_with_passthrough(tents, 1, nonnegative=True)
        y = ffn_eval(net, np.array([[1.5]]))[0]
        assert_allclose(y, [1.5, 0.0, 0.5, 0.0], rtol=0, atol=1e-15)

    def test_signed_prefix(self):
        zero_map = FfnNetwork(
            layers=(
                AffineLayer(weight=np.zeros((2, 2)), bias=np.zeros(2), relu=True),
                AffineLayer(weight=np.zeros((1, 2)), bias=np.zeros(1), relu=False),
            )
        )
        net = ffn_with_passthrough(zero_map, 2, nonnegative=False)
        y = ffn_eval(net, np.array([[-0.2, 0.9]]))[0]
        assert np.array_equal(y, [-0.2, 0.9, 0.0])

    def test_nonnegative_carry_bit_exact(self):
        rng = np.random.default_rng(31)
        inner = random_ffn(rng, 2, 4, 2)
        net = ffn_with_passthrough(inner, 2, nonnegative=True)
        x = rng.uniform(0.0, 5.0, size=(200, 2))
        y = ffn_eval(net, x)
        assert np.array_equal(y[:, :2], x)
        assert np.array_equal(y[:, 2:], ffn_eval(inner, x))

    def test_signed_carry_bit_exact(self):
        # the split into positive and negative parts reassembles exactly,
        # not merely to within an ulp
        rng = np.random.default_rng(32)
        inner = random_ffn(rng, 3, 4, 1)
        net = ffn_with_passthrough(inner, 3, nonnegative=False)
        x = rng.normal(size=(200, 3)) * 10.0
        y = ffn_eval(net, x)
        assert np.array_equal(y[:, :3], x)

    def test_depth_preserved(self):
        rng = np.random.default_rng(33)
        inner = random_ffn(rng, 2, 4, 1)
        net = ffn_with_passthrough(inner, 2)
        assert len(net.layers) == len(inner.layers)


class TestComposition:
    def test_compose_matches_sequential(self):
        rng = np.random.default_rng(41)
        for _ in range(10):
            inner = random_ffn(rng, 2, 5, 3)
            outer = random_ffn(rng, 3, 4, 2)
            comp = ffn_compose(outer, inner)
            x = rng.normal(size=(30, 2))
            want = ffn_eval(outer, ffn_eval(inner, x))
            scale = max(1.0, np.abs(want).max())
            assert np.abs(ffn_eval(comp, x) - want).max() <= 1e-12 * scale

    def test_compose_depth(self):
        rng = np.random.default_rng(42)
        inner = random_ffn(rng, 2, 5, 3)
        outer = random_ffn(rng, 3, 4, 2)
        # the seam merges inner's output affine into outer's first layer
        assert len(ffn_compose(outer, inner).layers) == 3

    def test_affine_precompose(self):
        rng = np.random.default_rng(43)
        net = random_ffn(rng, 3, 6, 2)
        a = rng.normal(size=(3, 4))
        c = rng.normal(size=3)
        pre = ffn_affine_precompose(net, a, c)
        x = rng.normal(size=(25, 4))
        want = ffn_eval(net, x @ a.T + c)
        scale = max(1.0, np.abs(want).max())
        assert np.abs(ffn_eval(pre, x) - want).max() <= 1e-12 * scale

    def test_embed_inputs_bit_exact(self):
        """Padding coordinates read through zero columns change nothing."""
        rng = np.random.default_rng(44)
        net = random_ffn(rng, 2, 5, 2)
        emb = ffn_embed_inputs(net, 6, 3)
        x = rng.normal(size=(40, 2))
        pad = rng.normal(size=(40, 6))
        pad[:, 3:5] = x
        assert np.array_equal(ffn_eval(emb, pad), ffn_eval(net, x))

    def test_embed_offset_validated(self):
        rng = np.random.default_rng(45)
        net = random_ffn(rng, 2, 3, 1)
        with pytest.raises(DimensionError):
            ffn_embed_inputs(net, 3, 2)


class TestParamCount:
    def test_matches_manual_sum(self):
        rng = np.random.default_rng(51)
        net = random_ffn(rng, 3, 7, 2)
        want = sum(l.weight.size + l.bias.size for l in net.layers)
        assert ffn_param_count(net) == want == 7 * 3 + 7 + 2 * 7 + 2

    def test_pwl_count(self):
        net = encode_pwl(PwlSpec(knots=np.linspace(0, 1, 9), values=np.zeros(9)))
        # 9 hinge rows (weight+bias) plus the 1-d output row and bias
        assert ffn_param_count(net) == 9 * 2 + 9 + 1


class TestSerialization:
    def test_round_trip_bit_exact(self):
        rng = np.random.default_rng(61)
        for _ in range(8):
            net = random_ffn(rng, int(rng.integers(1, 4)), int(rng.integers(2, 6)), 2)
            blob = json.dumps(ffn_to_dict(net))
            back = ffn_from_dict(json.loads(blob))
            for a, b in zip(net.layers, back.layers):
                assert np.array_equal(a.weight, b.weight)
                assert np.array_equal(a.bias, b.bias)
                assert a.relu == b.relu
            x = rng.normal(size=(20, net.layers[0].weight.shape[1]))
            assert np.array_equal(ffn_eval(net, x), ffn_eval(back, x))

    def test_awkward_values_survive(self):
        w = np.array([[1e-308, -0.1], [np.pi, 1e17]])
        net = FfnNetwork(
            layers=(AffineLayer(weight=w, bias=np.array([1 / 3, -2e-45]), relu=False),)
        )
        back = ffn_from_dict(json.loads(json.dumps(ffn_to_dict(net))))
        assert np.array_equal(back.layers[0].weight, w)
        assert np.array_equal(back.layers[0].bias, net.layers[0].bias)
