"""Dense ReLU feed-forward networks as explicit affine-map sequences.

This module is deliberately torch-free: networks are tuples of
(weight, bias) pairs evaluated with numpy, so routing and pass-through
claims can be checked bit-for-bit.  Hidden layers apply ReLU, the final
layer is linear.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, NetworkSpecError

__all__ = [
    "AffineLayer",
    "FfnNetwork",
    "PwlSpec",
    "ffn_eval",
    "encode_pwl",
    "ffn_concat",
    "ffn_with_passthrough",
    "ffn_compose",
    "ffn_affine_precompose",
    "ffn_embed_inputs",
    "ffn_param_count",
    "ffn_to_dict",
    "ffn_from_dict",
]


def _as_readonly(a, dtype=np.float64):
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class AffineLayer:
    """One affine map ``y = W x + b``, optionally followed by ReLU."""

    weight: np.ndarray
    bias: np.ndarray
    relu: bool

    def __post_init__(self):
        object.__setattr__(self, "weight", _as_readonly(self.weight))
        object.__setattr__(self, "bias", _as_readonly(self.bias))
        if self.weight.ndim != 2:
            raise DimensionError("layer weight must be a 2-D matrix")
        if self.bias.ndim != 1 or self.bias.shape[0] != self.weight.shape[0]:
            raise DimensionError(
                f"bias shape {self.bias.shape} does not match weight rows "
                f"{self.weight.shape[0]}"
            )

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]


@dataclass(frozen=True)
class FfnNetwork:
    """A feed-forward ReLU network given by explicit affine layers.

    All layers except the last must have ``relu=True``; the last must be
    linear.  ``width`` is the maximum hidden dimension (0 if the network
    is a single affine map).
    """

    layers: tuple[AffineLayer, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if not layers:
            raise NetworkSpecError("network needs at least one affine layer")
        for prev, cur in zip(layers, layers[1:]):
            if cur.in_dim != prev.out_dim:
                raise NetworkSpecError(
                    f"layer input dim {cur.in_dim} does not chain with "
                    f"previous output dim {prev.out_dim}"
                )
        for layer in layers[:-1]:
            if not layer.relu:
                raise NetworkSpecError("hidden layers must apply ReLU")
        if layers[-1].relu:
            raise NetworkSpecError("final layer must be linear (relu=False)")

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def depth(self) -> int:
        """Number of affine layers."""
        return len(self.layers)

    @property
    def hidden_widths(self) -> tuple[int, ...]:
        return tuple(layer.out_dim for layer in self.layers[:-1])

    @property
    def width(self) -> int:
        return max(self.hidden_widths, default=0)

    def __call__(self, x):
        return ffn_eval(self, x)


def ffn_eval(net: FfnNetwork, x) -> np.ndarray:
    """Evaluate ``net`` at ``x``.

    ``x`` may be a single point of shape (input_dim,) or a batch of shape
    (n, input_dim); the result has the matching leading shape.
    """
    h = np.asarray(x, dtype=np.float64)
    if h.shape[-1] != net.input_dim:
        raise DimensionError(
            f"input has {h.shape[-1]} coordinates, network expects {net.input_dim}"
        )
    for layer in net.layers:
        h = h @ layer.weight.T + layer.bias
        if layer.relu:
            h = np.maximum(h, 0.0)
    return h


@dataclass(frozen=True)
class PwlSpec:
    """A continuous piecewise-linear function on a 1-d interval.

    ``knots`` must be strictly increasing; ``values`` are the function
    values at the knots.  Between adjacent knots the function is the
    chord; outside the knot range it continues with the first/last
    segment slope.
    """

    knots: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "knots", _as_readonly(self.knots))
        object.__setattr__(self, "values", _as_readonly(self.values))
        if self.knots.ndim != 1 or self.values.ndim != 1:
            raise NetworkSpecError("knots and values must be 1-d sequences")
        if self.knots.shape != self.values.shape:
            raise NetworkSpecError("knots and values must have equal length")
        if self.knots.size < 2:
            raise NetworkSpecError("need at least 2 knots")
        if not np.all(np.diff(self.knots) > 0):
            raise NetworkSpecError("knots must be strictly increasing")


def encode_pwl(spec: PwlSpec) -> FfnNetwork:
    """Encode a piecewise-linear interpolant as a width-n two-layer network.

    One hidden ReLU neuron per knot: hinges ``ReLU(x - t_k)`` for every
    knot but the last, weighted by successive slope differences, plus one
    reversed hinge ``ReLU(t_0 - x)`` that supplies the left linear
    extension.  The encoding reproduces the interpolant exactly on the
    knot range and extends the first/last segment linearly outside it.
    """
    t = spec.knots
    v = spec.values
    n = t.size
    slopes = np.diff(v) / np.diff(t)

    w1 = np.ones((n, 1))
    w1[-1, 0] = -1.0
    b1 = np.empty(n)
    b1[: n - 1] = -t[: n - 1]
    b1[-1] = t[0]

    coeff = np.empty(n)
    coeff[0] = slopes[0]
    coeff[1 : n - 1] = np.diff(slopes)
    coeff[-1] = -slopes[0]

    return FfnNetwork(
        layers=(
            AffineLayer(w1, b1, relu=True),
            AffineLayer(coeff.reshape(1, n), np.array([v[0]]), relu=False),
        )
    )


def ffn_concat(nets: Sequence[FfnNetwork]) -> FfnNetwork:
    """Stack networks side by side over a shared input.

    All networks must have the same input dimension and depth.  The
    result reads the common input once and outputs the concatenation of
    the individual outputs; hidden layers are block-diagonal.
    """
    nets = list(nets)
    if not nets:
        raise NetworkSpecError("need at least one network to concatenate")
    d_in = nets[0].input_dim
    depth = nets[0].depth
    for net in nets[1:]:
        if net.input_dim != d_in:
            raise NetworkSpecError("all networks must share the input dimension")
        if net.depth != depth:
            raise NetworkSpecError("all networks must share the depth")

    layers = []
    for t in range(depth):
        blocks = [net.layers[t] for net in nets]
        rows = sum(b.out_dim for b in blocks)
        bias = np.concatenate([b.bias for b in blocks])
        if t == 0:
            weight = np.vstack([b.weight for b in blocks])
        else:
            cols = sum(net.layers[t - 1].out_dim for net in nets)
            weight = np.zeros((rows, cols))
            r = c = 0
            for net in nets:
                blk = net.layers[t]
                weight[r : r + blk.out_dim, c : c + blk.in_dim] = blk.weight
                r += blk.out_dim
                c += blk.in_dim
        layers.append(AffineLayer(weight, bias, relu=(t < depth - 1)))
    return FfnNetwork(layers=tuple(layers))


def _carry_first_rows(dims: int, input_dim: int, nonnegative: bool) -> np.ndarray:
    """First-layer rows that load input coordinates into carry neurons."""
    if nonnegative:
        rows = np.zeros((dims, input_dim))
        rows[np.arange(dims), np.arange(dims)] = 1.0
    else:
        rows = np.zeros((2 * dims, input_dim))
        rows[2 * np.arange(dims), np.arange(dims)] = 1.0
        rows[2 * np.arange(dims) + 1, np.arange(dims)] = -1.0
    return rows


def _carry_extract(dims: int, nonnegative: bool) -> np.ndarray:
    """Rows that recover the carried coordinates from carry neurons."""
    if nonnegative:
        return np.eye(dims)
    out = np.zeros((dims, 2 * dims))
    out[np.arange(dims), 2 * np.arange(dims)] = 1.0
    out[np.arange(dims), 2 * np.arange(dims) + 1] = -1.0
    return out


def ffn_with_passthrough(
    net: FfnNetwork, passthrough_dims: int, *, nonnegative: bool = False
) -> FfnNetwork:
    """Wrap ``net`` so the output becomes ``(x[:passthrough_dims], net(x))``.

    The leading input coordinates are carried through every hidden layer
    by dedicated identity neurons: one ReLU neuron per coordinate when
    the inputs are promised nonnegative, otherwise a (ReLU(x), ReLU(-x))
    pair recombined at the end.  Both variants reproduce the coordinates
    exactly (the recombination p - n is exact in floating point).
    """
    p = int(passthrough_dims)
    if not 0 <= p <= net.input_dim:
        raise DimensionError(
            f"passthrough_dims {p} must lie in [0, {net.input_dim}]"
        )
    if p == 0:
        return net
    carry = p if nonnegative else 2 * p
    depth = net.depth

    if depth == 1:
        only = net.layers[0]
        weight = np.zeros((p + only.out_dim, net.input_dim))
        weight[:p, :p] = np.eye(p)
        weight[p:] = only.weight
        bias = np.concatenate([np.zeros(p), only.bias])
        return FfnNetwork(layers=(AffineLayer(weight, bias, relu=False),))

    layers = []
    first = net.layers[0]
    w = np.zeros((carry + first.out_dim, net.input_dim))
    w[:carry] = _carry_first_rows(p, net.input_dim, nonnegative)
    w[carry:] = first.weight
    layers.append(
        AffineLayer(w, np.concatenate([np.zeros(carry), first.bias]), relu=True)
    )

    for t in range(1, depth - 1):
        blk = net.layers[t]
        w = np.zeros((carry + blk.out_dim, carry + blk.in_dim))
        w[:carry, :carry] = np.eye(carry)
        w[carry:, carry:] = blk.weight
        layers.append(
            AffineLayer(w, np.concatenate([np.zeros(carry), blk.bias]), relu=True)
        )

    last = net.layers[-1]
    w = np.zeros((p + last.out_dim, carry + last.in_dim))
    w[:p, :carry] = _carry_extract(p, nonnegative)
    w[p:, carry:] = last.weight
    layers.append(
        AffineLayer(w, np.concatenate([np.zeros(p), last.bias]), relu=False)
    )
    return FfnNetwork(layers=tuple(layers))


def ffn_compose(outer: FfnNetwork, inner: FfnNetwork) -> FfnNetwork:
    """Exact composition ``outer(inner(x))`` as a single network.

    Inner's final linear layer is merged into outer's first affine layer,
    so the composed depth is ``inner.depth + outer.depth - 1``.
    """
    if inner.output_dim != outer.input_dim:
        raise NetworkSpecError(
            f"cannot compose: inner outputs {inner.output_dim}, "
            f"outer expects {outer.input_dim}"
        )
    ilast = inner.layers[-1]
    ofirst = outer.layers[0]
    merged = AffineLayer(
        ofirst.weight @ ilast.weight,
        ofirst.weight @ ilast.bias + ofirst.bias,
        relu=ofirst.relu,
    )
    return FfnNetwork(layers=inner.layers[:-1] + (merged,) + outer.layers[1:])


def ffn_affine_precompose(net: FfnNetwork, a: np.ndarray, c: np.ndarray) -> FfnNetwork:
    """Absorb the affine map ``x -> A x + c`` into the network's first layer."""
    a = np.asarray(a, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != net.input_dim:
        raise DimensionError(
            f"precompose matrix must have {net.input_dim} rows, got {a.shape}"
        )
    if c.shape != (net.input_dim,):
        raise DimensionError("precompose offset has the wrong length")
    first = net.layers[0]
    merged = AffineLayer(
        first.weight @ a, first.weight @ c + first.bias, relu=first.relu
    )
    return FfnNetwork(layers=(merged,) + net.layers[1:])


def ffn_embed_inputs(net: FfnNetwork, total_dim: int, offset: int) -> FfnNetwork:
    """Re-read the network's input from a slice of a wider input vector.

    The returned network takes ``total_dim`` coordinates and applies
    ``net`` to coordinates ``[offset, offset + net.input_dim)``, ignoring
    the rest (their first-layer weights are zero).
    """
    d = net.input_dim
    if offset < 0 or offset + d > total_dim:
        raise DimensionError(
            f"slice [{offset}, {offset + d}) does not fit in {total_dim} inputs"
        )
    first = net.layers[0]
    weight = np.zeros((first.out_dim, total_dim))
    weight[:, offset : offset + d] = first.weight
    return FfnNetwork(
        layers=(AffineLayer(weight, first.bias, relu=first.relu),) + net.layers[1:]
    )


def ffn_param_count(net: FfnNetwork) -> int:
    """Total number of stored weights and biases."""
    return int(sum(l.weight.size + l.bias.size for l in net.layers))


def ffn_to_dict(net: FfnNetwork) -> dict:
    """JSON-ready description: dims plus row-major weight/bias lists."""
    return {
        "input_dim": net.input_dim,
        "output_dim": net.output_dim,
        "layers": [
            {
                "weight": layer.weight.tolist(),
                "bias": layer.bias.tolist(),
                "relu": layer.relu,
            }
            for layer in net.layers
        ],
    }


def ffn_from_dict(data: dict) -> FfnNetwork:
    try:
        layers = tuple(
            AffineLayer(
                np.array(l["weight"], dtype=np.float64),
                np.array(l["bias"], dtype=np.float64),
                bool(l["relu"]),
            )
            for l in data["layers"]
        )
        net = FfnNetwork(layers=layers)
        if net.input_dim != data["input_dim"] or net.output_dim != data["output_dim"]:
            raise NetworkSpecError("declared dims do not match stored layers")
    except (KeyError, TypeError) as exc:
        raise NetworkSpecError(f"malformed network description: {exc}") from exc
    return net
