"""Mixture-of-experts layers with hard top-k routing.

A layer holds a gating network and a bank of expert networks.  Routing
selects the k highest gate scores (ties broken toward the smallest
index), weights the selected experts by a softmax over their scores, and
evaluates only the selected experts.  With k=1 the layer output is the
selected expert's output bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import AccountingError, DimensionError, NetworkSpecError
from .nn_core import FfnNetwork, ffn_eval, ffn_from_dict, ffn_param_count, ffn_to_dict

__all__ = [
    "GatingNetwork",
    "AffineMap",
    "MoeLayer",
    "MoeNetwork",
    "gate_scores",
    "select_top_k",
    "softmax_weights",
    "moe_layer_eval",
    "moe_network_eval",
    "active_param_count",
    "moe_network_to_dict",
    "moe_network_from_dict",
]


@dataclass(frozen=True)
class GatingNetwork:
    """Router scores: a bare linear map (the usual case) or a small MLP."""

    mode: str
    matrix: Optional[np.ndarray] = None
    network: Optional[FfnNetwork] = None

    def __post_init__(self):
        if self.mode == "linear":
            if self.matrix is None:
                raise NetworkSpecError("linear gating needs a matrix")
            m = np.array(self.matrix, dtype=np.float64)
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
            if m.ndim != 2:
                raise DimensionError("gating matrix must be 2-D (experts x inputs)")
        elif self.mode == "mlp":
            if self.network is None:
                raise NetworkSpecError("mlp gating needs a network")
        else:
            raise NetworkSpecError(f"unknown gating mode {self.mode!r}")

    @property
    def expert_count(self) -> int:
        if self.mode == "linear":
            return self.matrix.shape[0]
        return self.network.output_dim

    @property
    def input_dim(self) -> int:
        if self.mode == "linear":
            return self.matrix.shape[1]
        return self.network.input_dim

    def param_count(self) -> int:
        if self.mode == "linear":
            return int(self.matrix.size)
        return ffn_param_count(self.network)


@dataclass(frozen=True)
class AffineMap:
    """A plain affine map, used for embeddings and readouts."""

    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = np.array(self.weight, dtype=np.float64)
        b = np.array(self.bias, dtype=np.float64)
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)
        if w.ndim != 2 or b.shape != (w.shape[0],):
            raise DimensionError("affine map needs a matrix and a matching bias")

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.in_dim:
            raise DimensionError("affine map input has the wrong length")
        return x @ self.weight.T + self.bias

    def param_count(self) -> int:
        return int(self.weight.size + self.bias.size)


def gate_scores(gating: GatingNetwork, x) -> np.ndarray:
    """Raw router scores for a point or batch."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != gating.input_dim:
        raise DimensionError(
            f"input has {x.shape[-1]} coordinates, gating expects {gating.input_dim}"
        )
    if gating.mode == "linear":
        return x @ gating.matrix.T
    return ffn_eval(gating.network, x)


def select_top_k(scores: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest scores, ties broken toward smaller indices.

    Works on a single score vector (returns shape (k,)) or a batch
    (returns shape (n, k)).  The stable sort on negated scores guarantees
    that among equal scores the smallest index wins.
    """
    scores = np.asarray(scores)
    if not 1 <= k <= scores.shape[-1]:
        raise DimensionError(f"k={k} must lie in [1, {scores.shape[-1]}]")
    order = np.argsort(-scores, axis=-1, kind="stable")
    return order[..., :k]


def softmax_weights(selected_scores: np.ndarray) -> np.ndarray:
    """Softmax over the selected scores only, with max subtraction."""
    s = np.asarray(selected_scores, dtype=np.float64)
    shifted = s - np.max(s, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


@dataclass(eq=False)
class MoeLayer:
    """One mixture-of-experts layer.

    ``experts`` all share input and output dimensions.  ``eval_counts``
    tracks how many points each expert has been evaluated on; it is the
    only mutable state (reset with :meth:`reset_eval_counts`, or set
    ``count_evals=False`` for concurrent sweeps).
    """

    gating: GatingNetwork
    experts: tuple[FfnNetwork, ...]
    k: int = 1
    count_evals: bool = True
    eval_counts: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.experts = tuple(self.experts)
        if not self.experts:
            raise NetworkSpecError("a layer needs at least one expert")
        d_in = self.experts[0].input_dim
        d_out = self.experts[0].output_dim
        for e in self.experts[1:]:
            if e.input_dim != d_in or e.output_dim != d_out:
                raise NetworkSpecError("experts must share input and output dims")
        if self.gating.input_dim != d_in:
            raise NetworkSpecError(
                f"gating reads {self.gating.input_dim} inputs, experts read {d_in}"
            )
        if self.gating.expert_count != len(self.experts):
            raise NetworkSpecError(
                f"gating emits {self.gating.expert_count} scores for "
                f"{len(self.experts)} experts"
            )
        if not 1 <= self.k <= len(self.experts):
            raise NetworkSpecError(f"k={self.k} out of range")
        self.eval_counts = np.zeros(len(self.experts), dtype=np.int64)

    @property
    def expert_count(self) -> int:
        return len(self.experts)

    @property
    def input_dim(self) -> int:
        return self.experts[0].input_dim

    @property
    def output_dim(self) -> int:
        return self.experts[0].output_dim

    def reset_eval_counts(self) -> None:
        self.eval_counts[:] = 0


def _layer_eval(layer: MoeLayer, x: np.ndarray):
    """Evaluate a layer; returns (output, selected index array)."""
    scores = gate_scores(layer.gating, x)
    selected = select_top_k(scores, layer.k)

    if x.ndim == 1:
        outs = np.stack([ffn_eval(layer.experts[i], x) for i in selected])
        if layer.count_evals:
            np.add.at(layer.eval_counts, selected, 1)
        if layer.k == 1:
            return outs[0], selected
        weights = softmax_weights(scores[selected])
        return weights @ outs, selected

    n = x.shape[0]
    out = np.empty((n, layer.output_dim))
    if layer.k == 1:
        sel = selected[:, 0]
        for i in np.unique(sel):
            mask = sel == i
            out[mask] = ffn_eval(layer.experts[i], x[mask])
            if layer.count_evals:
                layer.eval_counts[i] += int(mask.sum())
        return out, selected

    out[:] = 0.0
    weights = softmax_weights(np.take_along_axis(scores, selected, axis=1))
    for slot in range(layer.k):
        sel = selected[:, slot]
        for i in np.unique(sel):
            mask = sel == i
            out[mask] += weights[mask, slot, None] * ffn_eval(
                layer.experts[i], x[mask]
            )
            if layer.count_evals:
                layer.eval_counts[i] += int(mask.sum())
    return out, selected


def moe_layer_eval(layer: MoeLayer, x) -> np.ndarray:
    """Route ``x`` through the layer and combine the selected experts.

    Only selected experts are evaluated.  With ``k=1`` the softmax weight
    is exactly 1 and the output is the chosen expert's output unchanged.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != layer.input_dim:
        raise DimensionError(
            f"input has {x.shape[-1]} coordinates, layer expects {layer.input_dim}"
        )
    out, _ = _layer_eval(layer, x)
    return out


@dataclass(eq=False)
class MoeNetwork:
    """A stack of MoE layers with optional affine embedding and readout."""

    layers: tuple[MoeLayer, ...]
    embed: Optional[AffineMap] = None
    readout: Optional[AffineMap] = None

    def __post_init__(self):
        self.layers = tuple(self.layers)
        if not self.layers:
            raise NetworkSpecError("a network needs at least one layer")
        for prev, cur in zip(self.layers, self.layers[1:]):
            if cur.input_dim != prev.output_dim:
                raise NetworkSpecError(
                    f"layer input dim {cur.input_dim} does not chain with "
                    f"previous output dim {prev.output_dim}"
                )
        if self.embed is not None and self.embed.out_dim != self.layers[0].input_dim:
            raise NetworkSpecError("embedding output does not match first layer")
        if (
            self.readout is not None
            and self.readout.in_dim != self.layers[-1].output_dim
        ):
            raise NetworkSpecError("readout input does not match last layer")

    @property
    def input_dim(self) -> int:
        return self.embed.in_dim if self.embed is not None else self.layers[0].input_dim

    @property
    def output_dim(self) -> int:
        return (
            self.readout.out_dim
            if self.readout is not None
            else self.layers[-1].output_dim
        )

    @property
    def depth(self) -> int:
        return len(self.layers)

    def reset_eval_counts(self) -> None:
        for layer in self.layers:
            layer.reset_eval_counts()


def moe_network_eval(
    net: MoeNetwork, x, *, trace: bool = False, return_states: bool = False
):
    """Evaluate the full network.

    Returns the output vector, or ``(output, selections)`` with
    ``trace=True`` where ``selections`` holds one selected-index array
    per layer (each of length k, so k=1 gives exactly one index per
    layer).  ``return_states=True`` additionally appends the list of
    per-layer output states (after the embedding, after each layer).
    """
    h = np.asarray(x, dtype=np.float64)
    if h.shape[-1] != net.input_dim:
        raise DimensionError(
            f"input has {h.shape[-1]} coordinates, network expects {net.input_dim}"
        )
    if net.embed is not None:
        h = net.embed(h)
    selections = []
    states = []
    for layer in net.layers:
        h, sel = _layer_eval(layer, h)
        selections.append(sel)
        if return_states:
            states.append(h)
    if net.readout is not None:
        h = net.readout(h)
    if return_states:
        return h, selections, states
    if trace:
        return h, selections
    return h


def active_param_count(net: MoeNetwork) -> int:
    """Parameters touched on a single forward pass.

    Embedding and readout count in full; each layer contributes its
    gating parameters plus k times the size of one expert.  Requires all
    experts within a layer to have equal parameter counts.
    """
    total = 0
    if net.embed is not None:
        total += net.embed.param_count()
    if net.readout is not None:
        total += net.readout.param_count()
    for idx, layer in enumerate(net.layers):
        sizes = {ffn_param_count(e) for e in layer.experts}
        if len(sizes) > 1:
            raise AccountingError(
                f"layer {idx} has experts of unequal sizes {sorted(sizes)}; "
                "active parameter count is ill-defined"
            )
        total += layer.gating.param_count() + layer.k * sizes.pop()
    return total


def _gating_to_dict(g: GatingNetwork) -> dict:
    if g.mode == "linear":
        return {"mode": "linear", "matrix": g.matrix.tolist()}
    return {"mode": "mlp", "network": ffn_to_dict(g.network)}


def _gating_from_dict(data: dict) -> GatingNetwork:
    if data["mode"] == "linear":
        return GatingNetwork(mode="linear", matrix=np.array(data["matrix"]))
    return GatingNetwork(mode="mlp", network=ffn_from_dict(data["network"]))


def _affine_to_dict(a: Optional[AffineMap]):
    if a is None:
        return None
    return {"weight": a.weight.tolist(), "bias": a.bias.tolist()}


def _affine_from_dict(data) -> Optional[AffineMap]:
    if data is None:
        return None
    return AffineMap(np.array(data["weight"]), np.array(data["bias"]))


def moe_network_to_dict(net: MoeNetwork) -> dict:
    return {
        "embed": _affine_to_dict(net.embed),
        "readout": _affine_to_dict(net.readout),
        "layers": [
            {
                "K": layer.k,
                "gating": _gating_to_dict(layer.gating),
                "experts": [ffn_to_dict(e) for e in layer.experts],
            }
            for layer in net.layers
        ],
    }


def moe_network_from_dict(data: dict) -> MoeNetwork:
    try:
        layers = tuple(
            MoeLayer(
                gating=_gating_from_dict(l["gating"]),
                experts=tuple(ffn_from_dict(e) for e in l["experts"]),
                k=int(l["K"]),
            )
            for l in data["layers"]
        )
        return MoeNetwork(
            layers=layers,
            embed=_affine_from_dict(data.get("embed")),
            readout=_affine_from_dict(data.get("readout")),
        )
    except (KeyError, TypeError) as exc:
        raise NetworkSpecError(f"malformed network description: {exc}") from exc
