"""Constructive mixture-of-experts approximation toolkit.

Build routed networks that reproduce piecewise compositional targets
with certified-exact routing, compare them against dense baselines at
matched active parameter budgets, and audit every claim on dense grids.
"""

__version__ = "0.1.0"

from .approx_fit import (
    ErrorReport,
    GridSpec,
    RateReport,
    estimate_linf,
    fit_dense_baseline,
    fit_expert_1d,
    fit_ls_random_features,
    fit_rate,
)
from .constructor import (
    ConstructionReport,
    ConstructionResult,
    PartitionFit,
    RoutingBlock,
    assemble_deep_moe,
    assemble_shallow_moe,
    assemble_warmup_moe,
    build_expert_shallow,
    build_indicator_gadget,
    build_routing_block,
    fit_partition_approximators,
)
from .moe_core import (
    AffineMap,
    GatingNetwork,
    MoeLayer,
    MoeNetwork,
    active_param_count,
    gate_scores,
    moe_layer_eval,
    moe_network_eval,
)
from .nn_core import (
    FfnNetwork,
    PwlSpec,
    encode_pwl,
    ffn_concat,
    ffn_eval,
    ffn_with_passthrough,
)
from .targets import (
    Atlas,
    Chart,
    PiecewiseTarget,
    Subfunction,
    build_circle_atlas,
    build_manifold_target,
    build_torus_atlas,
    eval_target,
    fig3_target,
    region_index,
    target_from_config,
    validate_overlap_consistency,
)

__all__ = [
    "__version__",
    # nn_core
    "FfnNetwork",
    "PwlSpec",
    "encode_pwl",
    "ffn_concat",
    "ffn_eval",
    "ffn_with_passthrough",
    # moe_core
    "AffineMap",
    "GatingNetwork",
    "MoeLayer",
    "MoeNetwork",
    "active_param_count",
    "gate_scores",
    "moe_layer_eval",
    "moe_network_eval",
    # targets
    "Atlas",
    "Chart",
    "PiecewiseTarget",
    "Subfunction",
    "build_circle_atlas",
    "build_manifold_target",
    "build_torus_atlas",
    "eval_target",
    "fig3_target",
    "region_index",
    "target_from_config",
    "validate_overlap_consistency",
    # constructor
    "ConstructionReport",
    "ConstructionResult",
    "PartitionFit",
    "RoutingBlock",
    "assemble_deep_moe",
    "assemble_shallow_moe",
    "assemble_warmup_moe",
    "build_expert_shallow",
    "build_indicator_gadget",
    "build_routing_block",
    "fit_partition_approximators",
    # approx_fit
    "ErrorReport",
    "GridSpec",
    "RateReport",
    "estimate_linf",
    "fit_dense_baseline",
    "fit_expert_1d",
    "fit_ls_random_features",
    "fit_rate",
]
