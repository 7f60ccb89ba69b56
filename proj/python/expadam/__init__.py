"""Adam-family optimizers (Adam, AMSGrad, diffGrad, DGrad, Cos, Exp, ExpLR),
ensemble fusion rules and imbalanced-class metrics."""

from ._core import (
    AvgMode,
    NormScope,
    Optimizer,
    OptimizerConfig,
    OptimizerError,
    ShapeError,
    Variant,
    accuracy,
    confusion,
    cyclic_rate,
    exp_xi,
    explr_xi,
    fuse_average,
    fuse_weighted_sum,
    run_ensemble,
    synth_blobs,
    weighted_f_score,
    weighted_g_mean,
)

__all__ = [
    "AvgMode",
    "NormScope",
    "Optimizer",
    "OptimizerConfig",
    "OptimizerError",
    "ShapeError",
    "Variant",
    "accuracy",
    "confusion",
    "cyclic_rate",
    "exp_xi",
    "explr_xi",
    "fuse_average",
    "fuse_weighted_sum",
    "run_ensemble",
    "synth_blobs",
    "weighted_f_score",
    "weighted_g_mean",
]
