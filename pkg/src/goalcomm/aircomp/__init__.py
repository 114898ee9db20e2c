"""Over-the-air computation: feature pooling and federated aggregation."""

from goalcomm.aircomp.codebook import (
    Codebook,
    ErrorFeedback,
    dequantize,
    quantize_vq,
    sign_codebook,
    train_codebook,
)
from goalcomm.aircomp.feel import (
    GdoacResult,
    feel_round_analog,
    feel_round_obda,
    feel_round_pa,
    gdoac_round,
    majority_sign,
)
from goalcomm.aircomp.pooling import (
    P_GRID,
    FeatureBatch,
    PoolingConfig,
    air_nomographic,
    air_pool,
    aircomp_error,
    max_approx_error,
    p_norm,
    pooled_trials,
    pooled_variance,
)
from goalcomm.aircomp.training import (
    FEEL_SCHEMES,
    FeelCurve,
    FeelScheme,
    LogisticTask,
    centralized_gd,
    train_feel,
)

__all__ = [
    "Codebook",
    "ErrorFeedback",
    "FEEL_SCHEMES",
    "FeatureBatch",
    "FeelCurve",
    "FeelScheme",
    "GdoacResult",
    "LogisticTask",
    "P_GRID",
    "PoolingConfig",
    "air_nomographic",
    "air_pool",
    "aircomp_error",
    "centralized_gd",
    "dequantize",
    "feel_round_analog",
    "feel_round_obda",
    "feel_round_pa",
    "gdoac_round",
    "majority_sign",
    "max_approx_error",
    "p_norm",
    "pooled_trials",
    "pooled_variance",
    "quantize_vq",
    "sign_codebook",
    "train_codebook",
    "train_feel",
]
