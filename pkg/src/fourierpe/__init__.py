"""Learnable Fourier-feature positional encodings for multi-dimensional
positions, the baseline encoders they are compared against, the gradient
and optimizer machinery that makes them trainable, and verification tools.
"""

from .encoders import (
    Encoder,
    EncoderSpec,
    FourierConfig,
    FourierParams,
    UnseenPositionError,
    combine,
    embed_lookup,
    encode,
    fourier_features,
    init_embed_tables,
    init_fourier_params,
    md_sine,
    mlp_modulate,
    normalize_positions,
    sine_1d,
    sine_concat_md,
)
from .estimators import (
    LearnableFourierFeatures,
    MDSineEncoding,
    PositionEmbedding,
    PositionNormalizer,
    SineConcatEncoding,
    SineEncoding1D,
)
from .kernels import (
    HeatmapGrid,
    anisotropy_ratio,
    expected_feature_dot,
    gaussian_kernel,
    shift_fn,
    similarity_heatmap,
)
from .numerics import SeededRng, gelu, layer_norm, matmul, softmax
from .presets import PRESETS, get_preset
from .training import (
    Adam,
    KlRegConfig,
    TrainingDiverged,
    backward_encode,
    finite_diff_grad,
    fit_kernel_target,
    kl_loss,
    total_loss,
)

__version__ = "0.1.0"

__all__ = [
    "Encoder",
    "EncoderSpec",
    "FourierConfig",
    "FourierParams",
    "UnseenPositionError",
    "combine",
    "embed_lookup",
    "encode",
    "fourier_features",
    "init_embed_tables",
    "init_fourier_params",
    "md_sine",
    "mlp_modulate",
    "normalize_positions",
    "sine_1d",
    "sine_concat_md",
    "LearnableFourierFeatures",
    "MDSineEncoding",
    "PositionEmbedding",
    "PositionNormalizer",
    "SineConcatEncoding",
    "SineEncoding1D",
    "HeatmapGrid",
    "anisotropy_ratio",
    "expected_feature_dot",
    "gaussian_kernel",
    "shift_fn",
    "similarity_heatmap",
    "SeededRng",
    "gelu",
    "layer_norm",
    "matmul",
    "softmax",
    "PRESETS",
    "get_preset",
    "Adam",
    "KlRegConfig",
    "TrainingDiverged",
    "backward_encode",
    "finite_diff_grad",
    "fit_kernel_target",
    "kl_loss",
    "total_loss",
    "__version__",
]
