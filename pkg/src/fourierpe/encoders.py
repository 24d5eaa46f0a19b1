"""Positional encoders for multi-dimensional positions.

The main pipeline maps a batch of positions, each split into ``G`` groups of
``M`` coordinate values, through a trainable Fourier feature layer and a
small MLP sharing weights across groups::

    features = (1/sqrt(F)) * [cos(x Wr^T) | sin(x Wr^T)]   # per group, [N, G, F]
    hidden   = GeLU(features W1 + B1)                       # [N, G, H]
    output   = hidden W2 + B2                               # [N, G, D/G]
    encoding = concat over groups                           # [N, D]

``Wr`` is initialized from N(0, gamma^-2) so that, at initialization, dot
products of the Fourier features approximate a Gaussian kernel of the
coordinate difference. Optional layer normalization is applied before each
dense projection and optional dropout after the activation.

The remaining encoders are the baselines the pipeline is compared against:
fixed sinusoids over a scalar position, per-coordinate sinusoid
concatenation, multi-dimensional sinusoids with hand-picked per-axis
wavelength bases, trainable per-coordinate embedding tables, a plain MLP
over raw coordinates, and a zero encoding used as a no-position control.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Sequence

import numpy as np

from .numerics import SeededRng, as_f64, gelu, layer_norm

__all__ = [
    "FourierConfig",
    "FourierParams",
    "EncoderSpec",
    "Encoder",
    "UnseenPositionError",
    "init_fourier_params",
    "init_mlp_only_params",
    "fourier_features",
    "mlp_modulate",
    "encode",
    "encode_with_cache",
    "sine_1d",
    "sine_concat_md",
    "md_sine",
    "init_embed_tables",
    "embed_lookup",
    "combine",
    "normalize_positions",
]


class UnseenPositionError(ValueError):
    """A discrete position fell outside the embedding vocabulary."""


# ---------------------------------------------------------------------------
# Fourier + MLP pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FourierConfig:
    """Hyperparameters of the Fourier + MLP encoder.

    ``fourier_dim`` is the width F of the Fourier feature vector (must be
    even: half cosines, half sines), ``hidden_dim`` the MLP hidden width H,
    ``output_dim`` the final encoding width D (divisible by ``n_groups``),
    and ``coords_per_group`` the number M of coordinate values per group.
    """

    fourier_dim: int
    hidden_dim: int
    output_dim: int
    n_groups: int = 1
    coords_per_group: int = 1
    gamma: float = 1.0
    init: str = "normal"
    init_low: float = 0.0
    init_high: float = 1.0
    layer_norm: bool = False
    dropout: float = 0.0
    trainable_fourier: bool = True

    def __post_init__(self):
        if self.fourier_dim <= 0 or self.fourier_dim % 2 != 0:
            raise ValueError(f"fourier_dim must be a positive even integer, got {self.fourier_dim}")
        if self.hidden_dim < 1:
            raise ValueError(f"hidden_dim must be >= 1, got {self.hidden_dim}")
        if self.output_dim < 1 or self.n_groups < 1 or self.output_dim % self.n_groups != 0:
            raise ValueError(
                f"output_dim must be a positive multiple of n_groups, "
                f"got D={self.output_dim}, G={self.n_groups}"
            )
        if self.coords_per_group < 1:
            raise ValueError(f"coords_per_group must be >= 1, got {self.coords_per_group}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.init not in ("normal", "uniform"):
            raise ValueError(f"init must be 'normal' or 'uniform', got {self.init!r}")
        if self.init == "uniform" and not self.init_low < self.init_high:
            raise ValueError(f"uniform init requires init_low < init_high, got [{self.init_low}, {self.init_high}]")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")

    @property
    def group_dim(self) -> int:
        return self.output_dim // self.n_groups


@dataclass
class FourierParams:
    """Trainable weights of the Fourier + MLP encoder.

    Shapes: ``w_r`` [F/2, M], ``w1`` [F, H], ``b1`` [H], ``w2`` [H, D/G],
    ``b2`` [D/G]. Layer-norm gains/biases are present only when the config
    enables layer normalization. For the MLP-only encoder ``w_r`` is None
    and ``w1`` has shape [M, H].
    """

    w_r: np.ndarray | None
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    ln1_gain: np.ndarray | None = None
    ln1_bias: np.ndarray | None = None
    ln2_gain: np.ndarray | None = None
    ln2_bias: np.ndarray | None = None

    _ORDER = ("w_r", "w1", "b1", "w2", "b2", "ln1_gain", "ln1_bias", "ln2_gain", "ln2_bias")

    def to_dict(self) -> dict[str, np.ndarray]:
        """Present tensors in a fixed order, keyed by field name."""
        return {name: getattr(self, name) for name in self._ORDER if getattr(self, name) is not None}

    @classmethod
    def from_dict(cls, tensors: dict[str, np.ndarray]) -> "FourierParams":
        kwargs = {name: tensors.get(name) for name in cls._ORDER}
        missing = [k for k in ("w1", "b1", "w2", "b2") if kwargs[k] is None]
        if missing:
            raise ValueError(f"missing parameter tensors: {missing}")
        return cls(**kwargs)

    def copy(self) -> "FourierParams":
        return FourierParams.from_dict({k: v.copy() for k, v in self.to_dict().items()})

    def trainable_names(self, config: FourierConfig) -> tuple[str, ...]:
        names = [n for n in self._ORDER if getattr(self, n) is not None]
        if self.w_r is not None and not config.trainable_fourier:
            names.remove("w_r")
        return tuple(names)


def _init_mlp_weights(in_dim: int, config: FourierConfig, rng: SeededRng):
    """Fan-in scaled normal for the dense layers, zeros for biases."""
    h, dg = config.hidden_dim, config.group_dim
    w1 = rng.normal(0.0, 1.0 / np.sqrt(in_dim), (in_dim, h))
    b1 = np.zeros(h)
    w2 = rng.normal(0.0, 1.0 / np.sqrt(h), (h, dg))
    b2 = np.zeros(dg)
    ln = {}
    if config.layer_norm:
        ln = dict(
            ln1_gain=np.ones(in_dim),
            ln1_bias=np.zeros(in_dim),
            ln2_gain=np.ones(h),
            ln2_bias=np.zeros(h),
        )
    return w1, b1, w2, b2, ln


def init_fourier_params(config: FourierConfig, rng: SeededRng) -> FourierParams:
    """Sample fresh encoder weights.

    ``w_r`` is drawn from N(0, gamma^-2) (or uniformly over
    [init_low, init_high] when ``config.init == "uniform"``); the dense
    layers use fan-in scaled normals and zero biases.
    """
    f, m = config.fourier_dim, config.coords_per_group
    if config.init == "normal":
        w_r = rng.normal(0.0, 1.0 / config.gamma, (f // 2, m))
    else:
        w_r = rng.uniform(config.init_low, config.init_high, (f // 2, m))
    w1, b1, w2, b2, ln = _init_mlp_weights(f, config, rng)
    return FourierParams(w_r=w_r, w1=w1, b1=b1, w2=w2, b2=b2, **ln)


def init_mlp_only_params(config: FourierConfig, rng: SeededRng) -> FourierParams:
    """Weights for the MLP-only encoder (raw coordinates in, no Fourier layer)."""
    w1, b1, w2, b2, ln = _init_mlp_weights(config.coords_per_group, config, rng)
    return FourierParams(w_r=None, w1=w1, b1=b1, w2=w2, b2=b2, **ln)


def fourier_features(x, w_r) -> np.ndarray:
    """Fourier feature map of a position batch.

    ``x`` has shape [N, G, M] and ``w_r`` shape [F/2, M]; the result has
    shape [N, G, F] with the cosine block first, then the sine block, scaled
    by 1/sqrt(F). Dot products of rows are shift invariant: they depend on
    positions only through their difference.
    """
    x = as_f64(x, "positions")
    w_r = as_f64(w_r, "w_r")
    if x.ndim != 3:
        raise ValueError(f"positions must have shape [N, G, M], got {x.shape}")
    if w_r.ndim != 2 or w_r.shape[1] != x.shape[2]:
        raise ValueError(f"w_r shape {w_r.shape} does not match M={x.shape[2]}")
    u = x @ w_r.T
    return _cos_sin_features(u)


def _cos_sin_features(u: np.ndarray) -> np.ndarray:
    """[cos(u) | sin(u)] / sqrt(F) along the last axis, without extra copies."""
    half = u.shape[-1]
    out = np.empty(u.shape[:-1] + (2 * half,))
    np.cos(u, out=out[..., :half])
    np.sin(u, out=out[..., half:])
    out *= 1.0 / np.sqrt(2 * half)
    return out


def _ln_stats(x: np.ndarray, eps: float = 1e-5):
    mu = x.mean(axis=-1, keepdims=True)
    var = np.mean((x - mu) ** 2, axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    return (x - mu) * inv, inv


def _mlp_forward(x2: np.ndarray, params: FourierParams, config: FourierConfig,
                 mode: str, rng: SeededRng | None, cache: dict | None):
    """Shared MLP body over 2-D rows; optionally records intermediates."""
    if config.layer_norm:
        xhat0, inv0 = _ln_stats(x2)
        a0 = xhat0 * params.ln1_gain + params.ln1_bias
    else:
        xhat0 = inv0 = None
        a0 = x2
    z1 = a0 @ params.w1 + params.b1
    h1 = gelu(z1)
    mask = None
    if mode == "train" and config.dropout > 0.0:
        if rng is None:
            raise ValueError("training-mode dropout requires an rng")
        keep = 1.0 - config.dropout
        mask = (rng.uniform(0.0, 1.0, h1.shape) < keep) / keep
        hd = h1 * mask
    else:
        hd = h1
    if config.layer_norm:
        xhat1, inv1 = _ln_stats(hd)
        a1 = xhat1 * params.ln2_gain + params.ln2_bias
    else:
        xhat1 = inv1 = None
        a1 = hd
    y = a1 @ params.w2 + params.b2
    if cache is not None:
        cache.update(x2=x2, xhat0=xhat0, inv0=inv0, a0=a0, z1=z1,
                     mask=mask, hd=hd, xhat1=xhat1, inv1=inv1, a1=a1)
    return y


def mlp_modulate(features, params: FourierParams, config: FourierConfig,
                 mode: str = "eval", rng: SeededRng | None = None) -> np.ndarray:
    """Apply the MLP body to features of shape [N, G, Fin] -> [N, G, D/G]."""
    features = as_f64(features, "features")
    if features.ndim != 3:
        raise ValueError(f"features must have shape [N, G, Fin], got {features.shape}")
    n, g, fin = features.shape
    if fin != params.w1.shape[0]:
        raise ValueError(f"feature width {fin} does not match w1 rows {params.w1.shape[0]}")
    if g != config.n_groups:
        raise ValueError(f"group count {g} does not match config n_groups {config.n_groups}")
    _check_mode(mode)
    y = _mlp_forward(features.reshape(n * g, fin), params, config, mode, rng, None)
    return y.reshape(n, g, config.group_dim)


def _check_mode(mode: str):
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")


def _check_batch(x: np.ndarray, config: FourierConfig):
    if x.ndim != 3 or x.shape[1] != config.n_groups or x.shape[2] != config.coords_per_group:
        raise ValueError(
            f"positions must have shape [N, {config.n_groups}, {config.coords_per_group}], got {x.shape}"
        )


def encode_with_cache(x, params: FourierParams, config: FourierConfig,
                      mode: str = "eval", rng: SeededRng | None = None):
    """Like :func:`encode` but also returns the intermediates needed for
    the analytic backward pass."""
    x = as_f64(x, "positions")
    _check_batch(x, config)
    _check_mode(mode)
    n, g, m = x.shape
    cache: dict = {"n": n, "g": g}
    if params.w_r is not None:
        u = x.reshape(n * g, m) @ params.w_r.T
        x2 = _cos_sin_features(u)
        cache["u"] = u
        cache["x_flat"] = x.reshape(n * g, m)
    else:
        x2 = x.reshape(n * g, m)
        cache["u"] = None
        cache["x_flat"] = x2
    y = _mlp_forward(x2, params, config, mode, rng, cache)
    return y.reshape(n, config.output_dim), cache


def encode(x, params: FourierParams, config: FourierConfig,
           mode: str = "eval", rng: SeededRng | None = None) -> np.ndarray:
    """Encode a position batch [N, G, M] into [N, D].

    Groups are processed with shared weights and concatenated in order, so
    coordinates in group ``g`` only influence output columns
    [g*D/G, (g+1)*D/G).
    """
    pe, _ = encode_with_cache(x, params, config, mode, rng)
    return pe


# ---------------------------------------------------------------------------
# Sinusoidal baselines
# ---------------------------------------------------------------------------


def _as_batch(positions, last_dim: int | None):
    """Normalize scalar/1-D/2-D position input; returns (array2d, was_single)."""
    p = as_f64(positions, "positions")
    if last_dim is None:  # scalar positions
        if p.ndim == 0:
            return p.reshape(1, 1), True
        if p.ndim == 1:
            return p.reshape(-1, 1), False
        raise ValueError(f"expected scalar positions, got shape {p.shape}")
    if p.ndim == 1:
        if p.shape[0] != last_dim:
            raise ValueError(f"expected {last_dim} coordinates, got {p.shape[0]}")
        return p.reshape(1, -1), True
    if p.ndim == 2 and p.shape[1] == last_dim:
        return p, False
    raise ValueError(f"expected positions of shape [N, {last_dim}], got {p.shape}")


def _sine_block(p: np.ndarray, width: int, base: float) -> np.ndarray:
    """Interleaved sin/cos encoding of scalar positions ``p`` into ``width`` dims."""
    d = np.arange(width // 2, dtype=np.float64)
    freqs = base ** (-2.0 * d / width)
    ang = p[:, None] * freqs[None, :]
    out = np.empty((p.shape[0], width))
    out[:, 0::2] = np.sin(ang)
    out[:, 1::2] = np.cos(ang)
    return out


def sine_1d(positions, output_dim: int, base: float = 10000.0) -> np.ndarray:
    """Fixed sinusoidal encoding of scalar positions.

    Slot 2d holds sin(p / base^(2d/D)) and slot 2d+1 the matching cosine.
    Accepts a scalar (returns [D]) or a 1-D array (returns [N, D]).
    """
    if output_dim <= 0 or output_dim % 2 != 0:
        raise ValueError(f"output_dim must be positive and even, got {output_dim}")
    p, single = _as_batch(positions, None)
    out = _sine_block(p[:, 0], output_dim, base)
    return out[0] if single else out


def sine_concat_md(positions, output_dim: int, bases: Sequence[float] | None = None,
                   coord_scale: float = 1.0) -> np.ndarray:
    """Encode each coordinate independently with :func:`sine_1d` and
    concatenate the per-coordinate blocks in coordinate order.

    ``positions`` has M columns; ``output_dim`` must be divisible by M with
    an even quotient. ``bases`` optionally overrides the wavelength base per
    coordinate (default 10000 everywhere).
    """
    p = as_f64(positions, "positions")
    m = p.shape[-1] if p.ndim > 0 else 1
    p, single = _as_batch(positions, m)
    if output_dim % m != 0 or (output_dim // m) % 2 != 0:
        raise ValueError(
            f"output_dim must split into {m} even-width blocks, got D={output_dim}"
        )
    if bases is None:
        bases = (10000.0,) * m
    if len(bases) != m:
        raise ValueError(f"expected {m} wavelength bases, got {len(bases)}")
    width = output_dim // m
    blocks = [_sine_block(p[:, i] * coord_scale, width, bases[i]) for i in range(m)]
    out = np.concatenate(blocks, axis=1)
    return out[0] if single else out


def md_sine(positions, output_dim: int, bases: Sequence[float] = (10000.0, 5000.0),
            coord_scale: float = 1.0) -> np.ndarray:
    """Multi-dimensional sinusoid that mixes the two coordinates inside the
    phase: slot 2d is sin(x / bases[0]^(2d/D) + y / bases[1]^(2d/D)).

    Defined for 2-D positions only.
    """
    if output_dim <= 0 or output_dim % 2 != 0:
        raise ValueError(f"output_dim must be positive and even, got {output_dim}")
    p = as_f64(positions, "positions")
    m = p.shape[-1] if p.ndim > 0 else 1
    if m != 2:
        raise ValueError(f"md_sine supports 2 coordinates, got {m}")
    if len(bases) != 2:
        raise ValueError(f"md_sine takes exactly 2 wavelength bases, got {len(bases)}")
    p, single = _as_batch(positions, 2)
    d = np.arange(output_dim // 2, dtype=np.float64)
    ang = sum(
        (p[:, i:i + 1] * coord_scale) * bases[i] ** (-2.0 * d / output_dim)[None, :]
        for i in range(2)
    )
    out = np.empty((p.shape[0], output_dim))
    out[:, 0::2] = np.sin(ang)
    out[:, 1::2] = np.cos(ang)
    return out[0] if single else out


# ---------------------------------------------------------------------------
# Embedding-table baseline
# ---------------------------------------------------------------------------


def init_embed_tables(vocab_sizes: Sequence[int], widths: Sequence[int],
                      rng: SeededRng, scale: float = 0.5) -> list[np.ndarray]:
    """One trainable lookup table per embedded dimension.

    Entries are drawn from N(0, scale^2); the default keeps encoding rows
    comparable in magnitude to unit-normal content vectors.
    """
    if len(vocab_sizes) != len(widths) or not vocab_sizes:
        raise ValueError("vocab_sizes and widths must be non-empty and equal length")
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    return [rng.normal(0.0, scale, (int(v), int(w))) for v, w in zip(vocab_sizes, widths)]


def embed_lookup(indices, tables: Sequence[np.ndarray], unseen: str = "error") -> np.ndarray:
    """Concatenate the looked-up row of each per-dimension table.

    An index outside [0, vocab) raises :class:`UnseenPositionError` by
    default; with ``unseen="clamp"`` it is clamped to the nearest valid
    index instead (the degraded behaviour of embedding tables on positions
    never seen in training).
    """
    if unseen not in ("error", "clamp"):
        raise ValueError(f"unseen must be 'error' or 'clamp', got {unseen!r}")
    idx = np.asarray(indices)
    single = idx.ndim == 1
    if single:
        idx = idx.reshape(1, -1)
    if idx.ndim != 2 or idx.shape[1] != len(tables):
        raise ValueError(f"expected indices of shape [N, {len(tables)}], got {idx.shape}")
    idx = idx.astype(np.int64)
    cols = []
    for i, table in enumerate(tables):
        col = idx[:, i]
        vocab = table.shape[0]
        if unseen == "clamp":
            col = np.clip(col, 0, vocab - 1)
        elif np.any((col < 0) | (col >= vocab)):
            bad = col[(col < 0) | (col >= vocab)][0]
            raise UnseenPositionError(
                f"index {bad} outside vocabulary [0, {vocab}) for dimension {i}"
            )
        cols.append(table[col])
    out = np.concatenate(cols, axis=1)
    return out[0] if single else out


# ---------------------------------------------------------------------------
# Combination with content embeddings, preprocessing
# ---------------------------------------------------------------------------


def combine(content, pe, mode: str = "add") -> np.ndarray:
    """Join content embeddings with positional encodings, by element-wise
    addition (widths must match) or row-wise concatenation."""
    content = as_f64(content, "content")
    pe = as_f64(pe, "pe")
    if content.ndim != 2 or pe.ndim != 2 or content.shape[0] != pe.shape[0]:
        raise ValueError(f"content {content.shape} and pe {pe.shape} must be [N, *] with equal N")
    if mode == "add":
        if content.shape[1] != pe.shape[1]:
            raise ValueError(
                f"add mode requires equal widths, got {content.shape[1]} and {pe.shape[1]}"
            )
        return content + pe
    if mode == "concat":
        return np.concatenate([content, pe], axis=1)
    raise ValueError(f"mode must be 'add' or 'concat', got {mode!r}")


def normalize_positions(values, extents) -> np.ndarray:
    """Map integer grid coordinates in [0, extent) into the open interval (0, 1).

    Uses the half-cell convention (i + 0.5) / extent, broadcasting
    ``extents`` over the last axis.
    """
    values = as_f64(values, "values")
    extents = as_f64(extents, "extents")
    if np.any(extents <= 0):
        raise ValueError("extents must be positive")
    return (values + 0.5) / extents


# ---------------------------------------------------------------------------
# Encoder specification (tagged union over all variants)
# ---------------------------------------------------------------------------

VARIANTS = (
    "learnable_fourier",
    "fixed_fourier",
    "sine_1d",
    "sine_concat",
    "md_sine",
    "embed_nd",
    "mlp_only",
    "zero",
)

_FOURIER_VARIANTS = ("learnable_fourier", "fixed_fourier")


@dataclass(frozen=True)
class EncoderSpec:
    """Configuration of one positional encoder variant.

    Only the fields relevant to ``variant`` are meaningful; the rest keep
    their defaults. All variants share ``output_dim`` so encoders can be
    compared like-for-like.
    """

    variant: str
    output_dim: int
    fourier_dim: int = 0
    hidden_dim: int = 0
    n_groups: int = 1
    coords_per_group: int = 2
    gamma: float = 1.0
    init: str = "normal"
    init_low: float = 0.0
    init_high: float = 1.0
    layer_norm: bool = False
    dropout: float = 0.0
    bases: tuple[float, ...] = ()
    coord_scale: float = 1.0
    vocab_sizes: tuple[int, ...] = ()
    embed_widths: tuple[int, ...] = ()
    unseen: str = "error"

    def __post_init__(self):
        object.__setattr__(self, "bases", tuple(float(b) for b in self.bases))
        object.__setattr__(self, "vocab_sizes", tuple(int(v) for v in self.vocab_sizes))
        object.__setattr__(self, "embed_widths", tuple(int(w) for w in self.embed_widths))
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown encoder variant {self.variant!r}; choose from {VARIANTS}")
        if self.output_dim < 1:
            raise ValueError(f"output_dim must be >= 1, got {self.output_dim}")
        if self.variant in _FOURIER_VARIANTS or self.variant == "mlp_only":
            self.fourier_config()  # delegates validation
        elif self.variant == "sine_1d":
            if self.output_dim % 2 != 0:
                raise ValueError("sine_1d requires an even output_dim")
        elif self.variant == "sine_concat":
            m = self.coords_per_group
            if self.output_dim % m != 0 or (self.output_dim // m) % 2 != 0:
                raise ValueError(
                    f"sine_concat requires output_dim divisible by {m} coordinates "
                    f"with even block width, got {self.output_dim}"
                )
            if self.bases and len(self.bases) != m:
                raise ValueError(f"expected {m} bases, got {len(self.bases)}")
        elif self.variant == "md_sine":
            if self.coords_per_group != 2:
                raise ValueError("md_sine supports exactly 2 coordinates")
            if self.output_dim % 2 != 0:
                raise ValueError("md_sine requires an even output_dim")
            if self.bases and len(self.bases) != 2:
                raise ValueError(f"md_sine takes 2 bases, got {len(self.bases)}")
        elif self.variant == "embed_nd":
            if not self.vocab_sizes or len(self.vocab_sizes) != len(self.embed_widths):
                raise ValueError("embed_nd needs matching vocab_sizes and embed_widths")
            if sum(self.embed_widths) != self.output_dim:
                raise ValueError(
                    f"embed widths must sum to output_dim, got {sum(self.embed_widths)} != {self.output_dim}"
                )
            if self.unseen not in ("error", "clamp"):
                raise ValueError(f"unseen must be 'error' or 'clamp', got {self.unseen!r}")

    def fourier_config(self) -> FourierConfig:
        if self.variant not in _FOURIER_VARIANTS and self.variant != "mlp_only":
            raise ValueError(f"variant {self.variant!r} has no Fourier/MLP configuration")
        return FourierConfig(
            fourier_dim=self.fourier_dim if self.variant != "mlp_only" else max(self.fourier_dim, 2),
            hidden_dim=self.hidden_dim,
            output_dim=self.output_dim,
            n_groups=self.n_groups,
            coords_per_group=self.coords_per_group,
            gamma=self.gamma,
            init=self.init,
            init_low=self.init_low,
            init_high=self.init_high,
            layer_norm=self.layer_norm,
            dropout=self.dropout,
            trainable_fourier=self.variant == "learnable_fourier",
        )

    def position_width(self) -> int:
        """Number of coordinate columns the encoder consumes per position."""
        if self.variant in _FOURIER_VARIANTS or self.variant == "mlp_only":
            return self.n_groups * self.coords_per_group
        if self.variant == "sine_1d":
            return 1
        if self.variant in ("sine_concat", "md_sine"):
            return self.coords_per_group
        if self.variant == "embed_nd":
            return len(self.vocab_sizes)
        return 2  # zero encoder accepts 2-D grid positions by convention

    @property
    def has_params(self) -> bool:
        return self.variant in _FOURIER_VARIANTS + ("mlp_only", "embed_nd")


class Encoder:
    """An :class:`EncoderSpec` bundled with initialized parameters.

    Presents every variant behind two evaluation surfaces: ``encode`` (the
    full positional encoding) and ``fourier_stage`` (the pre-MLP feature
    representation, which for variants without an MLP is the encoding
    itself). Positions are 2-D arrays [N, position_width].
    """

    def __init__(self, spec: EncoderSpec, rng: SeededRng | None = None, params=None):
        self.spec = spec
        if params is not None:
            self.params = params
        elif spec.has_params:
            if rng is None:
                raise ValueError(f"variant {spec.variant!r} needs an rng to initialize parameters")
            if spec.variant == "embed_nd":
                self.params = init_embed_tables(spec.vocab_sizes, spec.embed_widths, rng)
            elif spec.variant == "mlp_only":
                self.params = init_mlp_only_params(spec.fourier_config(), rng)
            else:
                self.params = init_fourier_params(spec.fourier_config(), rng)
        else:
            self.params = None

    def _positions(self, positions) -> np.ndarray:
        p = as_f64(positions, "positions")
        if p.ndim != 2 or p.shape[1] != self.spec.position_width():
            raise ValueError(
                f"expected positions of shape [N, {self.spec.position_width()}], got {p.shape}"
            )
        return p

    def encode(self, positions) -> np.ndarray:
        spec = self.spec
        p = self._positions(positions)
        n = p.shape[0]
        if spec.variant in _FOURIER_VARIANTS or spec.variant == "mlp_only":
            x = p.reshape(n, spec.n_groups, spec.coords_per_group)
            return encode(x, self.params, spec.fourier_config())
        if spec.variant == "sine_1d":
            return sine_1d(p[:, 0] * spec.coord_scale, spec.output_dim,
                           base=spec.bases[0] if spec.bases else 10000.0)
        if spec.variant == "sine_concat":
            return sine_concat_md(p, spec.output_dim, bases=spec.bases or None,
                                  coord_scale=spec.coord_scale)
        if spec.variant == "md_sine":
            return md_sine(p, spec.output_dim, bases=spec.bases or (10000.0, 5000.0),
                           coord_scale=spec.coord_scale)
        if spec.variant == "embed_nd":
            return embed_lookup(p.astype(np.int64), self.params, unseen=spec.unseen)
        return np.zeros((n, spec.output_dim))

    def fourier_stage(self, positions) -> np.ndarray:
        """Pre-MLP representation: the Fourier features, flattened over
        groups, for Fourier variants; the encoding itself otherwise."""
        spec = self.spec
        if spec.variant in _FOURIER_VARIANTS:
            p = self._positions(positions)
            x = p.reshape(p.shape[0], spec.n_groups, spec.coords_per_group)
            feats = fourier_features(x, self.params.w_r)
            return feats.reshape(p.shape[0], spec.n_groups * spec.fourier_dim)
        return self.encode(positions)

    def tensors(self) -> dict[str, np.ndarray]:
        """Named parameter tensors, for checkpointing."""
        if self.params is None:
            return {}
        if self.spec.variant == "embed_nd":
            return {f"table{i}": t for i, t in enumerate(self.params)}
        return self.params.to_dict()

    @classmethod
    def from_tensors(cls, spec: EncoderSpec, tensors: dict[str, np.ndarray]) -> "Encoder":
        if not spec.has_params:
            return cls(spec, params=None)
        if spec.variant == "embed_nd":
            tables = [tensors[f"table{i}"] for i in range(len(spec.vocab_sizes))]
            return cls(spec, params=tables)
        return cls(spec, params=FourierParams.from_dict(tensors))
