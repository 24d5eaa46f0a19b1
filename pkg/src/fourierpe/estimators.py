"""Scikit-learn style wrappers around the positional encoders.

Each estimator follows the usual conventions: constructor arguments are
stored verbatim, ``fit`` creates trailing-underscore attributes, and
``transform`` maps a batch of positions to a batch of encodings, so the
encoders compose with pipelines and model-selection tooling.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import encoders
from .encoders import FourierConfig
from .numerics import SeededRng

__all__ = [
    "LearnableFourierFeatures",
    "SineEncoding1D",
    "SineConcatEncoding",
    "MDSineEncoding",
    "PositionEmbedding",
    "PositionNormalizer",
]


def _rng(random_state) -> SeededRng:
    if isinstance(random_state, SeededRng):
        return random_state
    return SeededRng(random_state)


class LearnableFourierFeatures(TransformerMixin, BaseEstimator):
    """Fourier-feature positional encoder with an MLP modulator.

    Positions are split into ``n_groups`` groups of coordinates; each group
    is passed through a shared cos/sin feature map (weights drawn from
    N(0, gamma^-2)) and a one-hidden-layer GeLU MLP, and the group outputs
    are concatenated.

    Parameters
    ----------
    fourier_dim : int
        Width of the Fourier feature vector (even; half cosines, half sines).
    hidden_dim : int
        Hidden width of the MLP modulator.
    output_dim : int
        Final encoding width; must be divisible by ``n_groups``.
    n_groups : int
        Number of coordinate groups encoded with shared weights.
    gamma : float
        Initialization bandwidth; larger gamma spreads similarity over
        larger coordinate distances.
    init : {"normal", "uniform"}
        Distribution of the initial Fourier weights.
    init_low, init_high : float
        Range of the uniform initialization.
    layer_norm : bool
        Apply layer normalization before each dense projection.
    dropout : float
        Dropout rate after the activation (training mode only; ``transform``
        always runs in eval mode).
    trainable_fourier : bool
        Kept on the estimator so configs round-trip; training itself lives
        in :mod:`fourierpe.training`.
    random_state : int, None, or SeededRng
        Seed for parameter initialization.

    Attributes
    ----------
    config_ : FourierConfig
        Resolved configuration (coords_per_group inferred from the data).
    params_ : FourierParams
        Initialized weights.
    """

    def __init__(self, fourier_dim=384, hidden_dim=32, output_dim=768, n_groups=1,
                 gamma=1.0, init="normal", init_low=0.0, init_high=1.0,
                 layer_norm=False, dropout=0.0, trainable_fourier=True,
                 random_state=None):
        self.fourier_dim = fourier_dim
        self.hidden_dim = hidden_dim
        self.output_dim = output_dim
        self.n_groups = n_groups
        self.gamma = gamma
        self.init = init
        self.init_low = init_low
        self.init_high = init_high
        self.layer_norm = layer_norm
        self.dropout = dropout
        self.trainable_fourier = trainable_fourier
        self.random_state = random_state

    def _as_batch(self, X, coords_per_group=None):
        X = check_array(X, dtype=np.float64, allow_nd=True)
        if X.ndim == 3:
            if X.shape[1] != self.n_groups:
                raise ValueError(f"expected {self.n_groups} groups, got {X.shape[1]}")
            return X
        if X.ndim != 2 or X.shape[1] % self.n_groups != 0:
            raise ValueError(
                f"X must have n_groups*coords_per_group={self.n_groups}*M columns, got shape {X.shape}"
            )
        m = X.shape[1] // self.n_groups
        if coords_per_group is not None and m != coords_per_group:
            raise ValueError(f"expected {coords_per_group} coordinates per group, got {m}")
        return X.reshape(X.shape[0], self.n_groups, m)

    def fit(self, X, y=None):
        """Infer the group geometry from ``X`` and sample fresh weights.

        Parameters
        ----------
        X : array-like of shape (n_samples, n_groups * coords_per_group)
            or (n_samples, n_groups, coords_per_group)
        y : Ignored

        Returns
        -------
        self
        """
        X = self._as_batch(X)
        self.config_ = FourierConfig(
            fourier_dim=self.fourier_dim,
            hidden_dim=self.hidden_dim,
            output_dim=self.output_dim,
            n_groups=self.n_groups,
            coords_per_group=X.shape[2],
            gamma=self.gamma,
            init=self.init,
            init_low=self.init_low,
            init_high=self.init_high,
            layer_norm=self.layer_norm,
            dropout=self.dropout,
            trainable_fourier=self.trainable_fourier,
        )
        self.params_ = encoders.init_fourier_params(self.config_, _rng(self.random_state))
        return self

    def transform(self, X):
        """Encode positions into shape (n_samples, output_dim)."""
        check_is_fitted(self, "params_")
        X = self._as_batch(X, self.config_.coords_per_group)
        return encoders.encode(X, self.params_, self.config_)


class SineEncoding1D(TransformerMixin, BaseEstimator):
    """Parameter-free sinusoid over scalar positions (sin/cos interleaved)."""

    def __init__(self, output_dim=768, base=10000.0):
        self.output_dim = output_dim
        self.base = base

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        X = check_array(X, dtype=np.float64, ensure_2d=False)
        if X.ndim == 2 and X.shape[1] == 1:
            X = X[:, 0]
        if X.ndim != 1:
            raise ValueError(f"expected scalar positions, got shape {X.shape}")
        return encoders.sine_1d(X, self.output_dim, base=self.base)


class SineConcatEncoding(TransformerMixin, BaseEstimator):
    """Per-coordinate sinusoids concatenated coordinate-major."""

    def __init__(self, output_dim=768, bases=None, coord_scale=1.0):
        self.output_dim = output_dim
        self.bases = bases
        self.coord_scale = coord_scale

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        X = check_array(X, dtype=np.float64)
        return encoders.sine_concat_md(X, self.output_dim, bases=self.bases,
                                       coord_scale=self.coord_scale)


class MDSineEncoding(TransformerMixin, BaseEstimator):
    """2-D sinusoid mixing both coordinates inside the phase."""

    def __init__(self, output_dim=768, bases=(10000.0, 5000.0), coord_scale=1.0):
        self.output_dim = output_dim
        self.bases = bases
        self.coord_scale = coord_scale

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        X = check_array(X, dtype=np.float64)
        return encoders.md_sine(X, self.output_dim, bases=self.bases,
                                coord_scale=self.coord_scale)


class PositionEmbedding(TransformerMixin, BaseEstimator):
    """Trainable lookup table per coordinate dimension, concatenated.

    Parameters
    ----------
    vocab_sizes : tuple of int or None
        Vocabulary per dimension. When None, inferred from the fitted data
        as max index + 1.
    embed_widths : tuple of int
        Embedding width per dimension; the output width is their sum.
    unseen : {"error", "clamp"}
        Behaviour for indices outside the vocabulary at transform time.
    random_state : int, None, or SeededRng
    """

    def __init__(self, vocab_sizes=None, embed_widths=(384, 384), unseen="error",
                 random_state=None):
        self.vocab_sizes = vocab_sizes
        self.embed_widths = embed_widths
        self.unseen = unseen
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.int64)
        if X.shape[1] != len(self.embed_widths):
            raise ValueError(
                f"X has {X.shape[1]} index columns but {len(self.embed_widths)} widths configured"
            )
        if self.vocab_sizes is not None:
            vocab = tuple(int(v) for v in self.vocab_sizes)
            if len(vocab) != len(self.embed_widths):
                raise ValueError("vocab_sizes and embed_widths must have equal length")
        else:
            if np.any(X < 0):
                raise ValueError("indices must be non-negative")
            vocab = tuple(int(X[:, i].max()) + 1 for i in range(X.shape[1]))
        self.vocab_sizes_ = vocab
        self.tables_ = encoders.init_embed_tables(vocab, self.embed_widths, _rng(self.random_state))
        return self

    def transform(self, X):
        check_is_fitted(self, "tables_")
        X = check_array(X, dtype=np.int64)
        return encoders.embed_lookup(X, self.tables_, unseen=self.unseen)


class PositionNormalizer(TransformerMixin, BaseEstimator):
    """Map integer grid coordinates into the open interval (0, 1).

    Uses the half-cell rule (x + 0.5) / extent. Extents are given per
    coordinate or learned from the data as max + 1.
    """

    def __init__(self, extents=None):
        self.extents = extents

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        if self.extents is not None:
            ext = np.asarray(self.extents, dtype=np.float64)
            if ext.shape != (X.shape[1],):
                raise ValueError(f"extents must have shape ({X.shape[1]},), got {ext.shape}")
        else:
            ext = np.floor(X.max(axis=0)) + 1.0
        if np.any(ext <= 0):
            raise ValueError("extents must be positive")
        self.extents_ = ext
        return self

    def transform(self, X):
        check_is_fitted(self, "extents_")
        X = check_array(X, dtype=np.float64)
        return encoders.normalize_positions(X, self.extents_)
