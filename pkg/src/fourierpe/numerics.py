"""Float64 array primitives shared by every encoder and the training code.

Everything downstream is built on a handful of operations pinned down here:
float64 arithmetic, an exact (erf-based) GeLU, population-variance layer
normalization, max-subtracted softmax, and a counter-based PRNG (Philox)
whose streams are reproducible and splittable.
"""

from __future__ import annotations

import numpy as np
from scipy import special

__all__ = [
    "as_f64",
    "check_finite",
    "matmul",
    "gauss_cdf",
    "gelu",
    "gelu_grad",
    "layer_norm",
    "softmax",
    "SeededRng",
]

_SQRT2 = float(np.sqrt(2.0))
_INV_SQRT_2PI = float(1.0 / np.sqrt(2.0 * np.pi))


def as_f64(x, name: str = "array") -> np.ndarray:
    """Coerce to a float64 ndarray, rejecting NaN/Inf entries."""
    arr = np.asarray(x, dtype=np.float64)
    check_finite(arr, name)
    return arr


def check_finite(arr: np.ndarray, name: str = "array") -> None:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")


def matmul(a, b) -> np.ndarray:
    """Matrix product of two 2-D arrays with explicit shape validation."""
    a = as_f64(a, "a")
    b = as_f64(b, "b")
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul inner dimensions disagree: {a.shape} x {b.shape}")
    return a @ b


def gauss_cdf(x) -> np.ndarray:
    """Standard normal CDF via erf (no tanh approximation)."""
    x = np.asarray(x, dtype=np.float64)
    return 0.5 * (1.0 + special.erf(x / _SQRT2))


def gelu(x) -> np.ndarray:
    """Exact GeLU: x * Phi(x) with the Gaussian CDF."""
    x = np.asarray(x, dtype=np.float64)
    return x * gauss_cdf(x)


def gelu_grad(x) -> np.ndarray:
    """Derivative of the exact GeLU: Phi(x) + x * phi(x)."""
    x = np.asarray(x, dtype=np.float64)
    return gauss_cdf(x) + x * np.exp(-0.5 * x * x) * _INV_SQRT_2PI


def layer_norm(x, gain, bias, eps: float = 1e-5) -> np.ndarray:
    """Normalize the last axis to zero mean / unit variance, then scale and shift.

    The variance uses the population (1/d) convention.
    """
    x = as_f64(x, "x")
    gain = as_f64(gain, "gain")
    bias = as_f64(bias, "bias")
    d = x.shape[-1]
    if gain.shape != (d,) or bias.shape != (d,):
        raise ValueError(f"gain/bias must have shape ({d},), got {gain.shape} and {bias.shape}")
    mu = x.mean(axis=-1, keepdims=True)
    var = np.mean((x - mu) ** 2, axis=-1, keepdims=True)
    xhat = (x - mu) / np.sqrt(var + eps)
    return xhat * gain + bias


def softmax(x, axis: int = -1) -> np.ndarray:
    """Numerically stable softmax along ``axis`` (max subtraction)."""
    x = as_f64(x, "x")
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


class SeededRng:
    """Counter-based (Philox) random stream.

    The same seed plus the same call sequence produces bit-identical output.
    ``split`` derives independent child streams so that parallel sampling
    stays reproducible.
    """

    def __init__(self, seed: int | None = None, _seq: np.random.SeedSequence | None = None):
        self._seq = _seq if _seq is not None else np.random.SeedSequence(seed)
        self._gen = np.random.Generator(np.random.Philox(self._seq))
        self.seed = seed

    def normal(self, mean: float, stddev: float, shape=()) -> np.ndarray:
        if not stddev > 0:
            raise ValueError(f"stddev must be positive, got {stddev}")
        return self._gen.normal(mean, stddev, size=shape)

    def uniform(self, low: float, high: float, shape=()) -> np.ndarray:
        if not low < high:
            raise ValueError(f"uniform requires low < high, got [{low}, {high})")
        return self._gen.uniform(low, high, size=shape)

    def integers(self, low: int, high: int, shape=()) -> np.ndarray:
        """Uniform integers in [low, high)."""
        if not low < high:
            raise ValueError(f"integers requires low < high, got [{low}, {high})")
        return self._gen.integers(low, high, size=shape)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def split(self, n: int) -> list["SeededRng"]:
        """Derive ``n`` independent child streams."""
        return [SeededRng(_seq=child) for child in self._seq.spawn(n)]
