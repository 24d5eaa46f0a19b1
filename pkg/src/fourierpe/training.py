"""Gradients, losses, and the optimizer that make the encoder learnable.

``backward_encode`` implements exact reverse-mode differentiation of the
Fourier + MLP pipeline (including through the cos/sin map and optional layer
norms); ``finite_diff_grad`` is the independent central-difference oracle it
is checked against. The distributional regularizer drives the Fourier
weights toward a zero-mean Gaussian with a learnable target variance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoders import FourierConfig, FourierParams, encode_with_cache, init_fourier_params
from .numerics import SeededRng, as_f64, gelu_grad

__all__ = [
    "backward_encode",
    "finite_diff_grad",
    "KlRegConfig",
    "kl_loss",
    "kl_grads",
    "total_loss",
    "Adam",
    "TrainingDiverged",
    "smooth_trace",
    "KernelFitResult",
    "fit_kernel_target",
]


class TrainingDiverged(RuntimeError):
    """A loss or parameter became non-finite during optimization."""

    def __init__(self, step: int, what: str):
        super().__init__(f"training diverged at step {step}: {what}")
        self.step = step


def _ln_backward(dy: np.ndarray, gain: np.ndarray, xhat: np.ndarray, inv: np.ndarray):
    dgain = np.sum(dy * xhat, axis=0)
    dbias = np.sum(dy, axis=0)
    dxhat = dy * gain
    dx = inv * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * np.mean(dxhat * xhat, axis=-1, keepdims=True)
    )
    return dx, dgain, dbias


def backward_encode(x, params: FourierParams, config: FourierConfig,
                    upstream_grad, cache: dict | None = None) -> dict[str, np.ndarray]:
    """Gradients of <upstream_grad, encode(x)> with respect to every
    trainable parameter.

    When no forward ``cache`` is supplied the forward pass is recomputed in
    eval mode (dropout off); pass the cache from ``encode_with_cache`` to
    differentiate a dropout-bearing training step.
    """
    upstream_grad = as_f64(upstream_grad, "upstream_grad")
    if cache is None:
        _, cache = encode_with_cache(x, params, config, mode="eval")
    n, g = cache["n"], cache["g"]
    if upstream_grad.shape != (n, config.output_dim):
        raise ValueError(
            f"upstream_grad must have shape ({n}, {config.output_dim}), got {upstream_grad.shape}"
        )
    dy = upstream_grad.reshape(n * g, config.group_dim)

    grads: dict[str, np.ndarray] = {}
    grads["b2"] = dy.sum(axis=0)
    grads["w2"] = cache["a1"].T @ dy
    da1 = dy @ params.w2.T
    if config.layer_norm:
        dhd, grads["ln2_gain"], grads["ln2_bias"] = _ln_backward(
            da1, params.ln2_gain, cache["xhat1"], cache["inv1"]
        )
    else:
        dhd = da1
    dh1 = dhd * cache["mask"] if cache["mask"] is not None else dhd
    dz1 = dh1 * gelu_grad(cache["z1"])
    grads["b1"] = dz1.sum(axis=0)
    grads["w1"] = cache["a0"].T @ dz1
    da0 = dz1 @ params.w1.T
    if config.layer_norm:
        dx2, grads["ln1_gain"], grads["ln1_bias"] = _ln_backward(
            da0, params.ln1_gain, cache["xhat0"], cache["inv0"]
        )
    else:
        dx2 = da0
    if params.w_r is not None and config.trainable_fourier:
        f = config.fourier_dim
        half = f // 2
        u = cache["u"]
        du = (np.cos(u) * dx2[:, half:] - np.sin(u) * dx2[:, :half]) / np.sqrt(f)
        grads["w_r"] = du.T @ cache["x_flat"]
    return grads


def finite_diff_grad(loss_fn, params: dict[str, np.ndarray], step: float = 1e-5) -> dict[str, np.ndarray]:
    """Central-difference gradient of ``loss_fn(params)`` per scalar entry.

    ``loss_fn`` must be deterministic; the parameter dict is restored to its
    original values before returning.
    """
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    grads = {}
    for name, p in params.items():
        grad = np.zeros_like(p)
        flat = p.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi = loss_fn(params)
            flat[i] = orig - step
            lo = loss_fn(params)
            flat[i] = orig
            if not (np.isfinite(hi) and np.isfinite(lo)):
                raise ValueError(f"loss non-finite while probing {name}[{i}]")
            gflat[i] = (hi - lo) / (2.0 * step)
        grads[name] = grad
    return grads


@dataclass
class KlRegConfig:
    """Weight and target variance of the Gaussian-shape regularizer.

    The target variance is stored as its logarithm so positivity is
    structural; it is itself trainable and starts at gamma^-2.
    """

    alpha: float
    log_target_var: float

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")

    @classmethod
    def from_gamma(cls, alpha: float, gamma: float) -> "KlRegConfig":
        if not gamma > 0:
            raise ValueError(f"gamma must be positive, got {gamma}")
        return cls(alpha=alpha, log_target_var=float(np.log(gamma**-2.0)))

    @property
    def target_var(self) -> float:
        return float(np.exp(self.log_target_var))


def _moments(w_r: np.ndarray) -> tuple[float, float]:
    w = as_f64(w_r, "w_r").reshape(-1)
    if w.size == 0:
        raise ValueError("w_r is empty")
    mu = float(w.mean())
    var = float(np.mean((w - mu) ** 2))
    return mu, var


def kl_loss(w_r, cfg: KlRegConfig) -> float:
    """-(1/2) (1 - log tv + log var - (var + mu^2)/tv) over the empirical
    mean/variance of all ``w_r`` entries (population convention).

    Zero exactly when mu == 0 and var == target variance; minimized there.
    """
    mu, var = _moments(w_r)
    if var <= 0.0:
        raise ValueError("w_r has zero empirical variance; regularizer undefined")
    tv = cfg.target_var
    return -0.5 * (1.0 - np.log(tv) + np.log(var) - (var + mu * mu) / tv)


def kl_grads(w_r, cfg: KlRegConfig) -> tuple[np.ndarray, float]:
    """Gradients of :func:`kl_loss` with respect to ``w_r`` and to the log
    target variance."""
    w = as_f64(w_r, "w_r")
    mu, var = _moments(w)
    if var <= 0.0:
        raise ValueError("w_r has zero empirical variance; regularizer undefined")
    tv = cfg.target_var
    n = w.size
    dl_dvar = -0.5 * (1.0 / var - 1.0 / tv)
    dl_dmu = mu / tv
    d_w = dl_dvar * 2.0 * (w - mu) / n + dl_dmu / n
    d_log_tv = 0.5 - (var + mu * mu) / (2.0 * tv)
    return d_w, float(d_log_tv)


def total_loss(model_loss: float, kl: float, alpha: float) -> float:
    """Weighted sum: model loss plus alpha times the regularizer."""
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    return float(model_loss) + alpha * float(kl)


class Adam:
    """Bias-corrected Adam over a dict of named parameter arrays.

    ``step`` updates the arrays in place, so callers holding references
    (e.g. a :class:`FourierParams`) see the new values.
    """

    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        for name, g in grads.items():
            p = params[name]
            if p.shape != g.shape:
                raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape} for {name!r}")
            if name not in self.m:
                self.m[name] = np.zeros_like(p)
                self.v[name] = np.zeros_like(p)
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            mhat = m / (1.0 - self.beta1**self.t)
            vhat = v / (1.0 - self.beta2**self.t)
            p -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


def smooth_trace(values, window: int = 20) -> np.ndarray:
    """Trailing moving average, so monotonicity checks see the trend rather
    than per-step jitter."""
    values = as_f64(values, "values")
    if window < 1:
        raise ValueError("window must be >= 1")
    out = np.empty_like(values)
    csum = np.cumsum(values)
    for i in range(values.size):
        lo = max(0, i - window + 1)
        out[i] = (csum[i] - (csum[lo - 1] if lo > 0 else 0.0)) / (i - lo + 1)
    return out


@dataclass
class KernelFitResult:
    params: FourierParams
    model_loss: np.ndarray
    kl: np.ndarray
    total: np.ndarray
    log_target_var: float

    @property
    def trace_rows(self) -> list[tuple[int, float, float, float]]:
        return [
            (i, float(self.model_loss[i]), float(self.kl[i]), float(self.total[i]))
            for i in range(self.model_loss.size)
        ]


def fit_kernel_target(config: FourierConfig, target_fn, positions_a, positions_b,
                      steps: int, rng: SeededRng, lr: float = 1e-2,
                      kl_alpha: float = 0.0, wr_mean_offset: float = 0.0) -> KernelFitResult:
    """Train the encoder so that dot products of encodings match a target
    kernel over the given position pairs.

    ``target_fn(a, b)`` receives flattened [P, G*M] coordinate arrays and
    returns the [P] target values. Minimizes the mean squared error with
    Adam; when ``kl_alpha > 0`` the Gaussian-shape regularizer (with its
    trainable log target variance) is added. ``wr_mean_offset`` shifts the
    freshly initialized Fourier weights, e.g. to start from a deliberately
    asymmetric state.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    xa = as_f64(positions_a, "positions_a")
    xb = as_f64(positions_b, "positions_b")
    if xa.shape != xb.shape or xa.ndim != 3:
        raise ValueError(f"position pair stacks must share a [P, G, M] shape, got {xa.shape} and {xb.shape}")
    p_count = xa.shape[0]
    targets = as_f64(target_fn(xa.reshape(p_count, -1), xb.reshape(p_count, -1)), "targets")
    if targets.shape != (p_count,):
        raise ValueError(f"target_fn must return shape ({p_count},), got {targets.shape}")

    params = init_fourier_params(config, rng)
    if wr_mean_offset != 0.0:
        params.w_r = params.w_r + wr_mean_offset
    trainable = {name: params.to_dict()[name] for name in params.trainable_names(config)}
    kl_cfg = None
    log_tv = np.array(0.0)
    if kl_alpha > 0.0:
        kl_cfg = KlRegConfig.from_gamma(kl_alpha, config.gamma)
        log_tv = np.array(kl_cfg.log_target_var)
        trainable = dict(trainable, log_target_var=log_tv)

    adam = Adam(lr=lr)
    model_hist = np.zeros(steps)
    kl_hist = np.zeros(steps)
    total_hist = np.zeros(steps)
    mode = "train" if config.dropout > 0.0 else "eval"
    for step in range(steps):
        pe_a, cache_a = encode_with_cache(xa, params, config, mode=mode, rng=rng)
        pe_b, cache_b = encode_with_cache(xb, params, config, mode=mode, rng=rng)
        s = np.sum(pe_a * pe_b, axis=1)
        with np.errstate(over="ignore"):  # overflow surfaces as divergence below
            resid = s - targets
            model = float(np.mean(resid**2))
        if not np.isfinite(model):
            raise TrainingDiverged(step, f"model loss={model}")
        ds = 2.0 * resid / p_count
        grads_a = backward_encode(xa, params, config, ds[:, None] * pe_b, cache_a)
        grads_b = backward_encode(xb, params, config, ds[:, None] * pe_a, cache_b)
        grads = {k: grads_a[k] + grads_b[k] for k in grads_a}
        grads = {k: g for k, g in grads.items() if k in trainable}

        kl = 0.0
        if kl_cfg is not None:
            kl_cfg.log_target_var = float(log_tv)
            kl = kl_loss(params.w_r, kl_cfg)
            d_wr, d_log_tv = kl_grads(params.w_r, kl_cfg)
            if "w_r" in grads:
                grads["w_r"] = grads["w_r"] + kl_alpha * d_wr
            grads["log_target_var"] = np.array(kl_alpha * d_log_tv)
        total = total_loss(model, kl, kl_alpha if kl_cfg is not None else 0.0)
        if not np.isfinite(total):
            raise TrainingDiverged(step, f"loss={total}")
        adam.step(trainable, grads)
        for arr in trainable.values():
            if not np.all(np.isfinite(arr)):
                raise TrainingDiverged(step, "parameters became non-finite")
        model_hist[step] = model
        kl_hist[step] = kl
        total_hist[step] = total
    return KernelFitResult(
        params=params,
        model_loss=model_hist,
        kl=kl_hist,
        total=total_hist,
        log_target_var=float(log_tv),
    )
