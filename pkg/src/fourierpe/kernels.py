"""Reference kernels and similarity-heatmap diagnostics.

The dot product of two Fourier feature vectors depends on the positions only
through their difference; this module provides that closed form, the
Gaussian kernel it approximates at initialization, and tools to visualize
and quantify how isotropic an encoder's similarity pattern is on a 2-D grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoders import Encoder, EncoderSpec
from .numerics import SeededRng, as_f64

__all__ = [
    "gaussian_kernel",
    "expected_feature_dot",
    "shift_fn",
    "HeatmapGrid",
    "similarity_heatmap",
    "mean_heatmap",
    "anisotropy_ratio",
    "probe_anchors",
    "write_pgm",
]


def gaussian_kernel(x, y, gamma: float) -> np.ndarray:
    """exp(-||x - y||^2 / gamma^2) over the last axis."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    x = as_f64(x, "x")
    y = as_f64(y, "y")
    if x.shape != y.shape:
        raise ValueError(f"x and y must have equal shapes, got {x.shape} and {y.shape}")
    sq = np.sum((x - y) ** 2, axis=-1)
    return np.exp(-sq / gamma**2)


def expected_feature_dot(delta_norm, gamma: float) -> np.ndarray:
    """Expected dot product of two Fourier feature vectors under the
    N(0, gamma^-2) weight distribution: 0.5 * exp(-||d||^2 / (2 gamma^2)).

    Note this is not exp(-||d||^2 / gamma^2): the feature map's 1/sqrt(F)
    scaling contributes the 1/2 factor and the Gaussian characteristic
    function the 1/(2 gamma^2) exponent.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    d = np.asarray(delta_norm, dtype=np.float64)
    return 0.5 * np.exp(-(d**2) / (2.0 * gamma**2))


def shift_fn(delta, w_r) -> float:
    """Closed form of the Fourier feature dot product as a function of the
    position difference: (1/F) * sum(cos(delta @ w_r^T)) with F = 2 * rows(w_r).
    """
    delta = as_f64(delta, "delta")
    w_r = as_f64(w_r, "w_r")
    if delta.ndim != 1 or w_r.ndim != 2 or w_r.shape[1] != delta.shape[0]:
        raise ValueError(f"delta {delta.shape} does not match w_r {w_r.shape}")
    f = 2 * w_r.shape[0]
    return float(np.sum(np.cos(w_r @ delta)) / f)


@dataclass
class HeatmapGrid:
    """Dot-product similarities of one anchor position against a full grid."""

    height: int
    width: int
    anchor: tuple[int, int]
    values: np.ndarray

    def __post_init__(self):
        self.values = as_f64(self.values, "values")
        if self.values.shape != (self.height, self.width):
            raise ValueError(f"values shape {self.values.shape} != ({self.height}, {self.width})")
        r, c = self.anchor
        if not (0 <= r < self.height and 0 <= c < self.width):
            raise ValueError(f"anchor {self.anchor} outside {self.height}x{self.width} grid")


def _grid_positions(height: int, width: int, position_width: int) -> np.ndarray:
    rows, cols = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    if position_width == 2:
        return np.stack([rows.ravel(), cols.ravel()], axis=1).astype(np.float64)
    if position_width == 1:
        # scalar-position encoders see the raster-flattened index
        return (rows.ravel() * width + cols.ravel()).astype(np.float64).reshape(-1, 1)
    raise ValueError(
        f"similarity heatmaps need an encoder over 1 or 2 coordinates, got {position_width}"
    )


def similarity_heatmap(encoder: Encoder, height: int, width: int,
                       anchor: tuple[int, int], stage: str = "fourier") -> HeatmapGrid:
    """Dot-product similarity of ``anchor`` against every grid position.

    ``stage="fourier"`` analyzes the pre-MLP feature representation,
    ``stage="full"`` the final encoding. Encoders over a single coordinate
    (scalar-position baselines) see the raster-flattened grid index.
    """
    if stage not in ("fourier", "full"):
        raise ValueError(f"stage must be 'fourier' or 'full', got {stage!r}")
    r0, c0 = anchor
    if not (0 <= r0 < height and 0 <= c0 < width):
        raise ValueError(f"anchor {anchor} outside {height}x{width} grid")
    positions = _grid_positions(height, width, encoder.spec.position_width())
    reprs = encoder.fourier_stage(positions) if stage == "fourier" else encoder.encode(positions)
    values = reprs @ reprs[r0 * width + c0]
    return HeatmapGrid(height, width, (r0, c0), values.reshape(height, width))


def mean_heatmap(spec: EncoderSpec, height: int, width: int, anchor: tuple[int, int],
                 stage: str, n_seeds: int, rng: SeededRng) -> HeatmapGrid:
    """Average the heatmap over ``n_seeds`` fresh parameter initializations."""
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")
    total = None
    for child in rng.split(n_seeds):
        grid = similarity_heatmap(Encoder(spec, rng=child), height, width, anchor, stage)
        total = grid.values if total is None else total + grid.values
    return HeatmapGrid(height, width, anchor, total / n_seeds)


def _bilinear(values: np.ndarray, r: float, c: float) -> float:
    r0, c0 = int(np.floor(r)), int(np.floor(c))
    r1, c1 = min(r0 + 1, values.shape[0] - 1), min(c0 + 1, values.shape[1] - 1)
    fr, fc = r - r0, c - c0
    top = values[r0, c0] * (1 - fc) + values[r0, c1] * fc
    bot = values[r1, c0] * (1 - fc) + values[r1, c1] * fc
    return float(top * (1 - fr) + bot * fr)


def anisotropy_ratio(grid: HeatmapGrid, radius: float) -> float:
    """Mean similarity at the four axis-aligned offsets of ``radius`` divided
    by the mean at the four diagonal offsets of equal Euclidean radius.

    A similarity pattern that depends only on Euclidean distance gives a
    ratio of 1; an axis-favoring "cross" pattern gives a ratio above 1.
    Diagonal sample points generally fall between grid nodes and are
    bilinearly interpolated.
    """
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    r0, c0 = grid.anchor
    if not (radius <= r0 and radius <= c0 and r0 + radius < grid.height and c0 + radius < grid.width):
        raise ValueError(f"radius {radius} around anchor {grid.anchor} leaves the grid")
    axis = [
        grid.values[int(round(r0 - radius)), c0],
        grid.values[int(round(r0 + radius)), c0],
        grid.values[r0, int(round(c0 - radius))],
        grid.values[r0, int(round(c0 + radius))],
    ]
    d = radius / np.sqrt(2.0)
    diag = [
        _bilinear(grid.values, r0 + sr * d, c0 + sc * d)
        for sr in (-1.0, 1.0)
        for sc in (-1.0, 1.0)
    ]
    denom = float(np.mean(diag))
    if abs(denom) < 1e-12:
        raise ValueError("diagonal similarity is ~0; anisotropy ratio undefined")
    return float(np.mean(axis)) / denom


def probe_anchors(height: int, width: int) -> dict[str, tuple[int, int]]:
    """Five canonical anchor positions: near-corner probes and the center.

    On a 64x64 grid these are exactly (4,4), (4,57), (31,31), (57,4),
    (57,57); other grid sizes scale those positions proportionally.
    """
    def at(s: int, p: int) -> int:
        return min(s - 1, max(0, round((s - 1) * p / 63)))

    lo_r, mid_r, hi_r = at(height, 4), at(height, 31), at(height, 57)
    lo_c, mid_c, hi_c = at(width, 4), at(width, 31), at(width, 57)
    return {
        "top-left": (lo_r, lo_c),
        "top-right": (lo_r, hi_c),
        "center": (mid_r, mid_c),
        "bottom-left": (hi_r, lo_c),
        "bottom-right": (hi_r, hi_c),
    }


def write_pgm(path, values: np.ndarray) -> tuple[float, float]:
    """Write an 8-bit ASCII PGM (P2) with affine min-max scaling.

    Returns the (min, max) recorded for the sidecar metadata.
    """
    values = as_f64(values, "values")
    vmin, vmax = float(values.min()), float(values.max())
    if vmax > vmin:
        pixels = np.rint(255.0 * (values - vmin) / (vmax - vmin)).astype(np.int64)
    else:
        pixels = np.zeros(values.shape, dtype=np.int64)
    lines = ["P2", f"{values.shape[1]} {values.shape[0]}", "255"]
    lines += [" ".join(str(v) for v in row) for row in pixels]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return vmin, vmax
