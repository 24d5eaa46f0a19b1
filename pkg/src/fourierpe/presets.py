"""Named encoder configurations used throughout the benchmarks and the CLI.

The two ``reformer-*`` presets intentionally coexist: the published settings
for the same image-generation experiment disagree on the Fourier width (384
in one place, 768 with layer norm in another), so both readings are exposed
rather than silently picking one.
"""

from __future__ import annotations

from dataclasses import dataclass

from .encoders import EncoderSpec

__all__ = ["Preset", "PRESETS", "get_preset", "preset_names"]


@dataclass(frozen=True)
class Preset:
    name: str
    spec: EncoderSpec
    provenance: str


def _p(name: str, spec: EncoderSpec, provenance: str) -> tuple[str, Preset]:
    return name, Preset(name, spec, provenance)


PRESETS: dict[str, Preset] = dict(
    [
        _p(
            "reformer-s41",
            EncoderSpec(
                variant="learnable_fourier",
                output_dim=768,
                fourier_dim=384,
                hidden_dim=32,
                n_groups=1,
                coords_per_group=2,
                gamma=1.0,
            ),
            "image generation on 64x64 grids; narrow reading of the published "
            "hyperparameters (F=384, H=32, D=768, gamma=1).",
        ),
        _p(
            "reformer-apxD",
            EncoderSpec(
                variant="learnable_fourier",
                output_dim=768,
                fourier_dim=768,
                hidden_dim=32,
                n_groups=1,
                coords_per_group=2,
                gamma=1.0,
                layer_norm=True,
            ),
            "image generation on 64x64 grids; wide reading (F=768 with layer "
            "norm before each dense projection). Kept separate from "
            "reformer-s41 because the two published values conflict.",
        ),
        _p(
            "detr",
            EncoderSpec(
                variant="learnable_fourier",
                output_dim=256,
                fourier_dim=256,
                hidden_dim=256,
                n_groups=1,
                coords_per_group=2,
                gamma=1.0,
            ),
            "object detection over a 42x42 feature grid; hidden width 256 with "
            "GeLU, gamma=1. The Fourier width is this library's choice (the "
            "source states only the MLP width and gamma).",
        ),
        _p(
            "widget-1-4",
            EncoderSpec(
                variant="learnable_fourier",
                output_dim=128,
                fourier_dim=128,
                hidden_dim=32,
                n_groups=1,
                coords_per_group=4,
                gamma=100.0,
                dropout=0.2,
            ),
            "UI bounding boxes, all four coordinates in one group (F=128, G=1, "
            "gamma=100, 20% dropout after the activation). D=128 and H=32 are "
            "this library's choices.",
        ),
        _p(
            "widget-2-2",
            EncoderSpec(
                variant="learnable_fourier",
                output_dim=128,
                fourier_dim=64,
                hidden_dim=32,
                n_groups=2,
                coords_per_group=2,
                gamma=100.0,
                dropout=0.2,
            ),
            "UI bounding boxes split into corner pairs (F=64, G=2, gamma=100, "
            "20% dropout after the activation).",
        ),
        _p(
            "widget-4-1",
            EncoderSpec(
                variant="learnable_fourier",
                output_dim=128,
                fourier_dim=32,
                hidden_dim=32,
                n_groups=4,
                coords_per_group=1,
                gamma=100.0,
                dropout=0.2,
            ),
            "UI bounding boxes with one group per coordinate (F=32, G=4, "
            "gamma=100, 20% dropout after the activation).",
        ),
        _p(
            "sine-2d",
            EncoderSpec(
                variant="sine_concat",
                output_dim=768,
                coords_per_group=2,
            ),
            "per-axis fixed sinusoids concatenated; the standard 2-D baseline.",
        ),
        _p(
            "md-sine",
            EncoderSpec(
                variant="md_sine",
                output_dim=768,
                coords_per_group=2,
                bases=(10000.0, 5000.0),
            ),
            "fixed sinusoids mixing both axes inside the phase with bases "
            "10000/5000.",
        ),
        _p(
            "embed-2d",
            EncoderSpec(
                variant="embed_nd",
                output_dim=768,
                vocab_sizes=(64, 64),
                embed_widths=(384, 384),
            ),
            "per-axis trainable embeddings for a 64x64 grid ([64,384] twice).",
        ),
        _p(
            "embed-1d",
            EncoderSpec(
                variant="embed_nd",
                output_dim=768,
                vocab_sizes=(4096,),
                embed_widths=(768,),
            ),
            "one trainable embedding per flattened 64x64 position ([4096,768]).",
        ),
        _p(
            "toy-fourier",
            EncoderSpec(
                variant="learnable_fourier",
                output_dim=32,
                fourier_dim=64,
                hidden_dim=32,
                n_groups=1,
                coords_per_group=2,
                gamma=6.0,
            ),
            "desk-scale encoder for the 16x16 retrieval benchmark.",
        ),
        _p(
            "toy-fixed-fourier",
            EncoderSpec(
                variant="fixed_fourier",
                output_dim=32,
                fourier_dim=64,
                hidden_dim=32,
                n_groups=1,
                coords_per_group=2,
                gamma=6.0,
            ),
            "toy-fourier with frozen Fourier weights (only the MLP trains).",
        ),
        _p(
            "toy-embed",
            EncoderSpec(
                variant="embed_nd",
                output_dim=32,
                vocab_sizes=(16, 16),
                embed_widths=(16, 16),
                unseen="clamp",
            ),
            "per-axis embeddings covering the full 16x16 retrieval grid; rows "
            "in the held-out band exist in the table but never train.",
        ),
        _p(
            "toy-sine",
            EncoderSpec(
                variant="sine_concat",
                output_dim=32,
                coords_per_group=2,
            ),
            "fixed per-axis sinusoids sized for the retrieval benchmark.",
        ),
        _p(
            "toy-zero",
            EncoderSpec(variant="zero", output_dim=32),
            "no positional information; control for position-only tasks.",
        ),
    ]
)


def preset_names() -> list[str]:
    return list(PRESETS)


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None
