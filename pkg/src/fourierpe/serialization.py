"""File formats: flat key=value encoder configs, binary checkpoints, CSV.

The checkpoint container is self-describing: a magic tag, a UTF-8 header
holding the encoder spec as key=value lines, then named tensors as
(name, shape, little-endian float64 payload) records.
"""

from __future__ import annotations

import struct
from dataclasses import fields

import numpy as np

from .encoders import EncoderSpec

__all__ = [
    "spec_to_kv",
    "spec_from_kv",
    "load_spec",
    "save_spec",
    "save_checkpoint",
    "load_checkpoint",
    "positions_header",
    "load_positions_csv",
    "write_matrix_csv",
]

MAGIC = b"FPE1"

_BOOL_FIELDS = {"layer_norm"}
_INT_FIELDS = {"output_dim", "fourier_dim", "hidden_dim", "n_groups", "coords_per_group"}
_FLOAT_FIELDS = {"gamma", "init_low", "init_high", "dropout", "coord_scale"}
_STR_FIELDS = {"variant", "init", "unseen"}
_FLOAT_TUPLE_FIELDS = {"bases"}
_INT_TUPLE_FIELDS = {"vocab_sizes", "embed_widths"}

_FIELD_ORDER = [f.name for f in fields(EncoderSpec)]


def _format_value(name: str, value) -> str:
    if name in _BOOL_FIELDS:
        return "true" if value else "false"
    if name in _FLOAT_FIELDS:
        return repr(float(value))
    if name in _FLOAT_TUPLE_FIELDS:
        return ",".join(repr(float(v)) for v in value)
    if name in _INT_TUPLE_FIELDS:
        return ",".join(str(int(v)) for v in value)
    return str(value)


def _parse_value(name: str, raw: str):
    if name in _BOOL_FIELDS:
        if raw not in ("true", "false"):
            raise ValueError(f"expected true/false for {name}, got {raw!r}")
        return raw == "true"
    if name in _INT_FIELDS:
        return int(raw)
    if name in _FLOAT_FIELDS:
        return float(raw)
    if name in _FLOAT_TUPLE_FIELDS:
        return tuple(float(v) for v in raw.split(",")) if raw else ()
    if name in _INT_TUPLE_FIELDS:
        return tuple(int(v) for v in raw.split(",")) if raw else ()
    return raw


def spec_to_kv(spec: EncoderSpec) -> str:
    """Serialize a spec as canonical key=value lines (every field explicit)."""
    lines = [f"{name}={_format_value(name, getattr(spec, name))}" for name in _FIELD_ORDER]
    return "\n".join(lines) + "\n"


def spec_from_kv(text: str) -> EncoderSpec:
    """Parse key=value lines into an :class:`EncoderSpec`.

    Unknown keys and malformed lines are errors (reported with their line
    number). Omitted optional fields keep their documented defaults
    (layer_norm=false, dropout=0, init=normal, coord_scale=1, ...).
    """
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _FIELD_ORDER:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        if key in values:
            raise ValueError(f"line {lineno}: duplicate config key {key!r}")
        try:
            values[key] = _parse_value(key, raw)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if "variant" not in values:
        raise ValueError("config is missing the required 'variant' key")
    if "output_dim" not in values:
        raise ValueError("config is missing the required 'output_dim' key")
    return EncoderSpec(**values)


def save_spec(path, spec: EncoderSpec) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(spec_to_kv(spec))


def load_spec(path) -> EncoderSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return spec_from_kv(fh.read())


def save_checkpoint(path, spec: EncoderSpec, tensors: dict[str, np.ndarray]) -> None:
    """Write the self-describing binary parameter container."""
    header = spec_to_kv(spec).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(struct.pack("<I", len(tensors)))
        for name, arr in tensors.items():
            arr = np.ascontiguousarray(arr, dtype="<f8")
            name_b = name.encode("utf-8")
            fh.write(struct.pack("<I", len(name_b)))
            fh.write(name_b)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            fh.write(arr.tobytes())


def load_checkpoint(path) -> tuple[EncoderSpec, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise ValueError(f"{path}: not a parameter checkpoint (bad magic)")
    off = 4

    def take(fmt: str):
        nonlocal off
        size = struct.calcsize(fmt)
        if off + size > len(blob):
            raise ValueError(f"{path}: truncated checkpoint")
        out = struct.unpack_from(fmt, blob, off)
        off += size
        return out

    (hlen,) = take("<I")
    header = blob[off:off + hlen].decode("utf-8")
    off += hlen
    spec = spec_from_kv(header)
    (count,) = take("<I")
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (nlen,) = take("<I")
        name = blob[off:off + nlen].decode("utf-8")
        off += nlen
        (ndim,) = take("<I")
        shape = take(f"<{ndim}Q")
        n_items = int(np.prod(shape)) if ndim else 1
        nbytes = 8 * n_items
        if off + nbytes > len(blob):
            raise ValueError(f"{path}: truncated tensor payload for {name!r}")
        arr = np.frombuffer(blob, dtype="<f8", count=n_items, offset=off).reshape(shape)
        off += nbytes
        tensors[name] = np.array(arr)  # own, writable copy
    return spec, tensors


def positions_header(n_groups: int, coords_per_group: int) -> list[str]:
    return [f"g{g}m{m}" for g in range(n_groups) for m in range(coords_per_group)]


def load_positions_csv(path, expected_columns: int | None = None) -> np.ndarray:
    """Read a positions CSV: a header row, then one position per row.

    Malformed rows are reported with their 1-based line number.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty positions file")
    header = [c.strip() for c in lines[0].split(",")]
    n_cols = expected_columns if expected_columns is not None else len(header)
    if len(header) != n_cols:
        raise ValueError(f"{path} line 1: expected {n_cols} header columns, found {len(header)}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != n_cols:
            raise ValueError(f"{path} line {lineno}: expected {n_cols} columns, found {len(cells)}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise ValueError(f"{path} line {lineno}: non-numeric value in {line!r}") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return np.asarray(rows, dtype=np.float64)


def write_matrix_csv(path, values: np.ndarray, header: list[str] | None = None) -> None:
    """Write a 2-D array as CSV with full float64 round-trip precision."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {values.shape}")
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            if len(header) != values.shape[1]:
                raise ValueError(f"header has {len(header)} columns, data has {values.shape[1]}")
            fh.write(",".join(header) + "\n")
        for row in values:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
