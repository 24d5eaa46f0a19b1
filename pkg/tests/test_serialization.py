"""Tests for config files, binary checkpoints, and CSV formats."""

import numpy as np
import pytest

from fourierpe.encoders import Encoder, EncoderSpec
from fourierpe.numerics import SeededRng
from fourierpe.presets import PRESETS
from fourierpe.serialization import (
    load_checkpoint,
    load_positions_csv,
    positions_header,
    save_checkpoint,
    spec_from_kv,
    spec_to_kv,
    write_matrix_csv,
)


class TestSpecRoundTrip:
    @pytest.mark.parametrize("name", list(PRESETS))
    def test_every_preset_round_trips(self, name):
        spec = PRESETS[name].spec
        assert spec_from_kv(spec_to_kv(spec)) == spec

    def test_round_trip_is_stable_text(self):
        spec = PRESETS["widget-2-2"].spec
        text = spec_to_kv(spec)
        assert spec_to_kv(spec_from_kv(text)) == text

    def test_defaults_documented(self):
        spec = spec_from_kv(
            "variant=learnable_fourier\noutput_dim=8\nfourier_dim=4\n"
            "hidden_dim=2\nn_groups=1\ncoords_per_group=2\n"
        )
        assert spec.layer_norm is False
        assert spec.dropout == 0.0
        assert spec.init == "normal"

    def test_unknown_key_names_line(self):
        with pytest.raises(ValueError, match="line 2"):
            spec_from_kv("variant=zero\nbogus=1\noutput_dim=4\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            spec_from_kv("variant=zero\noutput_dim=4\noutput_dim=5\n")

    def test_missing_variant(self):
        with pytest.raises(ValueError, match="variant"):
            spec_from_kv("output_dim=4\n")

    def test_malformed_line(self):
        with pytest.raises(ValueError, match="line 1"):
            spec_from_kv("not a config\n")

    def test_comments_and_blanks_ignored(self):
        spec = spec_from_kv("# comment\n\nvariant=zero\noutput_dim=4\n")
        assert spec.variant == "zero"

    def test_tuples_round_trip(self):
        spec = EncoderSpec(variant="md_sine", output_dim=8, coords_per_group=2,
                           bases=(10000.0, 5000.0))
        back = spec_from_kv(spec_to_kv(spec))
        assert back.bases == (10000.0, 5000.0)


class TestCheckpoint:
    def test_round_trip_bits(self, tmp_path):
        spec = PRESETS["widget-2-2"].spec
        enc = Encoder(spec, rng=SeededRng(3))
        path = tmp_path / "ck.fpe"
        save_checkpoint(path, spec, enc.tensors())
        spec2, tensors = load_checkpoint(path)
        assert spec2 == spec
        for name, arr in enc.tensors().items():
            assert np.array_equal(tensors[name], arr)
        enc2 = Encoder.from_tensors(spec2, tensors)
        pos = SeededRng(4).uniform(0, 1, (3, 4))
        assert np.array_equal(enc.encode(pos), enc2.encode(pos))

    def test_embed_tables_round_trip(self, tmp_path):
        spec = EncoderSpec(variant="embed_nd", output_dim=8, vocab_sizes=(4, 4),
                           embed_widths=(4, 4))
        enc = Encoder(spec, rng=SeededRng(5))
        path = tmp_path / "emb.fpe"
        save_checkpoint(path, spec, enc.tensors())
        spec2, tensors = load_checkpoint(path)
        enc2 = Encoder.from_tensors(spec2, tensors)
        idx = np.array([[0, 3], [2, 1]], dtype=float)
        assert np.array_equal(enc.encode(idx), enc2.encode(idx))

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.fpe"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(ValueError, match="magic"):
            load_checkpoint(path)

    def test_truncated(self, tmp_path):
        spec = EncoderSpec(variant="zero", output_dim=4)
        path = tmp_path / "t.fpe"
        save_checkpoint(path, spec, {"x": np.ones((3, 3))})
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) - 10])
        with pytest.raises(ValueError, match="truncated"):
            load_checkpoint(path)

    def test_loaded_tensors_writable(self, tmp_path):
        spec = EncoderSpec(variant="zero", output_dim=4)
        path = tmp_path / "w.fpe"
        save_checkpoint(path, spec, {"x": np.arange(4.0)})
        _, tensors = load_checkpoint(path)
        tensors["x"][0] = 99.0  # must not raise


class TestPositionsCsv:
    def test_header_and_rows(self, tmp_path):
        path = tmp_path / "pos.csv"
        path.write_text("g0m0,g0m1\n0,1\n2.5,3.5\n")
        out = load_positions_csv(path, expected_columns=2)
        assert np.array_equal(out, [[0.0, 1.0], [2.5, 3.5]])

    def test_wrong_column_count_names_line(self, tmp_path):
        path = tmp_path / "pos.csv"
        path.write_text("g0m0,g0m1\n0,1\n2.5\n")
        with pytest.raises(ValueError, match="line 3"):
            load_positions_csv(path, expected_columns=2)

    def test_non_numeric_names_line(self, tmp_path):
        path = tmp_path / "pos.csv"
        path.write_text("g0m0,g0m1\nxx,1\n")
        with pytest.raises(ValueError, match="line 2"):
            load_positions_csv(path, expected_columns=2)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "pos.csv"
        path.write_text("")
        with pytest.raises(ValueError, match="empty"):
            load_positions_csv(path)

    def test_header_mismatch(self, tmp_path):
        path = tmp_path / "pos.csv"
        path.write_text("g0m0\n1\n")
        with pytest.raises(ValueError, match="line 1"):
            load_positions_csv(path, expected_columns=2)

    def test_positions_header_layout(self):
        assert positions_header(2, 2) == ["g0m0", "g0m1", "g1m0", "g1m1"]


class TestMatrixCsv:
    def test_full_precision_round_trip(self, tmp_path):
        path = tmp_path / "m.csv"
        values = SeededRng(0).normal(0, 1, (4, 3))
        write_matrix_csv(path, values, header=["a", "b", "c"])
        lines = path.read_text().splitlines()
        assert lines[0] == "a,b,c"
        back = np.array([[float(c) for c in ln.split(",")] for ln in lines[1:]])
        assert np.array_equal(back, values)

    def test_header_width_checked(self, tmp_path):
        with pytest.raises(ValueError):
            write_matrix_csv(tmp_path / "m.csv", np.zeros((2, 3)), header=["a"])
