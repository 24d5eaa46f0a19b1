"""Tests for the Fourier + MLP encoder and every baseline encoder."""

import math

import numpy as np
import pytest

from fourierpe.encoders import (
    Encoder,
    EncoderSpec,
    FourierConfig,
    UnseenPositionError,
    combine,
    embed_lookup,
    encode,
    fourier_features,
    init_embed_tables,
    init_fourier_params,
    init_mlp_only_params,
    md_sine,
    mlp_modulate,
    normalize_positions,
    sine_1d,
    sine_concat_md,
)
from fourierpe.numerics import SeededRng


def small_config(**kw):
    defaults = dict(fourier_dim=8, hidden_dim=4, output_dim=8, n_groups=2,
                    coords_per_group=2, gamma=1.0)
    defaults.update(kw)
    return FourierConfig(**defaults)


class TestFourierFeatures:
    def test_zero_position(self):
        w = SeededRng(0).normal(0, 1, (4, 3))
        out = fourier_features(np.zeros((1, 1, 3)), w)
        expect = np.concatenate([np.ones(4), np.zeros(4)]) / np.sqrt(8)
        assert np.allclose(out[0, 0], expect, atol=1e-15)

    def test_self_dot_half_per_group(self):
        rng = SeededRng(1)
        w = rng.normal(0, 1, (8, 2))
        x = rng.uniform(-10, 10, (5, 3, 2))
        feats = fourier_features(x, w)
        dots = np.sum(feats * feats, axis=-1)
        assert np.allclose(dots, 0.5, atol=1e-14)

    def test_quarter_turn(self):
        out = fourier_features(np.array([[[math.pi / 2]]]), np.array([[1.0]]))
        assert np.allclose(out[0, 0], [0.0, 1.0 / math.sqrt(2)], atol=1e-12)

    def test_cos_block_first(self):
        w = np.array([[1.0]])
        out = fourier_features(np.array([[[0.3]]]), w)
        assert out[0, 0, 0] == pytest.approx(math.cos(0.3) / math.sqrt(2))
        assert out[0, 0, 1] == pytest.approx(math.sin(0.3) / math.sqrt(2))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            fourier_features(np.zeros((2, 1, 3)), np.zeros((4, 2)))
        with pytest.raises(ValueError):
            fourier_features(np.zeros((2, 3)), np.zeros((4, 3)))

    def test_shift_invariance_property(self):
        rng = SeededRng(7)
        for m in (1, 2, 4):
            for _ in range(50):
                w = rng.normal(0, 1, (8, m))
                x = rng.uniform(-5, 5, m)
                y = rng.uniform(-5, 5, m)
                c = rng.uniform(-5, 5, m)
                batch = np.stack([x, y, x + c, y + c])[:, None, :]
                f = fourier_features(batch, w)[:, 0, :]
                assert abs(f[0] @ f[1] - f[2] @ f[3]) < 1e-9

    def test_kernel_expectation_monte_carlo(self):
        # mean dot over seeds approaches 0.5*exp(-|d|^2/(2 gamma^2))
        gamma = 2.0
        delta = np.array([1.0, 1.5])
        x = np.array([0.3, -0.2])
        dots = []
        for child in SeededRng(11).split(200):
            w = child.normal(0, 1 / gamma, (512, 2))
            f = fourier_features(np.stack([x, x - delta])[:, None, :], w)[:, 0, :]
            dots.append(f[0] @ f[1])
        dots = np.array(dots)
        expect = 0.5 * np.exp(-np.sum(delta**2) / (2 * gamma**2))
        se = dots.std(ddof=1) / np.sqrt(dots.size)
        assert abs(dots.mean() - expect) < 3 * se + 1e-12


class TestMlpModulate:
    def test_zero_hidden_weights_give_bias(self):
        cfg = small_config()
        rng = SeededRng(3)
        params = init_fourier_params(cfg, rng)
        params.w1 = np.zeros_like(params.w1)
        params.b1 = np.zeros_like(params.b1)
        params.b2 = rng.normal(0, 1, params.b2.shape)
        feats = rng.normal(0, 1, (3, 2, 8))
        out = mlp_modulate(feats, params, cfg)
        assert np.allclose(out, params.b2[None, None, :], atol=1e-15)

    def test_output_shape(self):
        cfg = small_config()
        params = init_fourier_params(cfg, SeededRng(0))
        out = mlp_modulate(np.zeros((3, 2, 8)), params, cfg)
        assert out.shape == (3, 2, 4)

    def test_scalar_pipeline_oracle(self):
        # single hidden unit, hand-set weights, checked against a scalar
        # re-computation with math.erf
        cfg = FourierConfig(fourier_dim=2, hidden_dim=1, output_dim=1,
                            n_groups=1, coords_per_group=1)
        params = init_fourier_params(cfg, SeededRng(0))
        params.w1 = np.array([[0.7], [-0.3]])
        params.b1 = np.array([0.2])
        params.w2 = np.array([[1.5]])
        params.b2 = np.array([-0.1])
        feats = np.array([[[0.4, 0.6]]])
        z = 0.4 * 0.7 + 0.6 * (-0.3) + 0.2
        g = z * 0.5 * (1 + math.erf(z / math.sqrt(2)))
        expect = g * 1.5 - 0.1
        out = mlp_modulate(feats, params, cfg)
        assert out[0, 0, 0] == pytest.approx(expect, abs=1e-14)

    def test_feature_width_mismatch(self):
        cfg = small_config()
        params = init_fourier_params(cfg, SeededRng(0))
        with pytest.raises(ValueError):
            mlp_modulate(np.zeros((3, 2, 6)), params, cfg)

    def test_dropout_needs_rng_in_train_mode(self):
        cfg = small_config(dropout=0.5)
        params = init_fourier_params(cfg, SeededRng(0))
        with pytest.raises(ValueError, match="rng"):
            mlp_modulate(np.zeros((2, 2, 8)), params, cfg, mode="train")


class TestEncode:
    def test_output_shape(self):
        cfg = FourierConfig(fourier_dim=8, hidden_dim=4, output_dim=8,
                            n_groups=2, coords_per_group=2)
        params = init_fourier_params(cfg, SeededRng(5))
        out = encode(SeededRng(6).uniform(-1, 1, (3, 2, 2)), params, cfg)
        assert out.shape == (3, 8)

    def test_single_group_equals_composed_stages(self):
        cfg = FourierConfig(fourier_dim=8, hidden_dim=4, output_dim=6,
                            n_groups=1, coords_per_group=2)
        params = init_fourier_params(cfg, SeededRng(5))
        x = SeededRng(6).uniform(-1, 1, (4, 1, 2))
        composed = mlp_modulate(fourier_features(x, params.w_r), params, cfg)
        assert np.allclose(encode(x, params, cfg), composed[:, 0, :], atol=1e-15)

    def test_identical_positions_identical_rows(self):
        cfg = small_config()
        params = init_fourier_params(cfg, SeededRng(5))
        x = np.tile(SeededRng(6).uniform(-1, 1, (1, 2, 2)), (2, 1, 1))
        out = encode(x, params, cfg)
        assert np.array_equal(out[0], out[1])

    def test_permutation_equivariance(self):
        cfg = small_config()
        params = init_fourier_params(cfg, SeededRng(5))
        x = SeededRng(6).uniform(-1, 1, (6, 2, 2))
        perm = SeededRng(7).permutation(6)
        assert np.array_equal(encode(x, params, cfg)[perm], encode(x[perm], params, cfg))

    def test_group_locality(self):
        cfg = FourierConfig(fourier_dim=8, hidden_dim=4, output_dim=12,
                            n_groups=3, coords_per_group=2)
        params = init_fourier_params(cfg, SeededRng(5))
        x = SeededRng(6).uniform(-1, 1, (2, 3, 2))
        base = encode(x, params, cfg)
        for g in range(3):
            bumped = x.copy()
            bumped[:, g, :] += 0.5
            out = encode(bumped, params, cfg)
            lo, hi = g * 4, (g + 1) * 4
            assert not np.allclose(out[:, lo:hi], base[:, lo:hi])
            mask = np.ones(12, dtype=bool)
            mask[lo:hi] = False
            assert np.array_equal(out[:, mask], base[:, mask])

    def test_wrong_batch_shape(self):
        cfg = small_config()
        params = init_fourier_params(cfg, SeededRng(0))
        with pytest.raises(ValueError):
            encode(np.zeros((3, 1, 2)), params, cfg)

    def test_dropout_train_vs_eval(self):
        cfg = small_config(dropout=0.4)
        params = init_fourier_params(cfg, SeededRng(0))
        x = SeededRng(1).uniform(-1, 1, (4, 2, 2))
        eval_out = encode(x, params, cfg, mode="eval")
        assert np.array_equal(eval_out, encode(x, params, cfg, mode="eval"))
        train_out = encode(x, params, cfg, mode="train", rng=SeededRng(2))
        assert not np.allclose(train_out, eval_out)


class TestInitParams:
    def test_wr_stddev_matches_gamma(self):
        cfg = FourierConfig(fourier_dim=4096, hidden_dim=4, output_dim=4,
                            n_groups=1, coords_per_group=2, gamma=1.0)
        params = init_fourier_params(cfg, SeededRng(0))
        assert abs(params.w_r.std() - 1.0) < 0.03

    def test_widget_gamma_preset_scale(self):
        cfg = FourierConfig(fourier_dim=4096, hidden_dim=4, output_dim=4,
                            n_groups=1, coords_per_group=2, gamma=100.0)
        params = init_fourier_params(cfg, SeededRng(0))
        assert abs(params.w_r.std() - 0.01) < 0.0003

    def test_biases_zero(self):
        params = init_fourier_params(small_config(), SeededRng(0))
        assert np.all(params.b1 == 0) and np.all(params.b2 == 0)

    def test_uniform_init(self):
        cfg = small_config(init="uniform", init_low=0.0, init_high=1.0, fourier_dim=2048)
        params = init_fourier_params(cfg, SeededRng(0))
        assert params.w_r.min() >= 0.0 and params.w_r.max() < 1.0
        assert abs(params.w_r.mean() - 0.5) < 0.02

    def test_layer_norm_params_created(self):
        params = init_fourier_params(small_config(layer_norm=True), SeededRng(0))
        assert params.ln1_gain.shape == (8,) and np.all(params.ln1_gain == 1.0)
        assert params.ln2_bias.shape == (4,) and np.all(params.ln2_bias == 0.0)

    def test_mlp_only_shapes(self):
        cfg = small_config()
        params = init_mlp_only_params(cfg, SeededRng(0))
        assert params.w_r is None
        assert params.w1.shape == (2, 4)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            small_config(fourier_dim=7)
        with pytest.raises(ValueError):
            small_config(output_dim=9, n_groups=2)
        with pytest.raises(ValueError):
            small_config(gamma=0.0)
        with pytest.raises(ValueError):
            small_config(dropout=1.0)
        with pytest.raises(ValueError):
            small_config(init="cauchy")


class TestSine1D:
    def test_zero_position_pattern(self):
        out = sine_1d(0.0, 8)
        assert np.array_equal(out, [0, 1, 0, 1, 0, 1, 0, 1])

    def test_position_one_lowest_frequency(self):
        out = sine_1d(1.0, 4)
        assert out[0] == pytest.approx(0.841471, abs=1e-6)   # sin(1)
        assert out[1] == pytest.approx(0.540302, abs=1e-6)   # cos(1)

    def test_wavelength_endpoint(self):
        # D=4, pair d=1: denominator 10000^(2/4) = 100, so p=100 -> angle 1
        out = sine_1d(100.0, 4)
        assert out[2] == pytest.approx(math.sin(1.0), abs=1e-12)
        assert out[3] == pytest.approx(math.cos(1.0), abs=1e-12)

    def test_odd_dim_rejected(self):
        with pytest.raises(ValueError):
            sine_1d(1.0, 7)

    def test_batched(self):
        out = sine_1d(np.array([0.0, 1.0, 2.0]), 6)
        assert out.shape == (3, 6)


class TestSineConcat:
    def test_zero_position(self):
        out = sine_concat_md(np.zeros(2), 8)
        block = sine_1d(0.0, 4)
        assert np.array_equal(out, np.concatenate([block, block]))

    def test_self_dot_is_half_output_dim(self):
        # sum over all dims of sin^2 + cos^2 = D/2 in the unnormalized layout
        rng = SeededRng(0)
        for m, d in ((2, 8), (4, 16)):
            x = rng.uniform(-20, 20, m)
            out = sine_concat_md(x, d)
            assert out @ out == pytest.approx(d / 2, abs=1e-10)

    def test_coordinate_major_blocks(self):
        x = np.array([3.0, 5.0])
        out = sine_concat_md(x, 8)
        assert np.array_equal(out[:4], sine_1d(3.0, 4))
        assert np.array_equal(out[4:], sine_1d(5.0, 4))

    def test_cross_pattern_margin(self):
        # axis offsets keep one coordinate block at full self-similarity, so
        # at equal Euclidean radius the axis similarity exceeds the diagonal
        # similarity; the margin is computed from the closed form
        d, r = 64, 8.0
        anchor = np.array([32.0, 32.0])
        axis = sine_concat_md(anchor + [r, 0.0], d)
        diag = sine_concat_md(anchor + [r / math.sqrt(2), r / math.sqrt(2)], d)
        ref = sine_concat_md(anchor, d)
        width = d // 2
        freqs = 10000.0 ** (-2.0 * np.arange(width // 2) / width)
        axis_expect = np.sum(np.cos(r * freqs)) + width / 2
        diag_expect = 2 * np.sum(np.cos(r / math.sqrt(2) * freqs))
        assert ref @ axis == pytest.approx(axis_expect, abs=1e-9)
        assert ref @ diag == pytest.approx(diag_expect, abs=1e-9)
        assert ref @ axis > ref @ diag + 1.0

    def test_divisibility_errors(self):
        with pytest.raises(ValueError):
            sine_concat_md(np.zeros(3), 8)   # 8 % 3 != 0
        with pytest.raises(ValueError):
            sine_concat_md(np.zeros(2), 6)   # block width 3 is odd

    def test_bases_length_checked(self):
        with pytest.raises(ValueError):
            sine_concat_md(np.zeros(2), 8, bases=(10000.0,))


class TestMDSine:
    def test_zero_position_pattern(self):
        assert np.array_equal(md_sine(np.zeros(2), 8), [0, 1, 0, 1, 0, 1, 0, 1])

    def test_lowest_pair_is_coordinate_sum(self):
        out = md_sine(np.array([0.7, 0.4]), 8)
        assert out[0] == pytest.approx(math.sin(1.1), abs=1e-12)
        assert out[1] == pytest.approx(math.cos(1.1), abs=1e-12)

    def test_one_one(self):
        out = md_sine(np.array([1.0, 1.0]), 4)
        assert out[0] == pytest.approx(0.909297, abs=1e-6)
        assert out[1] == pytest.approx(-0.416147, abs=1e-6)

    def test_unsupported_coordinate_count(self):
        with pytest.raises(ValueError):
            md_sine(np.zeros(3), 8)

    def test_distinct_bases_matter(self):
        a = md_sine(np.array([0.0, 2.0]), 8)
        b = md_sine(np.array([2.0, 0.0]), 8)
        assert not np.allclose(a, b)


class TestEmbed:
    def test_two_axis_output_width(self):
        tables = init_embed_tables((64, 64), (384, 384), SeededRng(0))
        out = embed_lookup(np.array([[3, 60]]), tables)
        assert out.shape == (1, 768)

    def test_zero_row_gives_zero_block(self):
        tables = init_embed_tables((4, 4), (3, 3), SeededRng(0))
        tables[0][0] = 0.0
        out = embed_lookup(np.array([0, 2]), tables)
        assert np.array_equal(out[:3], np.zeros(3))

    def test_flattened_single_table_shape(self):
        tables = init_embed_tables((64 * 64,), (768,), SeededRng(0))
        assert tables[0].shape == (4096, 768)

    def test_unseen_index_errors(self):
        tables = init_embed_tables((4, 4), (3, 3), SeededRng(0))
        with pytest.raises(UnseenPositionError):
            embed_lookup(np.array([[0, 4]]), tables)
        with pytest.raises(UnseenPositionError):
            embed_lookup(np.array([[-1, 0]]), tables)

    def test_clamp_mode(self):
        tables = init_embed_tables((4, 4), (3, 3), SeededRng(0))
        clamped = embed_lookup(np.array([[0, 9]]), tables, unseen="clamp")
        edge = embed_lookup(np.array([[0, 3]]), tables)
        assert np.array_equal(clamped, edge[None] if edge.ndim == 1 else edge)

    def test_purity(self):
        tables = init_embed_tables((5, 5), (4, 4), SeededRng(0))
        idx = np.array([[1, 2], [4, 0]])
        assert np.array_equal(embed_lookup(idx, tables), embed_lookup(idx, tables))


class TestCombine:
    def test_add_zero_content(self):
        pe = SeededRng(0).normal(0, 1, (3, 4))
        assert np.array_equal(combine(np.zeros((3, 4)), pe, "add"), pe)

    def test_concat_widths(self):
        out = combine(np.zeros((2, 128)), np.zeros((2, 64)), "concat")
        assert out.shape == (2, 192)

    def test_add_then_subtract_recovers(self):
        rng = SeededRng(1)
        content = rng.normal(0, 1, (3, 4))
        pe = rng.normal(0, 1, (3, 4))
        assert np.allclose(combine(content, pe, "add") - content, pe, rtol=0, atol=1e-15)

    def test_add_width_mismatch(self):
        with pytest.raises(ValueError):
            combine(np.zeros((2, 3)), np.zeros((2, 4)), "add")


class TestPositionPrep:
    def test_normalize_open_interval(self):
        vals = np.array([[0.0, 0.0], [63.0, 41.0]])
        out = normalize_positions(vals, [64.0, 42.0])
        assert np.all(out > 0) and np.all(out < 1)
        assert out[0, 0] == pytest.approx(0.5 / 64)

    def test_normalize_rejects_bad_extent(self):
        with pytest.raises(ValueError):
            normalize_positions(np.zeros((1, 2)), [0.0, 4.0])


class TestEncoderSpec:
    def test_sine_and_embed_purity_via_adapter(self):
        specs = [
            EncoderSpec(variant="sine_concat", output_dim=16, coords_per_group=2),
            EncoderSpec(variant="md_sine", output_dim=16, coords_per_group=2),
            EncoderSpec(variant="embed_nd", output_dim=16, vocab_sizes=(8, 8),
                        embed_widths=(8, 8)),
        ]
        pos = np.array([[1.0, 2.0], [7.0, 3.0]])
        for spec in specs:
            enc = Encoder(spec, rng=SeededRng(4)) if spec.has_params else Encoder(spec)
            assert np.array_equal(enc.encode(pos), enc.encode(pos))

    def test_zero_variant(self):
        enc = Encoder(EncoderSpec(variant="zero", output_dim=8))
        assert np.array_equal(enc.encode(np.ones((3, 2))), np.zeros((3, 8)))

    def test_fourier_adapter_output(self):
        spec = EncoderSpec(variant="learnable_fourier", output_dim=8, fourier_dim=8,
                           hidden_dim=4, n_groups=2, coords_per_group=2)
        enc = Encoder(spec, rng=SeededRng(2))
        out = enc.encode(np.ones((3, 4)))
        assert out.shape == (3, 8)
        stage = enc.fourier_stage(np.ones((3, 4)))
        assert stage.shape == (3, 16)

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            EncoderSpec(variant="nope", output_dim=8)

    def test_embed_width_sum_checked(self):
        with pytest.raises(ValueError):
            EncoderSpec(variant="embed_nd", output_dim=10, vocab_sizes=(4, 4),
                        embed_widths=(4, 4))

    def test_variant_output_dims_comparable(self):
        d = 16
        specs = [
            EncoderSpec(variant="learnable_fourier", output_dim=d, fourier_dim=8,
                        hidden_dim=4, coords_per_group=2),
            EncoderSpec(variant="sine_concat", output_dim=d, coords_per_group=2),
            EncoderSpec(variant="zero", output_dim=d),
        ]
        pos = np.array([[1.0, 2.0]])
        for spec in specs:
            enc = Encoder(spec, rng=SeededRng(0)) if spec.has_params else Encoder(spec)
            assert enc.encode(pos).shape == (1, d)
