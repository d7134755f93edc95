"""Frequency attention / feed-forward blocks and the U-shaped restorer."""

import numpy as np
import pytest

import hdft.autodiff as ad
from hdft import blocks, ops
from hdft.blocks import BlockConfig, RestorerConfig


def _named_rngs(seed):
    import hashlib

    def rng_for(name):
        digest = hashlib.sha256(f"{seed}:{name}".encode()).digest()
        return np.random.default_rng(int.from_bytes(digest[:8], "little"))

    return rng_for


def identity_1x1(c):
    k = np.zeros((c, c, 1, 1))
    for i in range(c):
        k[i, i] = 1.0
    return k


def lift(params):
    return ad.lift(params, requires_grad=False)


class TestHfa:
    def test_zero_output_projection_is_identity(self, rng):
        x = rng.standard_normal((3, 8, 8))
        p = blocks.hfa_init(3, _named_rngs(0))
        out = blocks.hfa_forward(ad.Var(x), lift(p))
        np.testing.assert_array_equal(out.value, x)

    def test_shape_contract(self, rng):
        x = rng.standard_normal((3, 8, 8))
        p = {k: v + 0.1 for k, v in blocks.hfa_init(3, _named_rngs(0)).items()}
        assert blocks.hfa_forward(ad.Var(x), lift(p)).shape == (3, 8, 8)

    def test_identity_weights_constant_input_closed_form(self):
        c, h, w = 2, 4, 4
        const = 0.3
        p = {k: identity_1x1(c) for k in ("wq", "wk", "wv", "wo")}
        x = np.full((c, h, w), const)
        out = blocks.hfa_forward(ad.Var(x), lift(p))
        expect = const / (h * w) + const
        np.testing.assert_allclose(out.value, np.full((c, h, w), expect), atol=1e-12)

    def test_matches_independent_recompute(self, rng):
        """Rebuild the whole attention path with raw numpy primitives."""
        c, h, w = 2, 6, 6
        x = rng.standard_normal((c, h, w))
        p = {k: rng.standard_normal((c, c, 1, 1)) * 0.3 for k in ("wq", "wk", "wv", "wo")}
        got = blocks.hfa_forward(ad.Var(x), lift(p)).value

        def mix(img, kernel):
            return np.einsum("oi,ihw->ohw", kernel[:, :, 0, 0], img)

        q, k, v = mix(x, p["wq"]), mix(x, p["wk"]), mix(x, p["wv"])
        mixed = np.fft.ifft2(np.fft.fft2(q) * np.fft.fft2(k)).real
        flat = mixed.reshape(c, -1)
        e = np.exp(flat - flat.max(axis=1, keepdims=True))
        gate = (e / e.sum(axis=1, keepdims=True)).reshape(c, h, w)
        expect = mix(gate * v, p["wo"]) + x
        np.testing.assert_allclose(got, expect, atol=1e-12)

    def test_gate_sums_to_one_per_channel(self, rng):
        c, h, w = 3, 8, 8
        x = rng.standard_normal((c, h, w))
        p = {k: rng.standard_normal((c, c, 1, 1)) * 0.2 for k in ("wq", "wk", "wv", "wo")}
        q = ops.conv2d(x, p["wq"])
        k = ops.conv2d(x, p["wk"])
        mixed = ops.ifft2(ops.complex_hadamard(ops.fft2(q), ops.fft2(k))).real
        gate = ops.softmax(mixed.reshape(c, -1), 1)
        np.testing.assert_allclose(gate.sum(axis=1), np.ones(c), atol=1e-9)


class TestDfffn:
    def _identity_pair_params(self, c, window):
        eye = identity_1x1(c)
        return {
            "expand": np.concatenate([eye, eye], axis=0),
            "reduce": 0.5 * np.concatenate([eye, eye], axis=1),
            "mask_re": np.ones((2 * c, window, window)),
            "mask_im": np.zeros((2 * c, window, window)),
        }

    def test_unit_mask_is_identity_filter(self, rng):
        cfg = BlockConfig(window=4)
        x = rng.standard_normal((2, 8, 8))
        p = self._identity_pair_params(2, 4)
        out = blocks.dfffn_forward(ad.Var(x), lift(p), "", cfg)
        np.testing.assert_allclose(out.value, 2.0 * x, atol=1e-12)

    def test_zero_mask_leaves_residual_only(self, rng):
        cfg = BlockConfig(window=4)
        x = rng.standard_normal((2, 8, 8))
        p = blocks.dfffn_init(2, _named_rngs(0), "", cfg)
        p["mask_re"] = np.zeros_like(p["mask_re"])
        out = blocks.dfffn_forward(ad.Var(x), lift(p), "", cfg)
        np.testing.assert_allclose(out.value, x, atol=1e-12)

    def test_residual_flag_off(self, rng):
        cfg = BlockConfig(window=4, ffn_residual=False)
        x = rng.standard_normal((2, 8, 8))
        p = self._identity_pair_params(2, 4)
        out = blocks.dfffn_forward(ad.Var(x), lift(p), "", cfg)
        np.testing.assert_allclose(out.value, x, atol=1e-12)

    def test_dc_only_mask_gives_window_means(self, rng):
        cfg = BlockConfig(window=4)
        x = rng.standard_normal((2, 8, 8))
        p = self._identity_pair_params(2, 4)
        p["mask_re"] = np.zeros_like(p["mask_re"])
        p["mask_re"][:, 0, 0] = 1.0
        path = blocks.dfffn_filter(ad.Var(x), lift(p), "", cfg).value
        for c in range(2):
            for bi in range(2):
                for bj in range(2):
                    tile = x[c, 4 * bi : 4 * bi + 4, 4 * bj : 4 * bj + 4]
                    got = path[c, 4 * bi : 4 * bi + 4, 4 * bj : 4 * bj + 4]
                    np.testing.assert_allclose(got, np.full((4, 4), tile.mean()), atol=1e-12)


class TestHdfBlock:
    def test_shape_preserved(self, rng):
        cfg = BlockConfig(window=8)
        x = rng.standard_normal((3, 16, 16))
        p = blocks.hdf_block_init(3, _named_rngs(0), "", cfg)
        assert blocks.hdf_block(ad.Var(x), lift(p), "", cfg).shape == (3, 16, 16)

    def test_zero_projections_make_identity(self, rng):
        cfg = BlockConfig(window=4)
        x = rng.standard_normal((3, 8, 8))
        p = blocks.hdf_block_init(3, _named_rngs(0), "", cfg)
        p["ffn/reduce"] = np.zeros_like(p["ffn/reduce"])  # wo starts at zero already
        out = blocks.hdf_block(ad.Var(x), lift(p), "", cfg)
        np.testing.assert_array_equal(out.value, x)

    def test_deterministic(self, rng):
        cfg = BlockConfig(window=4)
        x = rng.standard_normal((3, 8, 8))
        p = {k: v + 0.05 for k, v in blocks.hdf_block_init(3, _named_rngs(0), "", cfg).items()}
        a = blocks.hdf_block(ad.Var(x), lift(p), "", cfg).value
        b = blocks.hdf_block(ad.Var(x), lift(p), "", cfg).value
        np.testing.assert_array_equal(a, b)


class TestRestorer:
    def test_shape_contract(self, rng):
        cfg = RestorerConfig(width=4, block=BlockConfig(window=4))
        x = rng.random((3, 32, 32))
        p = blocks.restorer_init(cfg, _named_rngs(0))
        assert blocks.restorer_forward(ad.Var(x), lift(p), "", cfg).shape == (3, 32, 32)

    def test_zero_exit_is_identity(self, rng):
        cfg = RestorerConfig(width=4, block=BlockConfig(window=4))
        x = rng.random((3, 16, 16))
        p = blocks.restorer_init(cfg, _named_rngs(0))
        out = blocks.restorer_forward(ad.Var(x), lift(p), "", cfg)
        np.testing.assert_array_equal(out.value, x)

    def test_odd_sizes_accepted(self, rng):
        cfg = RestorerConfig(width=4, block=BlockConfig(window=4))
        x = rng.random((3, 13, 11))
        p = blocks.restorer_init(cfg, _named_rngs(0))
        assert blocks.restorer_forward(ad.Var(x), lift(p), "", cfg).shape == (3, 13, 11)

    def test_too_small_rejected(self, rng):
        cfg = RestorerConfig(width=4)
        p = blocks.restorer_init(cfg, _named_rngs(0))
        with pytest.raises(ValueError):
            blocks.restorer_forward(ad.Var(rng.random((3, 3, 8))), lift(p), "", cfg)


class TestConvBaseline:
    def test_shape_and_identity(self, rng):
        cfg = RestorerConfig(width=4, kind="conv")
        x = rng.random((3, 16, 16))
        p = blocks.restorer_init(cfg, _named_rngs(0))
        out = blocks.restorer_forward(ad.Var(x), lift(p), "", cfg)
        assert out.shape == (3, 16, 16)
        np.testing.assert_array_equal(out.value, x)

    def test_fewer_params_than_hdf_twin(self):
        hdf = RestorerConfig(width=16)
        conv = RestorerConfig(width=16, kind="conv")
        n_hdf = blocks.n_params(blocks.restorer_init(hdf, _named_rngs(0)))
        n_conv = blocks.n_params(blocks.restorer_init(conv, _named_rngs(0)))
        assert n_conv < n_hdf
