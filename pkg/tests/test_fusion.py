"""Two-exposure fusion: convexity, weight normalization, symmetry."""

import hashlib

import numpy as np

import hdft.autodiff as ad
from hdft import fusion


def _rng_for(seed):
    def inner(name):
        digest = hashlib.sha256(f"{seed}:{name}".encode()).digest()
        return np.random.default_rng(int.from_bytes(digest[:8], "little"))

    return inner


def _graph(i1, i2, params):
    return fusion.fuse_pair_graph(ad.Var(i1), ad.Var(i2), ad.lift(params, False))


class TestFusePair:
    def test_identical_inputs_pass_through(self, rng):
        img = rng.random((3, 16, 16))
        params = fusion.fusion_init(_rng_for(3))
        fused, _ = _graph(img, img.copy(), params)
        np.testing.assert_allclose(fused.value, img, atol=1e-12)

    def test_bias_can_force_one_source(self, rng):
        i1, i2 = rng.random((2, 3, 16, 16))
        params = fusion.fusion_init(_rng_for(3))
        params["fusion/head/w"] = np.zeros_like(params["fusion/head/w"])
        params["fusion/head/b"] = np.array([30.0, -30.0])
        fused, weights = _graph(i1, i2, params)
        np.testing.assert_allclose(fused.value, i1, atol=1e-10)
        np.testing.assert_allclose(weights.value[0], np.ones((16, 16)), atol=1e-10)

    def test_output_inside_pixelwise_envelope(self, rng):
        params = fusion.fusion_init(_rng_for(7))
        for _ in range(10):
            i1, i2 = rng.random((2, 3, 8, 8))
            fused, _ = _graph(i1, i2, params)
            lo = np.minimum(i1, i2) - 1e-12
            hi = np.maximum(i1, i2) + 1e-12
            assert np.all(fused.value >= lo) and np.all(fused.value <= hi)

    def test_weights_are_partition_of_unity(self, rng):
        i1, i2 = rng.random((2, 3, 12, 12))
        params = fusion.fusion_init(_rng_for(5))
        _, weights = _graph(i1, i2, params)
        assert np.all(weights.value >= 0)
        np.testing.assert_allclose(weights.value.sum(axis=0), np.ones((12, 12)), atol=1e-12)

    def test_swap_symmetry(self, rng):
        """Swapping the sources while swapping the role of the two
        attention maps (and the stacked input channels) leaves the fused
        image unchanged."""
        i1, i2 = rng.random((2, 3, 8, 8))
        params = fusion.fusion_init(_rng_for(11))
        swapped = dict(params)
        w0 = params["fusion/feat0/w"]
        swapped["fusion/feat0/w"] = np.concatenate([w0[:, 3:], w0[:, :3]], axis=1)
        swapped["fusion/head/w"] = params["fusion/head/w"][::-1].copy()
        swapped["fusion/head/b"] = params["fusion/head/b"][::-1].copy()
        a, _ = _graph(i1, i2, params)
        b, _ = _graph(i2, i1, swapped)
        np.testing.assert_allclose(a.value, b.value, atol=1e-12)

    def test_inference_entry_clamps(self, rng):
        i1, i2 = rng.random((2, 3, 8, 8))
        params = fusion.fusion_init(_rng_for(3))
        out = fusion.fuse_pair(i1, i2, params)
        assert out.shape == (3, 8, 8)
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_size_mismatch_rejected(self, rng):
        params = fusion.fusion_init(_rng_for(3))
        i1 = rng.random((3, 8, 8))
        i2 = rng.random((3, 8, 9))
        try:
            _graph(i1, i2, params)
        except ValueError:
            return
        raise AssertionError("mismatched sizes were accepted")
