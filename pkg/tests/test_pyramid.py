"""Band decomposition: smoothing, resampling, exact reconstruction."""

import numpy as np
import pytest

from hdft import pyramid

TAPS = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


def blur_loop(x):
    """Separable 5-tap smoothing with replicated borders, by explicit loops."""
    c, h, w = x.shape
    out = np.zeros_like(x)
    for ci in range(c):
        tmp = np.zeros((h, w))
        for i in range(h):
            for j in range(w):
                tmp[i, j] = sum(
                    TAPS[t] * x[ci, min(max(i + t - 2, 0), h - 1), j] for t in range(5)
                )
        for i in range(h):
            for j in range(w):
                out[ci, i, j] = sum(
                    TAPS[t] * tmp[i, min(max(j + t - 2, 0), w - 1)] for t in range(5)
                )
    return out


class TestGaussianBlur:
    def test_constant_preserved(self):
        x = np.full((2, 7, 9), 0.42)
        np.testing.assert_allclose(pyramid.gaussian_blur(x), x, atol=1e-15)

    def test_center_impulse_value(self):
        x = np.zeros((1, 9, 9))
        x[0, 4, 4] = 1.0
        out = pyramid.gaussian_blur(x)
        assert out[0, 4, 4] == pytest.approx((6.0 / 16.0) ** 2, abs=1e-15)

    def test_commutes_with_channel_permutation(self, rng):
        x = rng.standard_normal((3, 6, 6))
        perm = [2, 0, 1]
        np.testing.assert_array_equal(
            pyramid.gaussian_blur(x)[perm], pyramid.gaussian_blur(x[perm])
        )

    def test_matches_loop_oracle(self, rng):
        x = rng.standard_normal((2, 6, 5))
        np.testing.assert_allclose(pyramid.gaussian_blur(x), blur_loop(x), atol=1e-12)


class TestPyrDown:
    def test_constant(self):
        out = pyramid.pyr_down(np.full((1, 8, 8), 0.2))
        np.testing.assert_allclose(out, np.full((1, 4, 4), 0.2), atol=1e-15)

    def test_size_contract(self, rng):
        assert pyramid.pyr_down(rng.standard_normal((1, 8, 8))).shape == (1, 4, 4)
        assert pyramid.pyr_down(rng.standard_normal((1, 5, 5))).shape == (1, 3, 3)

    def test_matches_blur_stride_oracle(self, rng):
        x = rng.standard_normal((2, 6, 6))
        np.testing.assert_allclose(pyramid.pyr_down(x), blur_loop(x)[:, ::2, ::2], atol=1e-12)


class TestPyrUp:
    def test_constant_exact_at_any_parity(self):
        for target in [(8, 8), (7, 8), (8, 7), (7, 7)]:
            out = pyramid.pyr_up(np.full((1, 4, 4), 0.37), target)
            np.testing.assert_allclose(out, np.full((1,) + target, 0.37), atol=1e-12)

    def test_size_contract(self, rng):
        assert pyramid.pyr_up(rng.standard_normal((1, 4, 4)), (8, 8)).shape == (1, 8, 8)
        assert pyramid.pyr_up(rng.standard_normal((1, 3, 3)), (5, 5)).shape == (1, 5, 5)

    def test_bad_target_rejected(self, rng):
        with pytest.raises(ValueError):
            pyramid.pyr_up(rng.standard_normal((1, 4, 4)), (9, 8))

    def test_up_then_down_near_identity_on_smooth_input(self, rng):
        x = rng.standard_normal((1, 16, 16))
        for _ in range(4):
            x = pyramid.gaussian_blur(x)
        roundtrip = pyramid.pyr_down(pyramid.pyr_up(x, (32, 32)))
        assert np.abs(roundtrip - x).max() < 1e-2


class TestDecomposeReconstruct:
    def test_constant_residuals_exactly_zero(self):
        p = pyramid.decompose(np.full((3, 48, 40), 0.5), 4)
        for r in p.residuals:
            assert np.abs(r).max() == 0.0
        np.testing.assert_allclose(p.base, np.full(p.base.shape, 0.5), atol=1e-15)

    def test_two_level_definition(self, rng):
        x = rng.standard_normal((1, 8, 8))
        p = pyramid.decompose(x, 2)
        expect = x - pyramid.pyr_up(pyramid.pyr_down(x), (8, 8))
        np.testing.assert_allclose(p.residuals[0], expect, atol=1e-15)

    def test_level_sizes_n4(self, rng):
        p = pyramid.decompose(rng.random((3, 64, 64)), 4)
        assert [r.shape[1] for r in p.residuals] == [64, 32, 16]
        assert p.base.shape == (3, 8, 8)
        assert p.levels == 4

    def test_too_small_rejected(self, rng):
        with pytest.raises(ValueError):
            pyramid.decompose(rng.random((3, 16, 16)), 4)
        with pytest.raises(ValueError):
            pyramid.decompose(rng.random((3, 64, 64)), 1)

    def test_perfect_reconstruction(self, rng):
        for shape in [(3, 64, 64), (3, 41, 53)]:
            x = rng.random(shape)
            back = pyramid.reconstruct(pyramid.decompose(x, 4))
            assert np.abs(back - x).max() < 1e-9

    def test_zeroed_residuals_give_blur_only(self, rng):
        x = rng.random((1, 32, 32))
        p = pyramid.decompose(x, 3)
        blurred = pyramid.reconstruct(
            pyramid.Pyramid(residuals=[np.zeros_like(r) for r in p.residuals], base=p.base)
        )
        up = pyramid.pyr_up(pyramid.pyr_up(p.base, (16, 16)), (32, 32))
        np.testing.assert_allclose(blurred, up, atol=1e-12)

    def test_zeroed_base_is_complement(self, rng):
        x = rng.random((1, 32, 32))
        p = pyramid.decompose(x, 3)
        coarse_only = pyramid.reconstruct(
            pyramid.Pyramid(residuals=[np.zeros_like(r) for r in p.residuals], base=p.base)
        )
        detail_only = pyramid.reconstruct(
            pyramid.Pyramid(residuals=p.residuals, base=np.zeros_like(p.base))
        )
        np.testing.assert_allclose(detail_only, x - coarse_only, atol=1e-9)

    def test_decomposition_is_linear(self, rng):
        x, y = rng.random((2, 3, 32, 32))
        pa, pb = pyramid.decompose(x, 3), pyramid.decompose(y, 3)
        pc = pyramid.decompose(2.0 * x - 0.5 * y, 3)
        for ra, rb, rc in zip(pa.residuals, pb.residuals, pc.residuals):
            np.testing.assert_allclose(rc, 2.0 * ra - 0.5 * rb, atol=1e-12)
        np.testing.assert_allclose(pc.base, 2.0 * pa.base - 0.5 * pb.base, atol=1e-12)
