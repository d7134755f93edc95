"""Transform-domain ops against direct O(N^2) DFT oracles."""

import numpy as np
import pytest

from hdft import ops


def dft2_direct(x):
    """Plain double-sum DFT, unnormalized forward convention."""
    h, w = x.shape[-2], x.shape[-1]
    out = np.zeros(x.shape, dtype=np.complex128)
    hs, ws = np.arange(h), np.arange(w)
    for u in range(h):
        for v in range(w):
            phase = np.exp(-2j * np.pi * (u * hs[:, None] / h + v * ws[None, :] / w))
            out[..., u, v] = (x * phase).sum(axis=(-2, -1))
    return out


def idft2_direct(x):
    h, w = x.shape[-2], x.shape[-1]
    out = np.zeros(x.shape, dtype=np.complex128)
    hs, ws = np.arange(h), np.arange(w)
    for u in range(h):
        for v in range(w):
            phase = np.exp(2j * np.pi * (u * hs[:, None] / h + v * ws[None, :] / w))
            out[..., u, v] = (x * phase).sum(axis=(-2, -1)) / (h * w)
    return out


def circular_conv_direct(q, k):
    """Circular convolution by explicit index arithmetic."""
    h, w = q.shape
    out = np.zeros((h, w))
    for u in range(h):
        for v in range(w):
            acc = 0.0
            for a in range(h):
                for b in range(w):
                    acc += q[a, b] * k[(u - a) % h, (v - b) % w]
            out[u, v] = acc
    return out


class TestFft2:
    def test_zero_input_gives_zero_spectrum(self):
        assert np.all(ops.fft2(np.zeros((1, 4, 4))) == 0)

    def test_unit_impulse_gives_flat_spectrum(self):
        x = np.zeros((1, 4, 4))
        x[0, 0, 0] = 1.0
        np.testing.assert_allclose(ops.fft2(x), np.ones((1, 4, 4), dtype=complex))

    def test_parseval_against_direct_dft(self, rng):
        x = rng.standard_normal((1, 8, 8))
        direct = dft2_direct(x)
        np.testing.assert_allclose(ops.fft2(x), direct, atol=1e-9)
        energy_spatial = np.sum(x**2)
        energy_freq = np.sum(np.abs(direct) ** 2) / 64.0
        assert abs(energy_spatial - energy_freq) < 1e-9

    def test_linearity(self, rng):
        x, y = rng.standard_normal((2, 2, 6, 5))
        lhs = ops.fft2(2.5 * x - 1.25 * y)
        rhs = 2.5 * ops.fft2(x) - 1.25 * ops.fft2(y)
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)

    def test_rejects_scalars(self):
        with pytest.raises(ValueError):
            ops.fft2(np.zeros(3))


class TestIfft2:
    def test_roundtrip_real(self, rng):
        x = rng.standard_normal((3, 8, 8))
        back = ops.ifft2(ops.fft2(x))
        assert np.abs(back.imag).max() < 1e-9
        np.testing.assert_allclose(back.real, x, atol=1e-9)

    def test_flat_spectrum_gives_impulse(self):
        back = ops.ifft2(np.ones((1, 4, 4), dtype=complex))
        expect = np.zeros((1, 4, 4))
        expect[0, 0, 0] = 1.0
        np.testing.assert_allclose(back.real, expect, atol=1e-12)

    def test_non_power_of_two_against_direct_inverse(self, rng):
        x = rng.standard_normal((1, 5, 7)) + 1j * rng.standard_normal((1, 5, 7))
        np.testing.assert_allclose(ops.ifft2(x), idft2_direct(x), atol=1e-9)
        np.testing.assert_allclose(ops.ifft2(ops.fft2(x)), x, atol=1e-9)


class TestComplexHadamard:
    def test_multiplicative_identity(self, rng):
        b = rng.standard_normal((2, 3, 3)) + 1j * rng.standard_normal((2, 3, 3))
        np.testing.assert_array_equal(ops.complex_hadamard(np.ones_like(b), b), b)

    def test_i_squared(self):
        i = np.full((1, 1, 1), 1j)
        np.testing.assert_allclose(ops.complex_hadamard(i, i), np.full((1, 1, 1), -1 + 0j))

    def test_matches_scalar_loop(self, rng):
        a = rng.standard_normal((2, 4, 3)) + 1j * rng.standard_normal((2, 4, 3))
        b = rng.standard_normal((2, 4, 3)) + 1j * rng.standard_normal((2, 4, 3))
        got = ops.complex_hadamard(a, b)
        for idx in np.ndindex(a.shape):
            assert got[idx] == a[idx] * b[idx]

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            ops.complex_hadamard(np.ones((1, 2, 2), complex), np.ones((1, 2, 3), complex))


class TestConvolutionTheorem:
    def test_spectral_product_is_circular_convolution(self, rng):
        q = rng.standard_normal((8, 8))
        k = rng.standard_normal((8, 8))
        via_fft = ops.ifft2(ops.complex_hadamard(ops.fft2(q), ops.fft2(k))).real
        direct = circular_conv_direct(q, k)
        assert np.abs(via_fft - direct).max() < 1e-6
