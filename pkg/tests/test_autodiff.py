"""Reverse-mode gradients against finite differences, plus ADAM."""

import numpy as np
import pytest

import hdft.autodiff as ad


def loss_of(var):
    return ad.sum_all(ad.mul(var, var))


class TestBackwardBasics:
    def test_sum_gradient_is_ones(self, rng):
        x = ad.Var(rng.standard_normal((3, 4)), requires_grad=True, name="x")
        grads = ad.backward(ad.sum_all(x))
        np.testing.assert_array_equal(grads["x"], np.ones((3, 4)))

    def test_non_scalar_loss_rejected(self, rng):
        x = ad.Var(rng.standard_normal(4), requires_grad=True, name="x")
        with pytest.raises(ValueError):
            ad.backward(ad.abs_val(x))

    def test_reused_node_accumulates(self, rng):
        x = ad.Var(rng.standard_normal(5), requires_grad=True, name="x")
        grads = ad.backward(ad.sum_all(ad.add(x, x)))
        np.testing.assert_array_equal(grads["x"], np.full(5, 2.0))

    def test_gradient_linearity(self, rng):
        xv = rng.standard_normal((2, 6, 6))
        kv = rng.standard_normal((2, 2, 3, 3))

        def grads_for(fn):
            x = ad.Var(xv, requires_grad=True, name="x")
            k = ad.Var(kv, requires_grad=True, name="k")
            return ad.backward(fn(x, k))

        ga = grads_for(lambda x, k: loss_of(ad.conv2d(x, k)))
        gb = grads_for(lambda x, k: ad.sum_all(ad.abs_val(x)))
        gsum = grads_for(lambda x, k: ad.add(loss_of(ad.conv2d(x, k)), ad.sum_all(ad.abs_val(x))))
        np.testing.assert_allclose(gsum["x"], ga["x"] + gb["x"], atol=1e-12)

    def test_no_grad_suppresses_tape(self, rng):
        x = ad.Var(rng.standard_normal(4), requires_grad=True, name="x")
        with ad.no_grad():
            y = ad.sum_all(x)
        assert not y.requires_grad

    def test_maxpool_ties_route_to_first_cell(self):
        x = np.zeros((1, 2, 2))  # all equal: gradient goes to row-major first
        v = ad.Var(x, requires_grad=True, name="x")
        grads = ad.backward(ad.sum_all(ad.pool2(v, "max")))
        np.testing.assert_array_equal(grads["x"][0], [[1.0, 0.0], [0.0, 0.0]])


class TestGradientsAgainstFiniteDifferences:
    def test_conv_squared_loss(self, rng):
        x = rng.standard_normal((2, 6, 5))
        k = rng.standard_normal((3, 2, 3, 3))
        rep = ad.grad_check(lambda P: loss_of(ad.conv2d(P["x"], P["k"])), {"x": x, "k": k})
        assert rep.max_rel_err < 1e-6

    def test_spectral_mask_loss(self, rng):
        x = rng.standard_normal((2, 6, 6))
        q = rng.standard_normal((2, 6, 6)) + 1j * rng.standard_normal((2, 6, 6))

        def fn(P):
            mask = ad.make_complex(P["qr"], P["qi"])
            y = ad.real(ad.ifft2(ad.hadamard(ad.fft2(P["x"]), mask)))
            return loss_of(y)

        rep = ad.grad_check(fn, {"x": x, "qr": q.real.copy(), "qi": q.imag.copy()})
        assert rep.max_rel_err < 1e-6

    @pytest.mark.parametrize(
        "build",
        [
            lambda P: loss_of(ad.pool2(P["x"], "avg")),
            lambda P: loss_of(ad.pool2(P["x"], "max")),
            lambda P: loss_of(ad.upsample2(P["x"], (13, 10))),
            lambda P: loss_of(ad.softmax(P["x"], 1)),
            lambda P: loss_of(ad.gelu(P["x"])),
            lambda P: ad.sum_all(ad.abs_val(P["x"])),
            lambda P: loss_of(ad.pyr_up(P["x"], (14, 9))),
            lambda P: loss_of(ad.pyr_down(P["x"])),
        ],
        ids=["avg-pool", "max-pool", "upsample", "softmax", "gelu", "l1", "pyr-up", "pyr-down"],
    )
    def test_single_op(self, rng, build):
        x = rng.standard_normal((2, 7, 5)) + 0.05  # keep |x| off the L1 kink
        rep = ad.grad_check(build, {"x": x})
        assert rep.max_rel_err < 1e-6

    def test_windows_and_merge(self, rng):
        x = rng.standard_normal((2, 6, 7))

        def fn(P):
            wins, meta = ad.window_partition(P["x"], 4, 4)
            return loss_of(ad.window_merge(ad.scalar_mul(wins, 1.5), meta))

        assert ad.grad_check(fn, {"x": x}).max_rel_err < 1e-6

    def test_layernorm(self, rng):
        x = rng.standard_normal((6, 4, 4))

        def fn(P):
            return loss_of(ad.layernorm(P["x"], P["g"], P["b"]))

        params = {"x": x, "g": rng.standard_normal(6), "b": rng.standard_normal(6)}
        assert ad.grad_check(fn, params).max_rel_err < 1e-6

    def test_linear_function_is_near_exact(self, rng):
        x = rng.standard_normal((3, 3))
        rep = ad.grad_check(lambda P: ad.sum_all(ad.scalar_mul(P["x"], 3.0)), {"x": x})
        assert rep.max_rel_err < 1e-10


class TestAdam:
    def test_first_step_magnitude_is_lr(self):
        p = {"w": np.array([0.0])}
        state = ad.AdamState(lr=2e-4)
        ad.adam_step(p, {"w": np.array([1.0])}, state)
        expected = 2e-4 / (1.0 + 1e-8)
        np.testing.assert_allclose(-p["w"][0], expected, rtol=1e-12)

    def test_zero_gradient_keeps_param_and_ticks_t(self):
        p = {"w": np.array([1.5])}
        state = ad.AdamState()
        ad.adam_step(p, {}, state)
        assert state.t == 1
        assert p["w"][0] == 1.5

    def test_quadratic_convergence(self):
        p = {"w": np.array([0.0])}
        state = ad.AdamState(lr=0.1)
        for _ in range(500):
            ad.adam_step(p, {"w": 2.0 * (p["w"] - 3.0)}, state)
        assert abs(p["w"][0] - 3.0) < 1e-3

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            ad.adam_step({"w": np.zeros(2)}, {"w": np.zeros(3)}, ad.AdamState())
