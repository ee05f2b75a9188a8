"""Optimizer semantics: update rules, state bounds, convergence, determinism."""

import numpy as np
import pytest

from vafnet.optim import (Adam, DivergenceError, OptimizerSpec, RmsProp,
                          Rprop, Sgd, make_optimizer)


def irprop_minus_scalar_oracle(grad_fn, p0, step0, iters,
                               eta_plus=1.01, eta_minus=0.5,
                               step_min=1e-6, step_max=50.0):
    """Independent scalar trace of the sign-adaptation rule.

    Returns the visited (p, step, moved) tuples, one per iteration.
    """
    p, step, prev = p0, step0, 0.0
    trace = []
    for _ in range(iters):
        g = grad_fn(p)
        if prev * g > 0:
            step = min(step * eta_plus, step_max)
        elif prev * g < 0:
            step = max(step * eta_minus, step_min)
            g = 0.0
        moved = -np.sign(g) * step
        p += moved
        prev = g
        trace.append((p, step, moved))
    return trace


class TestSgd:
    def test_basic_step(self):
        new = Sgd(lr=0.1).step(np.array([1.0]), np.array([2.0]))
        np.testing.assert_allclose(new, [0.8])

    def test_inputs_not_mutated(self):
        p = np.array([1.0, 2.0])
        g = np.array([0.5, 0.5])
        Sgd(lr=0.1).step(p, g)
        np.testing.assert_array_equal(p, [1.0, 2.0])
        np.testing.assert_array_equal(g, [0.5, 0.5])


class TestAdam:
    def test_zero_gradient_keeps_params_increments_t(self):
        opt = Adam()
        p = np.array([1.0, -2.0])
        new = opt.step(p, np.zeros(2))
        np.testing.assert_array_equal(new, p)
        assert opt.t == 1
        opt.step(new, np.zeros(2))
        assert opt.t == 2

    def test_first_step_magnitude_is_lr(self):
        # bias correction makes the first update exactly lr * sign(g)
        opt = Adam(lr=0.01)
        new = opt.step(np.array([0.0]), np.array([3.0]))
        assert new[0] == pytest.approx(-0.01 * 3.0 / (3.0 + opt.eps), rel=1e-12)


class TestRmsProp:
    def test_matches_reference_formula(self):
        opt = RmsProp(lr=0.1, rho=0.9, eps=1e-8)
        p = np.array([1.0])
        g = np.array([2.0])
        new = opt.step(p, g)
        s = 0.1 * 4.0
        np.testing.assert_allclose(new, p - 0.1 * 2.0 / np.sqrt(s + 1e-8))


class TestRprop:
    def test_scalar_trace_matches_oracle(self):
        """Descend f(p) = p^2 from p=3: steps grow by x1.01 while the
        gradient sign holds, halve on the flip with that update suppressed."""
        opt = Rprop(step_init=0.1)
        p = np.array([3.0])
        mine = []
        for _ in range(40):
            p = opt.step(p, 2.0 * p)
            mine.append((p[0], opt.step_sizes[0]))
        oracle = irprop_minus_scalar_oracle(lambda q: 2.0 * q, 3.0, 0.1, 40)
        for (p_mine, s_mine), (p_ref, s_ref, _) in zip(mine, oracle):
            assert p_mine == pytest.approx(p_ref, abs=1e-12)
            assert s_mine == pytest.approx(s_ref, abs=1e-12)

    def test_growth_until_flip_then_halving(self):
        oracle = irprop_minus_scalar_oracle(lambda q: 2.0 * q, 3.0, 0.1, 40)
        steps = [s for _, s, _ in oracle]
        moves = [m for _, _, m in oracle]
        # the descent from p=3 first overshoots zero around iteration 27
        flip = next(i for i in range(1, 40) if moves[i] == 0.0)
        assert flip == 27
        for i in range(1, flip):
            assert steps[i] == pytest.approx(steps[i - 1] * 1.01, rel=1e-12)
        assert steps[flip] == pytest.approx(steps[flip - 1] * 0.5, rel=1e-12)
        assert moves[flip] == 0.0

    def test_step_bounds_hold_under_random_gradients(self, rng):
        opt = Rprop(step_init=1.0, step_min=1e-4, step_max=2.0)
        p = rng.standard_normal(20)
        for _ in range(500):
            g = rng.standard_normal(20) * 10.0 ** rng.integers(-3, 4)
            p = opt.step(p, g)
            assert np.all(opt.step_sizes >= 1e-4 - 1e-15)
            assert np.all(opt.step_sizes <= 2.0 + 1e-15)

    def test_eta_validation(self):
        with pytest.raises(ValueError):
            Rprop(eta_plus=0.9)
        with pytest.raises(ValueError):
            Rprop(eta_minus=1.5)

    def test_defaults(self):
        opt = Rprop()
        assert opt.eta_plus == 1.01
        assert opt.eta_minus == 0.5
        assert opt.step_init == 0.01
        assert opt.step_min == 1e-6
        assert opt.step_max == 50.0


class TestConvergence:
    @pytest.mark.parametrize("make", [Sgd, Adam, RmsProp, Rprop])
    def test_quadratic_below_threshold(self, make):
        """Default hyperparameters drive sum(p^2), dim 10, below 1e-6
        within 10^4 steps."""
        opt = make()
        p = np.random.default_rng(0).uniform(-2, 2, 10)
        for _ in range(10_000):
            p = opt.step(p, 2.0 * p)
        assert float(np.sum(p * p)) < 1e-6


class TestErrorsAndDeterminism:
    @pytest.mark.parametrize("make", [Sgd, Adam, RmsProp, Rprop])
    def test_nan_gradient_identifies_index(self, make):
        g = np.zeros(5)
        g[3] = np.nan
        with pytest.raises(DivergenceError) as exc:
            make().step(np.ones(5), g)
        assert exc.value.index == 3

    @pytest.mark.parametrize("make", [Sgd, Adam, RmsProp, Rprop])
    def test_bit_exact_determinism(self, make, rng):
        p0 = rng.standard_normal(8)
        grads = [rng.standard_normal(8) for _ in range(50)]

        def run():
            opt = make()
            p = p0.copy()
            for g in grads:
                p = opt.step(p, g)
            return p

        assert np.array_equal(run(), run())

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            Sgd().step(np.zeros(3), np.zeros(4))


class TestSpecFactory:
    def test_round_trip_kinds(self):
        assert isinstance(make_optimizer(OptimizerSpec("sgd", lr=0.5)), Sgd)
        assert isinstance(make_optimizer(OptimizerSpec("adam")), Adam)
        assert isinstance(make_optimizer(OptimizerSpec("rmsprop")), RmsProp)
        assert isinstance(make_optimizer(OptimizerSpec("rprop")), Rprop)

    def test_lr_applied(self):
        opt = make_optimizer(OptimizerSpec("sgd", lr=0.25))
        assert opt.lr == 0.25

    def test_with_lr(self):
        spec = OptimizerSpec("rmsprop").with_lr(0.07)
        assert make_optimizer(spec).lr == 0.07

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            make_optimizer(OptimizerSpec("newton"))
