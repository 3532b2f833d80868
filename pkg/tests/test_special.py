"""Tests for the special functions: Q, E1, scaled E1 and the EMG density."""

import math

import numpy as np
import pytest
from scipy import integrate
from scipy import special as sc

from core.errors import DomainError
from models import EmgParams
from modules.special import (
    EULER_GAMMA,
    emg_logpdf,
    emg_pdf,
    exp_integral_E1,
    exp_scaled_E1,
    q_func,
)


class TestQFunction:
    def test_zero_is_half(self):
        assert q_func(0.0) == pytest.approx(0.5, abs=1e-15)

    def test_matches_normal_tail_quadrature(self):
        for x in (0.5, 1.0, 2.0, 4.0):
            oracle, _ = integrate.quad(lambda t: math.exp(-t * t / 2) / math.sqrt(2 * math.pi), x, np.inf)
            assert q_func(x) == pytest.approx(oracle, rel=1e-9)

    def test_accepts_arrays(self):
        out = q_func(np.array([-1.0, 0.0, 1.0]))
        assert out.shape == (3,)
        assert out[0] + out[2] == pytest.approx(1.0, abs=1e-15)

    def test_symmetry_over_wide_grid(self):
        x = np.linspace(-40.0, 40.0, 801)
        np.testing.assert_allclose(q_func(x) + q_func(-x), 1.0, atol=1e-15)


class TestExpIntegral:
    def test_matches_scipy_on_log_grid(self):
        for x in np.logspace(-6, 2, 81):
            assert exp_integral_E1(x) == pytest.approx(sc.exp1(x), rel=1e-10)

    def test_matches_quadrature_oracle(self):
        for x in (0.1, 0.5, 1.0, 3.0, 10.0):
            oracle, _ = integrate.quad(lambda t: math.exp(-t) / t, x, np.inf, epsabs=0.0, epsrel=1e-13)
            assert exp_integral_E1(x) == pytest.approx(oracle, rel=1e-10)

    def test_small_argument_series(self):
        x = 1e-6
        assert exp_integral_E1(x) == pytest.approx(-EULER_GAMMA - math.log(x) + x, rel=1e-12)

    def test_scaled_form_has_no_overflow(self):
        x = 1000.0
        asymptotic = 1 / x - 1 / x**2 + 2 / x**3 - 6 / x**4
        assert exp_scaled_E1(x) == pytest.approx(asymptotic, rel=1e-9)

    def test_scaled_matches_unscaled(self):
        for x in (0.01, 0.9, 1.1, 20.0):
            assert exp_scaled_E1(x) == pytest.approx(math.exp(x) * sc.exp1(x), rel=1e-10)

    @pytest.mark.parametrize("x", [0.05, 0.5, 0.99, 1.01, 3.0, 20.0])
    def test_derivative_by_finite_differences(self, x):
        h = 1e-6 * x
        slope = (exp_integral_E1(x + h) - exp_integral_E1(x - h)) / (2 * h)
        assert slope == pytest.approx(-math.exp(-x) / x, rel=1e-6)

    def test_scaled_form_decreasing(self):
        values = [exp_scaled_E1(x) for x in np.logspace(-3, 3, 200)]
        assert np.all(np.diff(values) < 0.0)

    @pytest.mark.parametrize("bad", [0.0, -1.0, float("nan"), float("inf")])
    def test_rejects_outside_domain(self, bad):
        with pytest.raises(DomainError):
            exp_integral_E1(bad)
        with pytest.raises(DomainError):
            exp_scaled_E1(bad)


class TestEmgDensity:
    def test_normalizes_for_random_parameters(self):
        rng = np.random.default_rng(7)
        for scale, sd in zip(rng.uniform(0.1, 10.0, 20), rng.uniform(0.05, 5.0, 20)):
            p = EmgParams(scale=scale, noise_sd=sd)
            edges = [-15 * sd, 0.0, scale, 60 * scale + 15 * sd]
            total = sum(
                integrate.quad(lambda y: emg_pdf(p, y), a, b, limit=200)[0] for a, b in zip(edges[:-1], edges[1:])
            )
            assert total == pytest.approx(1.0, abs=1e-6)

    def test_small_noise_tends_to_exponential(self):
        # Exp(1) density at y = 2
        p = EmgParams(scale=1.0, noise_sd=1e-3)
        assert emg_pdf(p, 2.0) == pytest.approx(math.exp(-2.0), rel=1e-3)

    def test_matches_convolution_oracle(self):
        p = EmgParams(scale=2.0, noise_sd=0.7)
        for y in (-1.0, 0.0, 0.5, 3.0, 8.0):
            oracle, _ = integrate.quad(
                lambda t: math.exp(-t / 2.0) / 2.0 * math.exp(-((y - t) ** 2) / (2 * 0.49)) / math.sqrt(2 * math.pi * 0.49),
                0.0, np.inf,
            )
            assert emg_pdf(p, y) == pytest.approx(oracle, rel=1e-8)

    def test_nonnegative_and_vanishing_left_tail(self):
        p = EmgParams(scale=1.5, noise_sd=0.8)
        y = np.linspace(-40.0, 60.0, 2001)
        assert np.all(emg_pdf(p, y) >= 0.0)
        tail = emg_pdf(p, np.array([-5.0, -10.0, -20.0, -40.0]))
        assert np.all(np.diff(tail) < 0.0)
        assert tail[-1] < 1e-300

    def test_logpdf_finite_in_far_tails(self):
        p = EmgParams(scale=1.0, noise_sd=1.0)
        values = emg_logpdf(p, np.array([-50.0, 0.0, 1e4]))
        assert np.all(np.isfinite(values))
        assert values[0] < -1000.0
