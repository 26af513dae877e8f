"""
Unit tests for the return-only (volatility-averaged) escape problem.
"""
import math
import unittest

import numpy as np
from scipy import integrate, stats

from ..averaged import (ABOVE_ONE, BELOW_ONE, EQUAL_ONE, MAX_RETURN_MODES, SurvivalReturnSeries,
                        SurvivalReturnShortTimeSeries, met_outer, met_return,
                        met_return_large_span_check, met_return_small_span, met_return_span_sweep,
                        small_span_constants, stationary_average, stationary_density,
                        survival_return, survival_return_longtime, survival_return_shorttime,
                        return_survival_modes, theta_regime)
from ..baseline import met_wiener, survival_wiener
from ..common.base_series import SeriesControl
from ..common.errors import ConvergenceError, ParameterDomainError
from ..escape2d import met_2d, survival_2d
from ..modal import mode_coeffs, mode_table
from ..model import ScaledPoint, params_from_theta

FRIENDLY = params_from_theta(1.0, math.sqrt(0.625), 1.25)
FRIENDLY_LOW = params_from_theta(1.0, 0.5, 0.5)
THETAS = (0.5, 1.0, 1.25)


def _default(theta=1.25):
    return params_from_theta(0.045, 0.093, theta)


class TestStationaryLaw(unittest.TestCase):
    """Test cases for the Gamma law of the scaled volatility."""

    def test_moments(self):
        for theta in THETAS:
            with self.subTest(theta=theta):
                self.assertAlmostEqual(stationary_average(lambda v: 1.0, theta), 1.0, delta=1e-10)
                self.assertAlmostEqual(stationary_average(lambda v: v, theta) / theta, 1.0, delta=1e-9)
                self.assertAlmostEqual(stationary_average(lambda v: v * v, theta) / (theta * (theta + 1.0)),
                                       1.0, delta=1e-9)

    def test_density(self):
        self.assertAlmostEqual(stationary_density(2.0, 1.25) / stats.gamma.pdf(2.0, 1.25), 1.0, delta=1e-12)
        self.assertEqual(stationary_density(0.0, 0.5), math.inf)
        self.assertEqual(stationary_density(0.0, 1.0), 1.0)
        self.assertEqual(stationary_density(0.0, 1.25), 0.0)
        with self.assertRaises(ParameterDomainError):
            stationary_density(-1.0, 1.0)

    def test_regime(self):
        self.assertEqual(theta_regime(0.5), BELOW_ONE)
        self.assertEqual(theta_regime(1.0 + 1e-12), EQUAL_ONE)
        self.assertEqual(theta_regime(1.25), ABOVE_ONE)


class TestSurvivalReturn(unittest.TestCase):
    """Test cases for survival_return and its asymptotic forms."""

    def test_averages_joint_survival(self):
        for x in (0.0, 0.2, -0.35):
            for tau in (0.05, 0.3, 1.0):
                with self.subTest(x=x, tau=tau):
                    averaged = stationary_average(
                        lambda v: survival_2d(ScaledPoint(x=x, L=1.0, tau=tau, v=v), FRIENDLY).value,
                        FRIENDLY.theta)
                    self.assertLess(abs(survival_return(x, tau, 1.0, FRIENDLY) - averaged), 1e-8)

    def test_averages_joint_survival_below_one(self):
        averaged = stationary_average(
            lambda v: survival_2d(ScaledPoint(x=0.1, L=1.0, tau=0.3, v=v), FRIENDLY_LOW).value,
            FRIENDLY_LOW.theta)
        self.assertLess(abs(survival_return(0.1, 0.3, 1.0, FRIENDLY_LOW) - averaged), 1e-8)

    def test_initial_and_boundary_values(self):
        self.assertEqual(survival_return(0.2, 0.0, 1.0, FRIENDLY), 1.0)
        self.assertEqual(survival_return(0.5, 1.0, 1.0, FRIENDLY), 0.0)

    def test_long_time_form(self):
        exact = survival_return(0.1, 20.0, 1.0, FRIENDLY)
        self.assertLess(abs(survival_return_longtime(0.1, 20.0, 1.0, FRIENDLY) / exact - 1.0), 1e-9)

    def test_short_time_amplitudes_converge(self):
        modes = mode_table(0, 4, 1.0, FRIENDLY)
        errors = []
        for tau in (1e-3, 1e-4):
            exact = SurvivalReturnSeries(tau, 1.0, FRIENDLY).amplitudes(modes)
            short = SurvivalReturnShortTimeSeries(tau, 1.0, FRIENDLY).amplitudes(modes)
            errors.append(np.abs(short / exact - 1.0))
        self.assertTrue(np.all(errors[0] < 1e-2))
        self.assertTrue(np.all(errors[1] < errors[0] / 50.0))

    def test_short_time_form(self):
        self.assertEqual(survival_return_shorttime(0.2, 0.0, 1.0, FRIENDLY), 1.0)
        self.assertEqual(survival_return_shorttime(0.5, 0.02, 1.0, FRIENDLY), 0.0)
        exact = survival_return(0.0, 1e-3, 1.0, FRIENDLY)
        self.assertLess(abs(survival_return_shorttime(0.0, 1e-3, 1.0, FRIENDLY) / exact - 1.0), 1e-4)

    def test_small_times(self):
        """Early times need far more than 512 modes before exp(-theta mu_- tau) cuts the sum off."""
        params = _default()
        for L, tau in ((0.1, 1e-4), (1.0, 1e-3)):
            with self.subTest(L=L, tau=tau):
                exact = survival_return(0.0, tau, L, params)
                short = survival_return_shorttime(0.0, tau, L, params)
                self.assertTrue(0.999 < exact <= 1.0)
                self.assertAlmostEqual(short, exact, delta=1e-4)
                with self.assertRaises(ConvergenceError):
                    survival_return(0.0, tau, L, params, SeriesControl(max_modes=512))

    def test_mode_limit_grows_as_tau_shrinks(self):
        params = _default()
        self.assertEqual(return_survival_modes(0.0, 0.01, params), 512)
        early = return_survival_modes(1e-4, 0.1, params)
        later = return_survival_modes(1e-3, 0.1, params)
        self.assertAlmostEqual((early - 512) / (later - 512), 10.0, delta=0.01)
        self.assertGreater(early, 4096)
        self.assertEqual(return_survival_modes(1e-12, 1.0, params), MAX_RETURN_MODES)

    def test_refined_truncation_agrees(self):
        """Tightening the tolerance a thousandfold moves the sum by less than ten tolerances."""
        for L, tau in ((1.0, 1e-3), (1.0, 0.05), (0.01, 1e-3)):
            with self.subTest(L=L, tau=tau):
                base = SurvivalReturnSeries(tau, L, FRIENDLY).evaluate(0.1 * L).value
                modes = 2 * return_survival_modes(tau, L, FRIENDLY)
                refined = SurvivalReturnSeries(tau, L, FRIENDLY, SeriesControl(max_modes=modes, rel_tol=1e-13))
                self.assertLess(abs(refined.evaluate(0.1 * L).value - base), 1e-9)

    def test_integrates_to_mean_time(self):
        """T(x) = (1/alpha) int_0^inf S(x, tau) dtau, integrated in log tau."""
        tau_min, tau_max = 1e-3, 30.0
        for x in (0.0, 0.3):
            with self.subTest(x=x):
                tail, _ = integrate.quad(
                    lambda u: survival_return(x, math.exp(u), 1.0, FRIENDLY) * math.exp(u),
                    math.log(tau_min), math.log(tau_max), epsabs=0.0, epsrel=1e-8, limit=200)
                # before tau_min, 1 - S is far below the tolerance
                integral = (tau_min + tail) / FRIENDLY.alpha
                self.assertAlmostEqual(integral / met_return(x, 1.0, FRIENDLY), 1.0, delta=1e-6)

    def test_two_decay_regimes(self):
        params = _default()
        L = 0.01
        mu_minus = mode_coeffs(0, L, params).mu_minus

        def log_slope(tau, h):
            return (math.log(survival_return(0.0, tau + h, L, params))
                    - math.log(survival_return(0.0, tau - h, L, params))) / (2 * h)

        late = log_slope(0.175, 0.025)
        early = log_slope(2e-3, 1e-4)
        self.assertAlmostEqual(late / (-params.theta * mu_minus), 1.0, delta=1e-4)
        self.assertLess(early, 2.0 * late)

    def test_dominates_wiener(self):
        params = _default()
        L = 0.01
        for days in (1.0, 2.0):
            heston = survival_return(0.0, params.alpha * days, L, params)
            wiener = survival_wiener(0.0, days, L, params.m)
            self.assertGreaterEqual(heston, 5.0 * wiener)
        for days in np.linspace(0.5, 5.0, 10):
            self.assertGreaterEqual(survival_return(0.0, params.alpha * days, L, params),
                                    survival_wiener(0.0, days, L, params.m))


class TestMetReturn(unittest.TestCase):
    """Test cases for met_return and the span laws."""

    def test_averages_joint_mean_time(self):
        for x in (0.0, 0.25):
            with self.subTest(x=x):
                averaged = stationary_average(lambda v: met_2d(x, v, 1.0, FRIENDLY), FRIENDLY.theta,
                                              epsrel=1e-9)
                self.assertAlmostEqual(met_return(x, 1.0, FRIENDLY) / averaged, 1.0, delta=1e-6)

    def test_boundary(self):
        self.assertEqual(met_return(-0.005, 0.01, _default()), 0.0)

    def test_small_span_exponents(self):
        spans = np.geomspace(1e-5, 1e-3, 5)
        for theta, expected in ((0.5, 1.5), (1.25, 2.0)):
            with self.subTest(theta=theta):
                report = met_return_span_sweep(0.0, spans, _default(theta))
                self.assertAlmostEqual(report.fitted_exponent, expected, delta=0.05)
                self.assertEqual(report.fit_range, (spans[0], spans[-1]))
                self.assertIsNone(report.passed)

    def test_small_span_logarithm_at_unit_theta(self):
        spans = np.geomspace(1e-5, 1e-3, 5)
        report = met_return_span_sweep(0.0, spans, _default(1.0))
        self.assertEqual(report.theta_regime, EQUAL_ONE)
        scaled = np.array(report.values) / spans ** 2
        log_span = np.log(spans)
        slope, intercept = np.polyfit(log_span, scaled, 1)
        residual = scaled - (slope * log_span + intercept)
        r_squared = 1.0 - np.sum(residual ** 2) / np.sum((scaled - scaled.mean()) ** 2)
        self.assertGreater(r_squared, 0.999)
        self.assertLess(slope, 0.0)

    def test_small_span_asymptote(self):
        for theta in (0.5, 1.25):
            with self.subTest(theta=theta):
                params = _default(theta)
                ratio = met_return_small_span(0.0, 1e-5, params) / met_return(0.0, 1e-5, params)
                self.assertAlmostEqual(ratio, 1.0, delta=0.05)

    def test_small_span_constants(self):
        params = _default(1.25)
        c = small_span_constants(params)
        self.assertEqual((c.regime, c.exponent), (ABOVE_ONE, 2.0))
        self.assertAlmostEqual(c.K / (params.alpha / (2 * params.k ** 2 * (params.theta - 1.0))), 1.0,
                               delta=1e-12)
        low = small_span_constants(_default(0.5))
        self.assertEqual((low.regime, low.exponent), (BELOW_ONE, 1.5))
        self.assertGreater(low.N, 0.0)
        unit = small_span_constants(_default(1.0))
        self.assertEqual(unit.regime, EQUAL_ONE)
        self.assertAlmostEqual(unit.N, 0.045 / (2 * _default(1.0).k ** 2), delta=1e-12)

    def test_small_span_warns_above_threshold(self):
        with self.assertLogs("heston_escape.averaged", level="WARNING"):
            met_return_small_span(0.0, 1.0, _default())

    def test_large_span_law(self):
        spans = np.geomspace(10.0, 1000.0, 5)
        at_hundred = []
        for theta in THETAS:
            with self.subTest(theta=theta):
                report = met_return_large_span_check(0.0, spans, _default(theta))
                self.assertTrue(report.passed)
                self.assertLessEqual(report.exponent_error, 0.05)
                self.assertLessEqual(report.outer_error, 0.05)
                self.assertAlmostEqual(report.outer_ratios[2], 1.0, delta=0.05)
                at_hundred.append(report.values[2])
        self.assertLess(max(at_hundred) / min(at_hundred) - 1.0, 0.05)

    def test_large_span_check_fails_on_small_spans(self):
        """Spans near 1e-3 follow the small-span law and fail the check."""
        spans = np.geomspace(1e-4, 1e-2, 5)
        with self.assertLogs("heston_escape.averaged", level="WARNING"):
            report = met_return_large_span_check(0.0, spans, _default(0.5))
        self.assertFalse(report.passed)
        self.assertGreater(report.exponent_error, 0.3)
        on_boundary = met_return_large_span_check(0.5, np.geomspace(10.0, 1000.0, 3), _default())
        self.assertFalse(on_boundary.passed)

    def test_exceeds_wiener(self):
        """Averaging over the volatility only lengthens the mean escape time."""
        for theta in THETAS:
            for L in (0.01, 0.1):
                with self.subTest(theta=theta, L=L):
                    params = _default(theta)
                    for x in (0.0, 0.3 * L):
                        self.assertGreaterEqual(met_return(x, L, params), met_wiener(x, L, params.m))

    def test_small_span_asymptote_at_unit_theta(self):
        """The logarithmic law closes in on the series slowly, from below."""
        params = _default(1.0)
        ratios = [met_return_small_span(0.0, L, params) / met_return(0.0, L, params)
                  for L in (1e-4, 1e-5, 1e-6)]
        for ratio in ratios:
            self.assertTrue(0.84 < ratio < 1.0)
        self.assertLess(ratios[0], ratios[1])
        self.assertLess(ratios[1], ratios[2])

    def test_sweep_validation(self):
        params = _default()
        with self.assertRaises(ParameterDomainError):
            met_return_span_sweep(0.0, [1e-3, 1e-2], params)
        with self.assertRaises(ParameterDomainError):
            met_return_span_sweep(0.0, [1e-3, 1e-2, 1e-2], params)
        with self.assertRaises(ParameterDomainError):
            met_return_span_sweep(0.7, [1e-3, 1e-2, 1e-1], params)

    def test_outer_solution(self):
        self.assertAlmostEqual(met_outer(0.0, 0.01, 0.093 ** 2), 2.5e-5 / 0.093 ** 2, places=14)
        with self.assertRaises(ParameterDomainError):
            met_outer(0.0, 0.01, 0.0)


if __name__ == '__main__':
    unittest.main()
