"""
Unit tests for the mode constants and the Riccati exponents.
"""
import math
import unittest

import numpy as np
from scipy import integrate

from ..common.errors import ParameterDomainError
from ..modal import harmonics, mode_coeffs, mode_table, riccati_A, riccati_A_B_derivatives, riccati_B
from ..model import params_from_theta


def _five_point(f, tau, h):
    return (-f(tau + 2 * h) + 8 * f(tau + h) - 8 * f(tau - h) + f(tau - 2 * h)) / (12 * h)


class TestModeConstants(unittest.TestCase):
    """Test cases for mode_coeffs and mode_table."""

    def setUp(self):
        self.params = params_from_theta(0.045, 0.093, 1.25)

    def test_identities(self):
        for L in (0.01, 0.1, 10.0, 1e4):
            for n in (0, 1, 7, 100):
                c = mode_coeffs(n, L, self.params)
                self.assertAlmostEqual(c.mu_plus - c.mu_minus, 1.0, delta=1e-12 * c.mu_plus)
                self.assertAlmostEqual(c.mu_plus + c.mu_minus, c.delta_n, delta=1e-12 * c.delta_n)
                self.assertAlmostEqual(c.mu_plus * c.mu_minus / c.kappa_sq, 1.0, delta=1e-12)
                self.assertGreaterEqual(c.ratio, 0.0)
                self.assertLess(c.ratio, 1.0)

    def test_first_mode_values(self):
        c = mode_coeffs(0, 0.01, self.params)
        self.assertAlmostEqual(c.gamma_n, 4.0 / math.pi, places=15)
        self.assertAlmostEqual(c.beta_n, self.params.k / self.params.alpha * math.pi, places=14)
        self.assertAlmostEqual(c.delta_n, math.hypot(1.0, c.beta_n / 0.01), places=10)

    def test_sign_alternates(self):
        table = mode_table(0, 6, 0.1, self.params)
        np.testing.assert_array_equal(np.sign(table.gamma_n), [1, -1, 1, -1, 1, -1])

    def test_table_matches_scalar(self):
        table = mode_table(3, 40, 0.1, self.params)
        for i, n in enumerate(table.n):
            c = mode_coeffs(int(n), 0.1, self.params)
            self.assertAlmostEqual(table.mu_minus[i] / c.mu_minus, 1.0, delta=1e-14)
            self.assertAlmostEqual(table.delta_n[i] / c.delta_n, 1.0, delta=1e-14)

    def test_table_is_read_only(self):
        table = mode_table(0, 8, 0.1, self.params)
        with self.assertRaises(ValueError):
            table.mu_minus[0] = 0.0

    def test_tiny_wavenumber_keeps_mu_minus(self):
        # (Delta - 1)/2 would round to zero here
        c = mode_coeffs(0, 1e9, self.params)
        self.assertGreater(c.mu_minus, 0.0)
        self.assertAlmostEqual(c.mu_minus / c.kappa_sq, 1.0, delta=1e-9)

    def test_invalid_inputs(self):
        with self.assertRaises(ParameterDomainError):
            mode_coeffs(-1, 0.1, self.params)
        with self.assertRaises(ParameterDomainError):
            mode_coeffs(0, 0.0, self.params)
        with self.assertRaises(ParameterDomainError):
            mode_table(5, 5, 0.1, self.params)

    def test_harmonics(self):
        h = harmonics(0, 4)
        np.testing.assert_allclose(h.gamma_n, 4.0 / math.pi * np.array([1, -1 / 3, 1 / 5, -1 / 7]), rtol=1e-15)


class TestRiccati(unittest.TestCase):
    """Test cases for the closed-form A_n and B_n."""

    def setUp(self):
        self.taus = np.concatenate([[0.0], np.geomspace(1e-6, 20.0, 40)])

    def test_initial_and_saturated_values(self):
        params = params_from_theta(0.045, 0.093, 1.25)
        c = mode_coeffs(2, 0.1, params)
        self.assertEqual(float(riccati_B(c, 0.0)), 0.0)
        self.assertEqual(float(riccati_A(c, 0.0, params.theta)), 0.0)
        self.assertAlmostEqual(float(riccati_B(c, 50.0)) / c.mu_minus, 1.0, delta=1e-14)

    def test_riccati_equation(self):
        for theta in (0.5, 1.0, 1.25):
            params = params_from_theta(0.045, 0.093, theta)
            for L in (0.01, 0.1):
                for n in range(33):
                    c = mode_coeffs(n, L, params)
                    h = 1e-3 / c.delta_n
                    b = riccati_B(c, self.taus)
                    _, d_b = riccati_A_B_derivatives(c, self.taus, theta)
                    numeric = _five_point(lambda t: riccati_B(c, t), self.taus, h)
                    rhs = -b - b * b + c.kappa_sq
                    np.testing.assert_allclose(numeric / c.kappa_sq, d_b / c.kappa_sq, rtol=0, atol=1e-6)
                    np.testing.assert_allclose(rhs / c.kappa_sq, d_b / c.kappa_sq, rtol=0, atol=1e-6)

    def test_A_is_theta_integral_of_B(self):
        for theta in (0.5, 1.0, 1.25):
            params = params_from_theta(0.045, 0.093, theta)
            for L in (0.01, 0.1):
                for n in (0, 5, 32):
                    c = mode_coeffs(n, L, params)
                    for tau in (1e-4, 0.1, 1.0, 20.0):
                        knee = min(tau, 10.0 / c.delta_n)
                        head, _ = integrate.quad(lambda t: float(riccati_B(c, t)), 0.0, knee,
                                                 epsabs=0.0, epsrel=1e-13, limit=200)
                        tail = 0.0
                        if tau > knee:
                            tail, _ = integrate.quad(lambda t: float(riccati_B(c, t)), knee, tau,
                                                     epsabs=0.0, epsrel=1e-13, limit=200)
                        exact = float(riccati_A(c, tau, theta))
                        self.assertLess(abs(exact - theta * (head + tail)), 1e-8 * max(1.0, abs(exact)))

    def test_dA_equals_theta_B(self):
        params = params_from_theta(1.0, 1.0, 0.5)
        table = mode_table(0, 16, 1.0, params)
        d_a, _ = riccati_A_B_derivatives(table, 0.3, params.theta)
        np.testing.assert_allclose(d_a, params.theta * riccati_B(table, 0.3), rtol=1e-15)

    def test_B_is_monotone(self):
        params = params_from_theta(1.0, 1.0, 1.25)
        c = mode_coeffs(0, 1.0, params)
        values = riccati_B(c, np.linspace(0.0, 10.0, 200))
        self.assertTrue(np.all(np.diff(values) >= 0))
        self.assertTrue(np.all(values <= c.mu_minus))


if __name__ == '__main__':
    unittest.main()
