"""
Unit tests for the parameter set and the rescalings.
"""
import math
import unittest

from hypothesis import given, settings, strategies as st

from ..common.errors import ParameterDomainError
from ..model import ModelParams, ScaledPoint, make_params, params_from_theta, scale, unscale

positive = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False, allow_infinity=False)


class TestModelParams(unittest.TestCase):
    """Test cases for ModelParams construction."""

    def test_theta_from_triple(self):
        params = make_params(1.0, 1.0, math.sqrt(2.0))
        self.assertAlmostEqual(params.theta, 1.0, places=14)

    def test_default_point_k(self):
        params = params_from_theta(0.045, 0.093, 1.25)
        self.assertAlmostEqual(params.k, 0.02495, places=4)
        self.assertAlmostEqual(make_params(0.045, 0.093, params.k).theta, 1.25, delta=1e-12)

    def test_unit_theta(self):
        self.assertAlmostEqual(params_from_theta(1.0, 1.0, 1.0).k, math.sqrt(2.0), places=14)
        self.assertAlmostEqual(params_from_theta(0.045, 0.093, 0.5).theta, 0.5, delta=1e-12)

    def test_rejects_non_positive(self):
        for alpha, m, k, field in [(0.0, 1.0, 1.0, "alpha"), (1.0, -1.0, 1.0, "m"),
                                   (1.0, 1.0, math.inf, "k"), (1.0, 1.0, math.nan, "k")]:
            with self.assertRaises(ParameterDomainError) as ctx:
                make_params(alpha, m, k)
            self.assertEqual(ctx.exception.field, field)

    def test_feller(self):
        self.assertTrue(params_from_theta(1.0, 1.0, 1.25).feller)
        self.assertFalse(params_from_theta(1.0, 1.0, 0.5).feller)

    def test_with_k_recomputes_theta(self):
        params = make_params(1.0, 1.0, 1.0)
        self.assertAlmostEqual(params.with_k(2.0).theta, 0.5, places=14)

    @given(positive, positive, positive)
    @settings(max_examples=50, deadline=None)
    def test_theta_round_trip(self, alpha, m, k):
        theta = make_params(alpha, m, k).theta
        self.assertAlmostEqual(params_from_theta(alpha, m, theta).k / k, 1.0, delta=1e-12)


class TestScaling(unittest.TestCase):
    """Test cases for scale/unscale."""

    def setUp(self):
        self.params = params_from_theta(0.045, 0.093, 1.25)

    def test_origin(self):
        self.assertEqual(scale(0.0, 0.0, self.params), (0.0, 0.0))

    def test_normal_level_maps_to_theta(self):
        v, tau = scale(self.params.m ** 2, 1.0 / self.params.alpha, self.params)
        self.assertAlmostEqual(v, self.params.theta, delta=1e-12)
        self.assertAlmostEqual(tau, 1.0, delta=1e-15)

    def test_direct_formula(self):
        v, tau = scale(0.01, 2.0, self.params)
        self.assertAlmostEqual(v, 2 * 0.045 * 0.01 / self.params.k ** 2, delta=1e-12)
        self.assertAlmostEqual(tau, 0.09, delta=1e-15)
        y, t = unscale(v, tau, self.params)
        self.assertAlmostEqual(y, 0.01, delta=1e-16)
        self.assertAlmostEqual(t, 2.0, delta=1e-14)

    def test_negative_inputs(self):
        with self.assertRaises(ParameterDomainError):
            scale(-1.0, 0.0, self.params)
        with self.assertRaises(ParameterDomainError):
            unscale(0.0, -1.0, self.params)

    @given(positive, positive, st.floats(min_value=0.01, max_value=100.0))
    @settings(max_examples=50, deadline=None)
    def test_normal_level_for_random_params(self, alpha, m, theta):
        params = params_from_theta(alpha, m, theta)
        v, _ = scale(m * m, 0.0, params)
        self.assertAlmostEqual(v / theta, 1.0, delta=1e-12)


class TestScaledPoint(unittest.TestCase):
    """Test cases for ScaledPoint validation."""

    def test_boundary_point(self):
        q = ScaledPoint(x=-0.005, L=0.01, tau=0.1, v=1.0)
        self.assertTrue(q.on_boundary)

    def test_outside_interval(self):
        with self.assertRaises(ParameterDomainError) as ctx:
            ScaledPoint(x=0.006, L=0.01)
        self.assertEqual(ctx.exception.field, "x")

    def test_negative_volatility(self):
        with self.assertRaises(ParameterDomainError) as ctx:
            ScaledPoint(x=0.0, L=1.0, v=-0.1)
        self.assertEqual(ctx.exception.field, "v")

    def test_volatility_required(self):
        with self.assertRaises(ParameterDomainError):
            ScaledPoint(x=0.0, L=1.0).require_volatility()

    def test_params_are_immutable(self):
        params = ModelParams(1.0, 1.0, 1.0)
        with self.assertRaises(AttributeError):
            params.alpha = 2.0


if __name__ == '__main__':
    unittest.main()
