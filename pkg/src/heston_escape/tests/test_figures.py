"""
Unit tests for the figure datasets.
"""
import tempfile
import unittest
from pathlib import Path

import numpy as np
import pandas as pd

from ..common.errors import ParameterDomainError
from ..figures import Axis, FIGURE_IDS, FigureSpec, build_figure, default_axes, default_spec
from ..model import params_from_theta
from ..utils.data_storage import DataStorage

DEFAULT = params_from_theta(0.045, 0.093, 1.25)
LOW = params_from_theta(0.045, 0.093, 0.5)


class TestFigureSpec(unittest.TestCase):
    """Test cases for Axis and FigureSpec validation."""

    def test_axis_values(self):
        np.testing.assert_allclose(Axis("v", 1e-3, 1e3, 4, log=True).values(), [1e-3, 1e-1, 1e1, 1e3])
        np.testing.assert_allclose(Axis("x", -0.5, 0.5, 3).values(), [-0.5, 0.0, 0.5])

    def test_axis_validation(self):
        with self.assertRaises(ParameterDomainError):
            Axis("x", 0.0, 1.0, 1)
        with self.assertRaises(ParameterDomainError):
            Axis("x", 1.0, 0.0, 5)
        with self.assertRaises(ParameterDomainError):
            Axis("v", 0.0, 1.0, 5, log=True)

    def test_spec_validation(self):
        axes = (Axis("v", 0.1, 1.0, 3),)
        with self.assertRaises(ParameterDomainError):
            FigureSpec("fig9", axes, (DEFAULT,))
        with self.assertRaises(ParameterDomainError):
            FigureSpec("met_vs_v", axes, ())
        with self.assertRaises(ParameterDomainError) as ctx:
            FigureSpec("sp_surface", axes, (DEFAULT,))
        self.assertEqual(ctx.exception.field, "axes")

    def test_default_specs(self):
        for figure_id in FIGURE_IDS:
            with self.subTest(figure_id=figure_id):
                spec = default_spec(figure_id)
                self.assertEqual(spec.figure_id, figure_id)
                self.assertGreaterEqual(len(spec.params), 1)

    def test_span_override(self):
        self.assertEqual(default_spec("met_vs_v", L=0.02).extra("L"), 0.02)
        self.assertEqual(default_axes("sp_surface", 0.02)[0].stop, 0.01)
        self.assertEqual(default_spec("met_vs_L_small_theta", L=0.02).extras, {})

    def test_five_day_horizon(self):
        spec = default_spec("sp_vs_x_wiener", alpha=0.1)
        self.assertAlmostEqual(spec.extra("tau"), 0.5, places=14)

    def test_lowest_theta_asymptotes(self):
        spec = default_spec("sp_return_vs_tau")
        self.assertAlmostEqual(spec.extra("asymptote_thetas")[0], 0.5, places=12)


class TestBuildFigure(unittest.TestCase):
    """Test cases for build_figure on small grids."""

    def test_surface_layout(self):
        spec = FigureSpec("sp_surface", (Axis("x", -0.005, 0.005, 3), Axis("v", 0.0, 2.0, 2)),
                          (DEFAULT,), {"tau": 0.1})
        frame = build_figure(spec)
        self.assertEqual(list(frame.columns), ["x", "v", "theta=1.25"])
        self.assertEqual(len(frame), 6)
        np.testing.assert_allclose(frame["x"], [-0.005, 0.0, 0.005] * 2)
        np.testing.assert_allclose(frame["v"], [0.0] * 3 + [2.0] * 3)
        # the barriers sit at the ends of the x axis
        self.assertTrue(np.all(frame.loc[frame["x"].abs() == 0.005, "theta=1.25"] == 0.0))
        interior = frame.loc[frame["x"] == 0.0, "theta=1.25"].to_numpy()
        self.assertGreater(interior[0], interior[1])

    def test_met_vs_v_saturation(self):
        spec = FigureSpec("met_vs_v", (Axis("v", 1e-3, 1e3, 4, log=True),), (LOW, DEFAULT))
        frame = build_figure(spec)
        for column in ("theta=0.5", "theta=1.25"):
            with self.subTest(column=column):
                values = frame[column].to_numpy()
                self.assertGreaterEqual(values[0] / values[-1], 10.0)
                self.assertTrue(np.all(np.diff(values) < 0))

    def test_return_survival_with_asymptotes(self):
        spec = FigureSpec("sp_return_vs_tau", (Axis("tau", 0.0, 0.1, 5),), (LOW, DEFAULT),
                          {"asymptote_thetas": (0.5,)})
        frame = build_figure(spec)
        self.assertEqual(list(frame.columns),
                         ["tau", "theta=0.5", "theta=1.25", "long:theta=0.5", "short:theta=0.5"])
        self.assertEqual(frame["theta=0.5"].iloc[0], 1.0)
        self.assertTrue(np.isnan(frame["long:theta=0.5"].iloc[0]))
        self.assertEqual(frame["short:theta=0.5"].iloc[0], 1.0)
        self.assertTrue(np.all(np.diff(frame["theta=1.25"]) <= 0))

    def test_unknown_asymptote(self):
        spec = FigureSpec("sp_return_vs_tau", (Axis("tau", 0.0, 0.1, 3),), (DEFAULT,),
                          {"asymptote_thetas": (0.7,)})
        with self.assertRaises(ParameterDomainError):
            build_figure(spec)

    def test_heston_above_wiener(self):
        spec = FigureSpec("sp_vs_tau_wiener", (Axis("tau", 0.01, 0.1, 6),), (DEFAULT,))
        frame = build_figure(spec)
        np.testing.assert_allclose(frame["t"], frame["tau"] / DEFAULT.alpha)
        self.assertTrue(np.all(frame["theta=1.25"] >= frame["wiener"]))

    def test_outer_column(self):
        spec = FigureSpec("met_vs_L_large_theta", (Axis("L", 10.0, 100.0, 3, log=True),), (DEFAULT,))
        frame = build_figure(spec)
        ratio = frame["theta=1.25"] / frame["outer"]
        self.assertTrue(np.all(np.abs(ratio - 1.0) < 0.05))

    def test_deterministic_output(self):
        spec = FigureSpec("met_return_vs_x", (Axis("x_over_L", -0.5, 0.5, 5),), (LOW, DEFAULT),
                          {"L_values": (0.01,)})
        serial = build_figure(spec, workers=1)
        threaded = build_figure(spec, workers=3)
        pd.testing.assert_frame_equal(serial, threaded)
        self.assertEqual(list(serial.columns),
                         ["x_over_L", "L=0.01,theta=0.5", "L=0.01,theta=1.25", "L=0.01,wiener"])

        with tempfile.TemporaryDirectory() as tmp:
            storage = DataStorage(tmp)
            first = Path(storage.save_grid_csv(serial, "a.csv")).read_bytes()
            second = Path(storage.save_grid_csv(build_figure(spec, workers=2), "b.csv")).read_bytes()
        self.assertEqual(first, second)
        self.assertTrue(first.startswith(b"x_over_L,L=0.01,theta=0.5,L=0.01,theta=1.25,L=0.01,wiener\n"))


if __name__ == '__main__':
    unittest.main()
