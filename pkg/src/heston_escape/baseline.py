"""
Escape problem of a driftless Wiener process with constant volatility sigma,
the reference against which the Heston results are compared.
"""
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .common.base_series import CosineSeries, SeriesControl, SeriesResult
from .common.errors import require
from .modal import Harmonics, harmonics


@dataclass(frozen=True)
class WienerParams:
    sigma: float

    def __post_init__(self):
        require(isinstance(self.sigma, (int, float)) and math.isfinite(self.sigma) and self.sigma > 0,
                "sigma", self.sigma, "volatility must be finite and positive")


class WienerSurvivalSeries(CosineSeries):
    """(4/pi) sum (-1)^n/(2n+1) exp(-[(2n+1) pi sigma / L]^2 t / 2) cos((2n+1) pi x / L)."""

    clamp_unit = True

    def __init__(self, t: float, L: float, wiener: WienerParams,
                 ctrl: Optional[SeriesControl] = None):
        super().__init__(L, None, ctrl)
        require(math.isfinite(t) and t >= 0, "t", t, "time must be finite and non-negative")
        self.t = float(t)
        self.sigma = wiener.sigma

    def block(self, n_start: int, n_stop: int) -> Harmonics:
        return harmonics(n_start, n_stop)

    def closed_value(self) -> Optional[float]:
        return 1.0 if self.t == 0.0 else None

    def amplitudes(self, modes: Harmonics) -> np.ndarray:
        rate = ((2 * modes.n + 1) * math.pi * self.sigma / self.L) ** 2 / 2.0
        return modes.gamma_n * np.exp(-rate * self.t)


def survival_wiener_result(x: float, t: float, L: float, sigma: float,
                           ctrl: Optional[SeriesControl] = None) -> SeriesResult:
    return WienerSurvivalSeries(t, L, WienerParams(sigma), ctrl).evaluate(x)


def survival_wiener(x: float, t: float, L: float, sigma: float,
                    ctrl: Optional[SeriesControl] = None) -> float:
    """Survival probability of the Wiener process started at ``x`` after time ``t``."""
    return survival_wiener_result(x, t, L, sigma, ctrl).value


def met_wiener(x: float, L: float, sigma: float) -> float:
    """Mean escape time [(L/2)^2 - x^2] / sigma^2."""
    sigma = WienerParams(sigma).sigma
    require(math.isfinite(L) and L > 0, "L", L, "span must be finite and positive")
    require(abs(x) <= 0.5 * L, "x", x, f"must satisfy |x| <= L/2 = {0.5 * L}")
    return ((0.5 * L) ** 2 - x * x) / (sigma * sigma)
