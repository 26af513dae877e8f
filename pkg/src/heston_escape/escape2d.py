"""
Joint escape problem in (return, volatility).

All quantities are series over the modes of :mod:`heston_escape.modal`:

* survival S(x, v, tau) = sum gamma_n exp(-A_n - B_n v) cos((2n+1) pi x / L)
* escape-time density f = -dS/dtau
* mean escape time T(x, v) = (1/alpha) int_0^inf S dtau, in original time units.

The mean-time amplitude of mode n is

    T_n(v) = gamma_n / (theta mu_-) (Delta/mu_+)^theta int_0^1 (1 + r xi)^(-theta) e^{-B(xi) v} du

with xi = u^(1/b), b = theta mu_- / Delta, r = mu_-/mu_+ and
B(xi) = mu_- (1 - xi) / (1 + r xi). The substitution removes the endpoint power
singularity; a second one, u = 1 - e^{-t}, turns the boundary layer at u = 1
into a smooth bump which ``quad_vec`` integrates for a whole block of modes.
"""
import logging
import math
from typing import Optional

import numpy as np
from scipy import integrate

from .common.base_series import CosineSeries, SeriesControl, SeriesResult
from .common.errors import ConvergenceError, ParameterDomainError, require
from .modal import ModeTable, riccati_A, riccati_A_B_derivatives, riccati_B
from .model import ModelParams, ScaledPoint
from .specfun import gauss_2f1

logger = logging.getLogger(__name__)

SurvivalResult = SeriesResult

LONG_TIME_WINDOW = 1.0
SHORT_TIME_WINDOW = 0.1


class Survival2DSeries(CosineSeries):
    """Exact survival probability S(x, v, tau)."""

    clamp_unit = True

    def __init__(self, tau: float, v: float, L: float, params: ModelParams,
                 ctrl: Optional[SeriesControl] = None):
        super().__init__(L, params, ctrl)
        self.tau = tau
        self.v = v

    def closed_value(self) -> Optional[float]:
        return 1.0 if self.tau == 0.0 else None

    def amplitudes(self, modes: ModeTable) -> np.ndarray:
        exponent = riccati_A(modes, self.tau, self.params.theta) + riccati_B(modes, self.tau) * self.v
        return modes.gamma_n * np.exp(-exponent)


class Survival2DLongTimeSeries(CosineSeries):
    """Long-time form sum gamma_n exp(-mu_-(theta tau + v)) cos(.).

    With ``matched`` the constant (Delta/mu_+)^theta left over by
    A_n ~ theta mu_- tau - theta ln(Delta/mu_+) is kept.
    """

    def __init__(self, tau: float, v: float, L: float, params: ModelParams,
                 ctrl: Optional[SeriesControl] = None, matched: bool = False):
        super().__init__(L, params, ctrl)
        self.tau = tau
        self.v = v
        self.matched = matched

    def amplitudes(self, modes: ModeTable) -> np.ndarray:
        theta = self.params.theta
        log_amp = -modes.mu_minus * (theta * self.tau + self.v)
        if self.matched:
            log_amp = log_amp + theta * np.log(modes.delta_n / modes.mu_plus)
        return modes.gamma_n * np.exp(log_amp)


class Survival2DShortTimeSeries(CosineSeries):
    """Short-time form, valid while mu_- tau < 1 for every contributing mode."""

    def __init__(self, tau: float, v: float, L: float, params: ModelParams,
                 ctrl: Optional[SeriesControl] = None):
        super().__init__(L, params, ctrl)
        self.tau = tau
        self.v = v

    def closed_value(self) -> Optional[float]:
        return 1.0 if self.tau == 0.0 else None

    def amplitudes(self, modes: ModeTable) -> np.ndarray:
        theta, tau = self.params.theta, self.tau
        lag = 1.0 - modes.mu_minus * tau
        valid = lag > 0
        safe = np.where(valid, lag, 1.0)
        amps = modes.gamma_n * safe ** (-theta) * np.exp(
            -(theta * modes.mu_minus + modes.kappa_sq * self.v / safe) * tau)
        if modes.n[0] == 0:
            self._reference = abs(float(amps[0])) if valid[0] else math.inf
            self._previous = None
        if not valid.all():
            first = int(np.argmin(valid))
            before = float(amps[first - 1]) if first > 0 else self._previous
            # invalid modes are tolerated only beyond the point where the
            # amplitudes have already become negligible
            if before is None or abs(before) > self.ctrl.rel_tol * self._reference:
                raise ParameterDomainError(
                    "tau", tau,
                    f"short-time expansion needs mu_- tau < 1; mode {int(modes.n[first])} has "
                    f"mu_- tau = {float(modes.mu_minus[first]) * tau:.3f}",
                )
            amps = np.where(valid, amps, 0.0)
        self._previous = float(amps[-1])
        return amps


class EscapeDensitySeries(CosineSeries):
    """Escape-time density f = sum gamma_n (A_n' + B_n' v) exp(-A_n - B_n v) cos(.)."""

    def __init__(self, tau: float, v: float, L: float, params: ModelParams,
                 ctrl: Optional[SeriesControl] = None):
        super().__init__(L, params, ctrl)
        self.tau = tau
        self.v = v

    def amplitudes(self, modes: ModeTable) -> np.ndarray:
        theta = self.params.theta
        d_a, d_b = riccati_A_B_derivatives(modes, self.tau, theta)
        exponent = riccati_A(modes, self.tau, theta) + riccati_B(modes, self.tau) * self.v
        return modes.gamma_n * (d_a + d_b * self.v) * np.exp(-exponent)


class Met2DSeries(CosineSeries):
    """Mean escape time T(x, v) in original time units."""

    first_block = 64

    def __init__(self, v: float, L: float, params: ModelParams,
                 ctrl: Optional[SeriesControl] = None):
        super().__init__(L, params, ctrl)
        self.v = v

    @classmethod
    def default_control(cls) -> SeriesControl:
        return SeriesControl.for_mean_time()

    def _prefactor(self, modes: ModeTable) -> np.ndarray:
        theta = self.params.theta
        return (modes.gamma_n / (theta * modes.mu_minus)
                * (modes.delta_n / modes.mu_plus) ** theta / self.params.alpha)

    def amplitudes(self, modes: ModeTable) -> np.ndarray:
        theta, v = self.params.theta, self.v
        mu_minus = np.asarray(modes.mu_minus)
        r = np.asarray(modes.ratio)
        b = theta * mu_minus / modes.delta_n
        tol = self.ctrl.rel_tol / 10.0

        def integrand(t: float) -> np.ndarray:
            u = -math.expm1(-t)
            log_u = math.log(u) if u > 0 else -math.inf
            xi = np.exp(log_u / b)
            one_minus_xi = -np.expm1(log_u / b)
            big_b = mu_minus * one_minus_xi / (1.0 + r * xi)
            return (1.0 + r * xi) ** (-theta) * np.exp(-big_b * v) * math.exp(-t)

        bump = np.log(np.maximum(1.0, mu_minus * v / (b * (1.0 + r))))
        t_max = float(np.max(bump)) + math.log(1.0 / tol) + 10.0
        values, err, info = integrate.quad_vec(
            integrand, 0.0, t_max, epsabs=0.0, epsrel=tol, norm="max", full_output=True,
        )
        if info.status == 1:
            raise ConvergenceError(
                f"mean-time quadrature failed for modes {modes.n[0]}..{modes.n[-1]}",
                modes_used=int(modes.n[0]),
                diagnostics={"error": err, "neval": info.neval, "v": v},
            )
        return self._prefactor(modes) * np.asarray(values)


class Met2DZeroVolSeries(Met2DSeries):
    """T(x, 0) with the amplitudes in hypergeometric closed form."""

    def __init__(self, L: float, params: ModelParams, ctrl: Optional[SeriesControl] = None):
        super().__init__(0.0, L, params, ctrl)

    def amplitudes(self, modes: ModeTable) -> np.ndarray:
        theta = self.params.theta
        b = theta * modes.mu_minus / modes.delta_n
        hyp = gauss_2f1(theta, b, 1.0 + b, -modes.ratio)
        return self._prefactor(modes) * hyp


class Met2DWatsonCorrection(CosineSeries):
    """Second-order Watson term gamma_n / (kappa_n^4 v^2) of the mean time.

    It comes from the curvature B_n''(0) = -kappa_n^2; the A_n term enters one order later.
    """

    def __init__(self, v: float, L: float, params: ModelParams,
                 ctrl: Optional[SeriesControl] = None):
        super().__init__(L, params, ctrl)
        self.v = v

    def amplitudes(self, modes: ModeTable) -> np.ndarray:
        return modes.gamma_n / (modes.kappa_sq ** 2 * self.v ** 2) / self.params.alpha


def _point(q: ScaledPoint) -> float:
    return q.require_volatility()


def survival_2d(q: ScaledPoint, params: ModelParams,
                ctrl: Optional[SeriesControl] = None) -> SurvivalResult:
    """Exact survival probability S(x, v, tau) with truncation diagnostics."""
    v = _point(q)
    return Survival2DSeries(q.tau, v, q.L, params, ctrl).evaluate(q.x)


def survival_2d_longtime(q: ScaledPoint, params: ModelParams,
                         ctrl: Optional[SeriesControl] = None, matched: bool = False) -> float:
    """Long-time survival form; accurate once tau >~ 1 and one mode dominates."""
    v = _point(q)
    if q.tau < LONG_TIME_WINDOW:
        logger.debug(f"long-time survival form used at tau={q.tau} < {LONG_TIME_WINDOW}")
    return Survival2DLongTimeSeries(q.tau, v, q.L, params, ctrl, matched).evaluate(q.x).value


def survival_2d_shorttime(q: ScaledPoint, params: ModelParams,
                          ctrl: Optional[SeriesControl] = None) -> float:
    """Short-time survival form; raises when mu_- tau >= 1 for a contributing mode."""
    v = _point(q)
    if q.tau > SHORT_TIME_WINDOW:
        logger.debug(f"short-time survival form used at tau={q.tau} > {SHORT_TIME_WINDOW}")
    return Survival2DShortTimeSeries(q.tau, v, q.L, params, ctrl).evaluate(q.x).value


def escape_density(q: ScaledPoint, params: ModelParams,
                   ctrl: Optional[SeriesControl] = None) -> float:
    """Density of the scaled escape time at tau > 0."""
    v = _point(q)
    require(q.tau > 0, "tau", q.tau, "escape-time density needs tau > 0")
    return EscapeDensitySeries(q.tau, v, q.L, params, ctrl).evaluate(q.x).value


def met_2d(x: float, v: float, L: float, params: ModelParams,
           ctrl: Optional[SeriesControl] = None) -> float:
    """Mean escape time T(x, v) in original time units."""
    q = ScaledPoint(x=x, L=L, v=v)
    return Met2DSeries(q.v, q.L, params, ctrl).evaluate(q.x).value


def met_2d_zero_vol(x: float, L: float, params: ModelParams,
                    ctrl: Optional[SeriesControl] = None) -> float:
    """Mean escape time at zero initial volatility (finite saturation value)."""
    q = ScaledPoint(x=x, L=L, v=0.0)
    return Met2DZeroVolSeries(q.L, params, ctrl).evaluate(q.x).value


def met_2d_large_vol(x: float, v: float, L: float, params: ModelParams) -> float:
    """Leading large-volatility mean time (2 alpha / (k^2 v)) [(L/2)^2 - x^2]."""
    q = ScaledPoint(x=x, L=L, v=v)
    require(q.v > 0, "v", v, "large-volatility law needs v > 0")
    return 2.0 * params.alpha / (params.k ** 2 * q.v) * ((0.5 * q.L) ** 2 - q.x ** 2)


def met_2d_watson(x: float, v: float, L: float, params: ModelParams, order: int = 2,
                  ctrl: Optional[SeriesControl] = None) -> float:
    """Large-volatility expansion of T(x, v) to first or second order in 1/v."""
    require(order in (1, 2), "order", order, "Watson expansion is available to order 1 or 2")
    leading = met_2d_large_vol(x, v, L, params)
    if order == 1:
        return leading
    return leading + Met2DWatsonCorrection(v, L, params, ctrl).evaluate(x).value
