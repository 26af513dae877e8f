"""
Return-only escape problem: the joint quantities averaged over the stationary
Gamma law of the scaled volatility,

    p_st(v) = v^(theta-1) e^(-v) / Gamma(theta).

Averaging mode by mode gives closed forms for the survival probability S(x, tau)
and the mean escape time T(x); for small spans T follows a power law in L
whose exponent changes at theta = 1, for large spans T grows like L^2.
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special

from .common.base_series import CosineSeries, SeriesControl
from .common.errors import ConvergenceError, ParameterDomainError, require
from .modal import ModeTable
from .model import ModelParams, ScaledPoint
from .specfun import gauss_2f1_unit_c, ln_gamma

logger = logging.getLogger(__name__)

BELOW_ONE = "below_one"
EQUAL_ONE = "equal_one"
ABOVE_ONE = "above_one"
THETA_ONE_TOL = 1e-9
SMALL_SPAN_FACTOR = 1e-2
# spans below LARGE_SPAN_FACTOR k/alpha are outside the large-span law
LARGE_SPAN_FACTOR = 10.0
LARGE_SPAN_TOL = 0.05
RETURN_DECAY_EXPONENT = 25.0
MAX_RETURN_MODES = 1 << 22


def theta_regime(theta: float) -> str:
    if abs(theta - 1.0) <= THETA_ONE_TOL:
        return EQUAL_ONE
    return BELOW_ONE if theta < 1.0 else ABOVE_ONE


def stationary_density(v: float, theta: float) -> float:
    """Gamma(theta) density of the scaled volatility."""
    require(math.isfinite(theta) and theta > 0, "theta", theta, "must be positive")
    require(math.isfinite(v) and v >= 0, "v", v, "must be non-negative")
    if v == 0.0:
        if theta < 1.0:
            return math.inf
        return 1.0 if theta == 1.0 else 0.0
    return math.exp((theta - 1.0) * math.log(v) - v - ln_gamma(theta))


def stationary_average(func: Callable[[float], float], theta: float,
                       upper: Optional[float] = None, epsrel: float = 1e-11) -> float:
    """Average of ``func(v)`` over the stationary law, truncated at ``upper``.

    The factor v^(theta-1) is handed to QUADPACK as an algebraic endpoint
    weight, so theta < 1 needs no special treatment.
    """
    require(math.isfinite(theta) and theta > 0, "theta", theta, "must be positive")
    upper = 50.0 + 10.0 * theta if upper is None else upper
    value, abserr = integrate.quad(
        lambda v: func(v) * math.exp(-v), 0.0, upper,
        weight="alg", wvar=(theta - 1.0, 0.0), epsabs=0.0, epsrel=epsrel, limit=400,
    )
    if not math.isfinite(value):
        raise ConvergenceError("stationary average is not finite",
                               diagnostics={"theta": theta, "abserr": abserr})
    return value * math.exp(-ln_gamma(theta))


def _log_return_factor(modes: ModeTable, tau: float, theta: float) -> np.ndarray:
    # ln[(Delta e^{-mu_- tau} / (mu_+^2 - mu_-^2 e^{-Delta tau}))^theta], using
    # mu_+^2 - mu_-^2 = Delta
    one_minus_e = -np.expm1(-modes.delta_n * tau)
    return -theta * (modes.mu_minus * tau + np.log1p(modes.mu_minus ** 2 * one_minus_e / modes.delta_n))


def return_survival_modes(tau: float, L: float, params: ModelParams) -> int:
    """Mode limit for the return survival series at scaled time ``tau``.

    Before exp(-theta mu_- tau) takes over, the amplitudes fall off only like a
    power of n. For large n, mu_- grows like (k/alpha) pi n / L, so the
    exponential factor reaches e^-25 at n = 25 L / (theta tau (k/alpha) pi).
    """
    require(math.isfinite(L) and L > 0, "L", L, "span must be finite and positive")
    base = SeriesControl().max_modes
    if tau <= 0.0:
        return base
    slope = params.theta * tau * params.k_over_alpha * math.pi / L
    return int(min(base + math.ceil(RETURN_DECAY_EXPONENT / slope), MAX_RETURN_MODES))


class SurvivalReturnSeries(CosineSeries):
    """Exact survival probability of the return, S(x, tau).

    Without an explicit ``ctrl`` the mode limit grows like 1/tau, see
    :func:`return_survival_modes`.
    """

    clamp_unit = True

    def __init__(self, tau: float, L: float, params: ModelParams,
                 ctrl: Optional[SeriesControl] = None):
        if ctrl is None:
            ctrl = SeriesControl(max_modes=return_survival_modes(tau, L, params))
        super().__init__(L, params, ctrl)
        self.tau = tau

    def closed_value(self) -> Optional[float]:
        return 1.0 if self.tau == 0.0 else None

    def amplitudes(self, modes: ModeTable) -> np.ndarray:
        return modes.gamma_n * np.exp(_log_return_factor(modes, self.tau, self.params.theta))


class SurvivalReturnLongTimeSeries(SurvivalReturnSeries):
    clamp_unit = False

    def closed_value(self) -> Optional[float]:
        return None

    def amplitudes(self, modes: ModeTable) -> np.ndarray:
        theta = self.params.theta
        return modes.gamma_n * np.exp(
            theta * (np.log(modes.delta_n) - 2.0 * np.log(modes.mu_plus) - modes.mu_minus * self.tau))


class SurvivalReturnShortTimeSeries(SurvivalReturnSeries):
    clamp_unit = False

    def amplitudes(self, modes: ModeTable) -> np.ndarray:
        theta, tau = self.params.theta, self.tau
        return modes.gamma_n * np.exp(
            -theta * (modes.mu_minus * tau + np.log1p(modes.mu_minus ** 2 * tau)))


class MetReturnSeries(CosineSeries):
    """Mean escape time of the return, T(x), in original time units."""

    first_block = 64

    @classmethod
    def default_control(cls) -> SeriesControl:
        return SeriesControl.for_mean_time()

    def amplitudes(self, modes: ModeTable) -> np.ndarray:
        theta = self.params.theta
        r = modes.ratio
        b = theta * modes.mu_minus / modes.delta_n
        # 1 - r^2 = (1 + r)(1 - r) and 1 - r = 1/mu_+
        hyp = gauss_2f1_unit_c(theta, b, r * r, one_minus_z=(1.0 + r) / modes.mu_plus,
                               rel_tol=self.ctrl.rel_tol / 10.0)
        log_pref = theta * (np.log(modes.delta_n) - 2.0 * np.log(modes.mu_plus))
        return (modes.gamma_n / modes.mu_minus * np.exp(log_pref) * hyp
                / (self.params.alpha * theta))


@dataclass(frozen=True)
class SmallSpanConstants:
    """Prefactors of the small-span law.

    For theta != 1, T(x) ~ N L^p sum (-1)^n (2n+1)^-(p+1) cos(.) with
    p = theta + 1 (theta < 1) or p = 2 (theta > 1), and T(0) ~ K L^p.
    For theta = 1, T(0) ~ L^2 [N (-ln L) + K].
    """
    regime: str
    exponent: float
    N: float
    K: float


def _dirichlet_beta(s: float) -> float:
    # sum (-1)^n (2n+1)^-s through Hurwitz zeta
    return 4.0 ** (-s) * (special.zeta(s, 0.25) - special.zeta(s, 0.75))


def small_span_constants(params: ModelParams) -> SmallSpanConstants:
    """Prefactors of the small-span mean-time law for ``params``."""
    theta, alpha, k = params.theta, params.alpha, params.k
    regime = theta_regime(theta)
    if regime == BELOW_ONE:
        log_g = ln_gamma(1.0 + theta / 2.0) + ln_gamma(1.0 - theta) - ln_gamma(1.0 - theta / 2.0)
        n_const = (2.0 ** (2.0 * theta + 3.0) / (math.pi * alpha * theta)
                   * (alpha / (math.pi * k)) ** (theta + 1.0) * math.exp(log_g))
        return SmallSpanConstants(regime, theta + 1.0, n_const, n_const * _dirichlet_beta(theta + 2.0))
    if regime == ABOVE_ONE:
        n_const = 16.0 * alpha / (math.pi ** 3 * k * k * (theta - 1.0))
        return SmallSpanConstants(regime, 2.0, n_const, n_const * math.pi ** 3 / 32.0)
    n = np.arange(1 << 20)
    gamma = 4.0 * np.where(n % 2 == 0, 1.0, -1.0) / (math.pi * (2 * n + 1))
    beta = params.k_over_alpha * (2 * n + 1) * math.pi
    offset = 4.0 / alpha * float(np.sum(gamma / beta ** 2 * np.log(beta / 4.0)))
    return SmallSpanConstants(regime, 2.0, alpha / (2.0 * k * k), offset)


class SmallSpanSeries(CosineSeries):
    """Small-span asymptote of T(x) in the regime fixed by theta."""

    @classmethod
    def default_control(cls) -> SeriesControl:
        return SeriesControl(max_modes=1 << 20, rel_tol=1e-10)

    def __init__(self, L: float, params: ModelParams, ctrl: Optional[SeriesControl] = None):
        super().__init__(L, params, ctrl)
        self.constants = small_span_constants(params)

    def amplitudes(self, modes: ModeTable) -> np.ndarray:
        c = self.constants
        odd = 2.0 * modes.n + 1.0
        sign = np.where(modes.n % 2 == 0, 1.0, -1.0)
        if c.regime == EQUAL_ONE:
            return (4.0 * self.L ** 2 / self.params.alpha * modes.gamma_n / modes.beta_n ** 2
                    * -np.log(4.0 * self.L / modes.beta_n))
        return c.N * self.L ** c.exponent * sign * odd ** (-(c.exponent + 1.0))


@dataclass(frozen=True)
class SpanScalingReport:
    theta_regime: str
    fitted_exponent: float
    prefactor: float
    fit_range: Tuple[float, float]
    L_values: Tuple[float, ...] = ()
    values: Tuple[float, ...] = ()
    outer_ratios: Tuple[float, ...] = ()
    # filled in by met_return_large_span_check only
    exponent_error: float = math.nan
    outer_error: float = math.nan
    passed: Optional[bool] = None


def survival_return(x: float, tau: float, L: float, params: ModelParams,
                    ctrl: Optional[SeriesControl] = None) -> float:
    q = ScaledPoint(x=x, L=L, tau=tau)
    return SurvivalReturnSeries(q.tau, q.L, params, ctrl).evaluate(q.x).value


def survival_return_longtime(x: float, tau: float, L: float, params: ModelParams,
                             ctrl: Optional[SeriesControl] = None) -> float:
    q = ScaledPoint(x=x, L=L, tau=tau)
    return SurvivalReturnLongTimeSeries(q.tau, q.L, params, ctrl).evaluate(q.x).value


def survival_return_shorttime(x: float, tau: float, L: float, params: ModelParams,
                              ctrl: Optional[SeriesControl] = None) -> float:
    q = ScaledPoint(x=x, L=L, tau=tau)
    return SurvivalReturnShortTimeSeries(q.tau, q.L, params, ctrl).evaluate(q.x).value


def met_return(x: float, L: float, params: ModelParams,
               ctrl: Optional[SeriesControl] = None) -> float:
    """Mean escape time of the return started at ``x`` with stationary volatility."""
    q = ScaledPoint(x=x, L=L)
    return MetReturnSeries(q.L, params, ctrl).evaluate(q.x).value


def met_outer(x: float, L: float, y: float) -> float:
    """Outer approximation [(L/2)^2 - x^2] / y of the mean time at variance y."""
    require(math.isfinite(y) and y > 0, "y", y, "variance must be positive")
    q = ScaledPoint(x=x, L=L)
    return ((0.5 * q.L) ** 2 - q.x ** 2) / y


def met_return_small_span(x: float, L: float, params: ModelParams,
                          threshold: Optional[float] = None,
                          ctrl: Optional[SeriesControl] = None) -> float:
    """Small-span asymptote of :func:`met_return`.

    Spans above ``threshold`` (default 1e-2 k/alpha) are evaluated anyway and
    logged; the exact series remains the reference there.
    """
    q = ScaledPoint(x=x, L=L)
    limit = SMALL_SPAN_FACTOR * params.k_over_alpha if threshold is None else threshold
    if q.L > limit:
        logger.warning(f"small-span law used at L={q.L:.3e} above its threshold {limit:.3e}")
    return SmallSpanSeries(q.L, params, ctrl).evaluate(q.x).value


def met_return_span_sweep(x_frac: float, L_list: Sequence[float], params: ModelParams,
                          ctrl: Optional[SeriesControl] = None) -> SpanScalingReport:
    """Evaluate T(x_frac L) over ``L_list`` and fit ln T against ln L."""
    L_values = tuple(float(L) for L in L_list)
    if len(L_values) < 3:
        raise ParameterDomainError("L_list", L_values, "need at least three spans")
    if any(b <= a for a, b in zip(L_values, L_values[1:])) or L_values[0] <= 0:
        raise ParameterDomainError("L_list", L_values, "spans must be positive and increasing")
    require(abs(x_frac) <= 0.5, "x_frac", x_frac, "must satisfy |x/L| <= 1/2")

    values = tuple(met_return(x_frac * L, L, params, ctrl) for L in L_values)
    regime = theta_regime(params.theta)
    fit_range = (L_values[0], L_values[-1])
    if min(values) <= 0.0:
        logger.debug("mean times vanish on the boundary; no exponent to fit")
        return SpanScalingReport(regime, math.nan, 0.0, fit_range, L_values, values,
                                 tuple(math.nan for _ in L_values))

    slope, intercept = np.polyfit(np.log(L_values), np.log(values), 1)
    outer = tuple(T / met_outer(x_frac * L, L, params.m ** 2) for T, L in zip(values, L_values))
    logger.debug(f"fitted exponent {slope:.4f} over L in [{fit_range[0]:.1e}, {fit_range[1]:.1e}]")
    return SpanScalingReport(regime, float(slope), float(math.exp(intercept)), fit_range,
                             L_values, values, outer)


def met_return_large_span_check(x_frac: float, L_list: Sequence[float], params: ModelParams,
                                ctrl: Optional[SeriesControl] = None,
                                tol: float = LARGE_SPAN_TOL) -> SpanScalingReport:
    """Span sweep with a verdict on the large-span law T ~ [(L/2)^2 - x^2] / m^2.

    The check passes when the fitted exponent is within ``tol`` of 2 and T over
    the outer solution at the largest span is within ``tol`` of 1.
    """
    require(math.isfinite(tol) and tol > 0, "tol", tol, "must be positive")
    report = met_return_span_sweep(x_frac, L_list, params, ctrl)
    lower = LARGE_SPAN_FACTOR * params.k_over_alpha
    if report.L_values[0] < lower:
        logger.warning(f"large-span law checked from L={report.L_values[0]:.3e}, below {lower:.3e}")

    exponent_error = abs(report.fitted_exponent - 2.0)
    outer_error = abs(report.outer_ratios[-1] - 1.0)
    # nan errors (x on the boundary) fail the comparisons
    passed = bool(exponent_error <= tol and outer_error <= tol)
    logger.debug(f"large-span check: exponent off by {exponent_error:.3e}, outer ratio off by "
                 f"{outer_error:.3e}, {'pass' if passed else 'fail'}")
    return replace(report, exponent_error=float(exponent_error), outer_error=float(outer_error), passed=passed)
