"""
Heston parameter set and the dimensionless rescalings.

The return X and the variance Y follow

    dX = sqrt(Y) dW1,    dY = -alpha (Y - m^2) dt + k sqrt(Y) dW2

with independent noises. Every closed form in the package is written in the
scaled variables tau = alpha t and v = (2 alpha / k^2) y, where the only
remaining parameter is the dimensionless normal level theta = 2 alpha m^2 / k^2.
"""
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

from .common.errors import require


def _check_positive(name: str, value: float) -> float:
    require(
        isinstance(value, (int, float)) and math.isfinite(value) and value > 0,
        name, value, "must be finite and strictly positive",
    )
    return float(value)


def _check_nonnegative(name: str, value: float) -> float:
    require(
        isinstance(value, (int, float)) and math.isfinite(value) and value >= 0,
        name, value, "must be finite and non-negative",
    )
    return float(value)


@dataclass(frozen=True)
class ModelParams:
    """Heston triple (alpha, m, k) and the derived normal level theta.

    Args:
        alpha: mean-reversion rate, 1/time
        m: volatility normal level, 1/time^(1/2)
        k: vol-of-vol, 1/time
    """
    alpha: float
    m: float
    k: float
    theta: float = field(init=False)

    def __post_init__(self):
        alpha = _check_positive("alpha", self.alpha)
        m = _check_positive("m", self.m)
        k = _check_positive("k", self.k)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "k", k)
        theta = 2.0 * alpha * m * m / (k * k)
        require(math.isfinite(theta) and theta > 0, "theta", theta,
                "derived normal level is not a positive finite number")
        object.__setattr__(self, "theta", theta)

    @property
    def k_over_alpha(self) -> float:
        """Scale of the Fourier wavenumbers beta_n."""
        return self.k / self.alpha

    @property
    def feller(self) -> bool:
        """True when the variance process never reaches zero (theta >= 1)."""
        return self.theta >= 1.0

    def with_k(self, k: float) -> "ModelParams":
        return ModelParams(self.alpha, self.m, k)


def make_params(alpha: float, m: float, k: float) -> ModelParams:
    """Build a validated parameter set from the Heston triple."""
    return ModelParams(alpha, m, k)


def params_from_theta(alpha: float, m: float, theta: float) -> ModelParams:
    """Build a parameter set from (alpha, m, theta), deriving k."""
    alpha = _check_positive("alpha", alpha)
    m = _check_positive("m", m)
    theta = _check_positive("theta", theta)
    return ModelParams(alpha, m, math.sqrt(2.0 * alpha * m * m / theta))


@dataclass(frozen=True)
class ScaledPoint:
    """A point of the scaled problem.

    ``v`` is None for volatility-averaged queries.
    """
    x: float
    L: float
    tau: float = 0.0
    v: Optional[float] = None

    def __post_init__(self):
        L = _check_positive("L", self.L)
        tau = _check_nonnegative("tau", self.tau)
        require(isinstance(self.x, (int, float)) and math.isfinite(self.x),
                "x", self.x, "must be finite")
        require(abs(self.x) <= 0.5 * L, "x", self.x, f"must satisfy |x| <= L/2 = {0.5 * L}")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "tau", tau)
        if self.v is not None:
            object.__setattr__(self, "v", _check_nonnegative("v", self.v))

    @property
    def on_boundary(self) -> bool:
        return abs(self.x) == 0.5 * self.L

    def require_volatility(self) -> float:
        require(self.v is not None, "v", self.v, "this quantity needs a volatility value")
        return self.v


def scale(y: float, t: float, params: ModelParams) -> Tuple[float, float]:
    """Map variance ``y`` and time ``t`` to the scaled pair (v, tau)."""
    y = _check_nonnegative("y", y)
    t = _check_nonnegative("t", t)
    return 2.0 * params.alpha * y / (params.k * params.k), params.alpha * t


def unscale(v: float, tau: float, params: ModelParams) -> Tuple[float, float]:
    """Inverse of :func:`scale`: (v, tau) back to (y, t)."""
    v = _check_nonnegative("v", v)
    tau = _check_nonnegative("tau", tau)
    return v * params.k * params.k / (2.0 * params.alpha), tau / params.alpha
