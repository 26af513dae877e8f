"""
Per-mode constants and the closed-form Riccati exponents.

Mode n of every series carries the wavenumber beta_n = (k/alpha)(2n+1)pi and

    Delta_n = sqrt(1 + (beta_n/L)^2),   mu_(+/-) = (Delta_n +/- 1)/2.

The backward equation for mode n is solved by exp(-A_n(tau) - B_n(tau) v) with

    B_n = mu_- (1 - e^{-Delta tau}) / (1 + (mu_-/mu_+) e^{-Delta tau})
    A_n = theta [mu_- tau + ln((mu_+ + mu_- e^{-Delta tau}) / Delta)]

Functions here accept either a single :class:`ModeCoefficients` or a
:class:`ModeTable` holding numpy arrays for a block of modes; the arithmetic is
the same and broadcasts over ``tau``.
"""
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple, Union

import numpy as np

from .common.errors import require
from .model import ModelParams


@dataclass(frozen=True)
class ModeCoefficients:
    """Constants of Fourier mode ``n`` on the span ``L``."""
    n: int
    L: float
    gamma_n: float
    beta_n: float
    delta_n: float
    mu_plus: float
    mu_minus: float

    @property
    def kappa_sq(self) -> float:
        """(beta_n / 2L)^2, equal to mu_plus * mu_minus."""
        return (self.beta_n / (2.0 * self.L)) ** 2

    @property
    def ratio(self) -> float:
        """mu_minus / mu_plus, always in [0, 1)."""
        return self.mu_minus / self.mu_plus


@dataclass(frozen=True)
class ModeTable:
    """Vectorised constants of modes ``n_start .. n_stop - 1``."""
    n: np.ndarray
    L: float
    gamma_n: np.ndarray
    beta_n: np.ndarray
    delta_n: np.ndarray
    mu_plus: np.ndarray
    mu_minus: np.ndarray

    @property
    def kappa_sq(self) -> np.ndarray:
        return (self.beta_n / (2.0 * self.L)) ** 2

    @property
    def ratio(self) -> np.ndarray:
        return self.mu_minus / self.mu_plus

    def __len__(self) -> int:
        return len(self.n)


Modes = Union[ModeCoefficients, ModeTable]


def _mode_arrays(n, L: float, params: ModelParams):
    odd = 2 * n + 1
    gamma = 4.0 * np.where(n % 2 == 0, 1.0, -1.0) / (math.pi * odd)
    beta = params.k_over_alpha * odd * math.pi
    delta = np.hypot(1.0, beta / L)
    kappa_sq = (beta / (2.0 * L)) ** 2
    # (Delta - 1)/2 rewritten without cancellation for beta/L << 1
    mu_minus = 2.0 * kappa_sq / (delta + 1.0)
    mu_plus = 0.5 * (delta + 1.0)
    return gamma, beta, delta, mu_plus, mu_minus


@lru_cache(maxsize=4096)
def mode_coeffs(n: int, L: float, params: ModelParams) -> ModeCoefficients:
    """Constants of mode ``n`` for span ``L``; memoised per (n, L, params)."""
    require(isinstance(n, (int, np.integer)) and n >= 0, "n", n, "mode index must be >= 0")
    require(math.isfinite(L) and L > 0, "L", L, "span must be finite and positive")
    gamma, beta, delta, mu_plus, mu_minus = _mode_arrays(np.int64(n), float(L), params)
    return ModeCoefficients(
        n=int(n), L=float(L), gamma_n=float(gamma), beta_n=float(beta),
        delta_n=float(delta), mu_plus=float(mu_plus), mu_minus=float(mu_minus),
    )


@lru_cache(maxsize=256)
def mode_table(n_start: int, n_stop: int, L: float, params: ModelParams) -> ModeTable:
    """Constants of modes ``n_start <= n < n_stop`` as read-only arrays."""
    require(0 <= n_start < n_stop, "n_stop", n_stop, "need 0 <= n_start < n_stop")
    require(math.isfinite(L) and L > 0, "L", L, "span must be finite and positive")
    n = np.arange(n_start, n_stop, dtype=np.int64)
    arrays = _mode_arrays(n, float(L), params)
    for arr in (n,) + arrays:
        arr.flags.writeable = False
    gamma, beta, delta, mu_plus, mu_minus = arrays
    return ModeTable(n=n, L=float(L), gamma_n=gamma, beta_n=beta, delta_n=delta,
                     mu_plus=mu_plus, mu_minus=mu_minus)


def _decay(modes: Modes, tau):
    tau = np.asarray(tau, dtype=float)
    return np.exp(-modes.delta_n * tau), -np.expm1(-modes.delta_n * tau)


def riccati_B(modes: Modes, tau):
    """B_n(tau); rises monotonically from 0 to mu_minus."""
    e, one_minus_e = _decay(modes, tau)
    return modes.mu_minus * one_minus_e / (1.0 + modes.ratio * e)


def riccati_A(modes: Modes, tau, theta: float):
    """A_n(tau) = theta * integral of B_n over [0, tau]."""
    tau = np.asarray(tau, dtype=float)
    _, one_minus_e = _decay(modes, tau)
    log_term = np.log1p(-(modes.mu_minus / modes.delta_n) * one_minus_e)
    return theta * (modes.mu_minus * tau + log_term)


def riccati_A_B_derivatives(modes: Modes, tau, theta: float) -> Tuple[np.ndarray, np.ndarray]:
    """(dA/dtau, dB/dtau) along the closed-form solution.

    dB/dtau equals -B - B^2 + (beta/2L)^2; it is evaluated as
    r Delta^2 e^{-Delta tau} / (1 + r e^{-Delta tau})^2 with r = mu_-/mu_+,
    which stays accurate once B has saturated at mu_-.
    """
    e, _ = _decay(modes, tau)
    r = modes.ratio
    d_b = r * modes.delta_n ** 2 * e / (1.0 + r * e) ** 2
    return theta * riccati_B(modes, tau), d_b


@dataclass(frozen=True)
class Harmonics:
    """Parameter-free part of the modes: index and amplitude gamma_n."""
    n: np.ndarray
    gamma_n: np.ndarray

    def __len__(self) -> int:
        return len(self.n)


@lru_cache(maxsize=256)
def harmonics(n_start: int, n_stop: int) -> Harmonics:
    """Indices and gamma_n of modes ``n_start <= n < n_stop``."""
    require(0 <= n_start < n_stop, "n_stop", n_stop, "need 0 <= n_start < n_stop")
    n = np.arange(n_start, n_stop, dtype=np.int64)
    gamma = 4.0 * np.where(n % 2 == 0, 1.0, -1.0) / (math.pi * (2 * n + 1))
    n.flags.writeable = False
    gamma.flags.writeable = False
    return Harmonics(n=n, gamma_n=gamma)
