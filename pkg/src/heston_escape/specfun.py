"""
Special functions used by the closed forms.

Only the real Gauss hypergeometric function on the domain c > b > 0,
-1 < z <= 1 is needed, together with log-Gamma. The hypergeometric function is
evaluated by its power series, the Pfaff transformation for z < -1/2, the
Euler transformation for z > 3/4 and, when 1 - z is too small for any series,
by adaptive quadrature of the integral representation

    F(a, b; c; z) = Gamma(c) / (Gamma(b) Gamma(c - b))
                    * int_0^1 t^(b-1) (1-t)^(c-b-1) (1 - z t)^(-a) dt.
"""
import logging
import math
from typing import Optional, Union

import numpy as np
from scipy import integrate, special

from .common.errors import ConvergenceError, ParameterDomainError, require

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

Z_SWITCH = 0.75
Z_PFAFF = -0.5
# below this distance to z = 1 the series runs out of terms
QUAD_GAP = 1e-3
MAX_TERMS = 60000
_EPS = 1e-17


def ln_gamma(x: ArrayLike) -> ArrayLike:
    """Natural logarithm of the Gamma function for x > 0."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr) & (arr > 0)):
        bad = arr[~(np.isfinite(arr) & (arr > 0))].ravel()[0]
        raise ParameterDomainError("x", float(bad), "ln_gamma is defined for finite x > 0 only")
    out = special.gammaln(arr)
    return float(out) if np.ndim(x) == 0 else out


def _check_domain(a, b, c, z) -> None:
    if not np.all(np.isfinite(a) & np.isfinite(b) & np.isfinite(c) & np.isfinite(z)):
        raise ParameterDomainError("a,b,c,z", (a, b, c, z), "arguments must be finite")
    if not np.all(b > 0):
        raise ParameterDomainError("b", b, "need b > 0")
    if not np.all(c > b):
        raise ParameterDomainError("c", c, "need c > b")
    if not np.all((z > -1.0) & (z <= 1.0)):
        raise ParameterDomainError("z", z, "need -1 < z <= 1")
    at_one = z == 1.0
    if np.any(at_one & ~(c - a - b > 0)):
        raise ParameterDomainError("c", c, "F(a,b;c;1) needs c - a - b > 0")


def _power_series(a, b, c, z, max_terms: int = MAX_TERMS) -> np.ndarray:
    """Sum of the hypergeometric power series, vectorised over broadcast inputs."""
    a, b, c, z = np.broadcast_arrays(*(np.asarray(p, dtype=float) for p in (a, b, c, z)))
    total = np.ones(z.shape)
    term = np.ones(z.shape)
    small_prev = np.zeros(z.shape, dtype=bool)
    active = np.ones(z.shape, dtype=bool)
    for k in range(max_terms):
        term = np.where(active, term * (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z, 0.0)
        total = total + term
        small = np.abs(term) <= _EPS * np.abs(total)
        active &= ~(small & small_prev)
        small_prev = small
        if not active.any():
            return total
    raise ConvergenceError(
        "hypergeometric power series did not converge",
        modes_used=max_terms,
        diagnostics={"a": a[active], "b": b[active], "c": c[active], "z": z[active]},
    )


def _at_one(a, b, c):
    return np.exp(ln_gamma(c) + ln_gamma(c - a - b) - ln_gamma(c - a) - ln_gamma(c - b))


def _by_quadrature(a: float, b: float, c: float, z: float) -> float:
    # Work with whichever of (a) and the Euler-transformed (c - a) exponent
    # on (1 - z t) is milder; both share the algebraic endpoint weight.
    euler = abs(c - a) < abs(a)
    expo = c - a if euler else a
    value, abserr = integrate.quad(
        lambda t: (1.0 - z * t) ** (-expo), 0.0, 1.0,
        weight="alg", wvar=(b - 1.0, c - b - 1.0),
        epsabs=0.0, epsrel=1e-12, limit=400,
    )
    if not math.isfinite(value) or abserr > 1e-9 * abs(value):
        raise ConvergenceError(
            "quadrature of the hypergeometric integral did not converge",
            diagnostics={"a": a, "b": b, "c": c, "z": z, "abserr": abserr, "value": value},
        )
    norm = math.exp(ln_gamma(c) - ln_gamma(b) - ln_gamma(c - b))
    result = norm * value
    if euler:
        result *= (1.0 - z) ** (c - a - b)
    return result


def gauss_2f1(a: ArrayLike, b: ArrayLike, c: ArrayLike, z: ArrayLike) -> ArrayLike:
    """Gauss hypergeometric function F(a, b; c; z) for c > b > 0, -1 < z <= 1.

    Accepts scalars or broadcastable arrays; returns a float for scalar input.
    """
    scalar = all(np.ndim(p) == 0 for p in (a, b, c, z))
    a, b, c, z = np.broadcast_arrays(*(np.asarray(p, dtype=float) for p in (a, b, c, z)))
    _check_domain(a, b, c, z)
    out = np.empty(z.shape)

    at_one = z == 1.0
    pfaff = z < Z_PFAFF
    direct = (z >= Z_PFAFF) & (z <= Z_SWITCH)
    euler = (z > Z_SWITCH) & (1.0 - z >= QUAD_GAP) & ~at_one
    quad = (1.0 - z < QUAD_GAP) & ~at_one

    if at_one.any():
        out[at_one] = _at_one(a[at_one], b[at_one], c[at_one])
    if direct.any():
        out[direct] = _power_series(a[direct], b[direct], c[direct], z[direct])
    if pfaff.any():
        zz, aa, bb, cc = z[pfaff], a[pfaff], b[pfaff], c[pfaff]
        out[pfaff] = (1.0 - zz) ** (-aa) * _power_series(aa, cc - bb, cc, zz / (zz - 1.0))
    if euler.any():
        out[euler] = _euler(a[euler], b[euler], c[euler], z[euler])
    if quad.any():
        idx = np.flatnonzero(quad.ravel())
        flat = out.reshape(-1)
        for i in idx:
            flat[i] = _by_quadrature(a.flat[i], b.flat[i], c.flat[i], z.flat[i])
    return float(out) if scalar else out


def _euler(a, b, c, z):
    return (1.0 - z) ** (c - a - b) * _power_series(c - a, c - b, c, z)


def gauss_2f1_linear_transform(a: float, b: float, c: float, z: float) -> float:
    """F(a, b; c; z) through the Euler transformation

        F(a, b; c; z) = (1 - z)^(c - a - b) F(c - a, c - b; c; z).
    """
    _check_domain(np.asarray(a), np.asarray(b), np.asarray(c), np.asarray(z))
    if z == 1.0:
        return float(_at_one(a, b, c))
    if 1.0 - z < QUAD_GAP:
        return _by_quadrature(a, b, c, z)
    return float(_euler(a, b, c, z))


def gauss_2f1_unit_c(
    a: float,
    b: np.ndarray,
    z: np.ndarray,
    one_minus_z: Optional[np.ndarray] = None,
    rel_tol: float = 1e-11,
) -> np.ndarray:
    """F(a, b; b + 1; z) for arrays of (b, z), -1 < z < 1, b > 0.

    Uses F = int_0^1 (1 - z u^(1/b))^(-a) du with u = 1 - e^{-t}, which moves the
    endpoint behaviour at u = 1 into a smooth exponential tail, and integrates
    all components at once with ``quad_vec``. Pass ``one_minus_z`` when it is
    known more accurately than ``1 - z``.
    """
    b = np.asarray(b, dtype=float)
    z = np.asarray(z, dtype=float)
    gap = np.asarray(1.0 - z if one_minus_z is None else one_minus_z, dtype=float)
    b, z, gap = np.broadcast_arrays(b, z, gap)
    require(bool(np.all(b > 0)), "b", b, "need b > 0")
    require(bool(np.all((z > -1.0) & (gap > 0))), "z", z, "need -1 < z < 1")

    def integrand(t: float) -> np.ndarray:
        u = -math.expm1(-t)
        log_u = math.log(u) if u > 0 else -math.inf
        one_minus_xi = -np.expm1(log_u / b)
        base = gap + z * one_minus_xi
        return base ** (-a) * math.exp(-t)

    peak = np.log(np.maximum(1.0, 1.0 / (b * gap)))
    t_max = float(np.max(peak)) + math.log(1.0 / rel_tol) + 10.0
    result, err, info = integrate.quad_vec(
        integrand, 0.0, t_max, epsabs=0.0, epsrel=rel_tol, norm="max", full_output=True,
    )
    if info.status == 1:
        raise ConvergenceError(
            "vectorised hypergeometric quadrature did not converge",
            diagnostics={"error": err, "neval": info.neval, "t_max": t_max},
        )
    if info.status == 2:
        logger.debug(f"quad_vec hit rounding limits (error estimate {err:.3e})")
    return np.asarray(result)
