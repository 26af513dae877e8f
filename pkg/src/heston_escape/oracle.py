"""
Monte-Carlo simulation of the Heston pair with absorbing barriers at x = +/- L/2.

The scaled equations are integrated with full-truncation Euler steps:

    dx = (k/alpha) sqrt(v+ / 2) dW1,    dv = -(v - theta) dtau + sqrt(2 v+) dW2,

where v+ = max(v, 0) and W1, W2 are independent. The return x stays in
original units; time is the scaled tau = alpha t. A path exits when a grid
point lands outside the interval or, between two grid points inside it, with
the Brownian-bridge probability of having touched either barrier:

    exp(-2 (h - x_n)(h - x_n+1) / s^2) + exp(-2 (h + x_n)(h + x_n+1) / s^2),

with h = L/2 and s^2 the variance of the return increment over the step.
Either way the exit time is recorded at the end of the step.

Paths are split into fixed chunks; chunk ``i`` draws from its own Philox stream
keyed by (seed, i), so the samples depend only on the inputs, the seed and the
chunk size, never on how many threads ran the chunks.
"""
import logging
import math
import threading
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np
from tqdm import tqdm

from .common.errors import ParameterDomainError, require
from .modal import mode_coeffs
from .model import ModelParams
from .utils.workers import ordered_map

logger = logging.getLogger(__name__)

FIXED = "fixed"
GAMMA_STATIONARY = "gamma_stationary"
FULL_TRUNCATION_EULER = "full_truncation_euler"

DEFAULT_CHUNK = 1024
DEFAULT_DT = 1e-4
# horizon in units of the slowest decay time 1/(theta mu_-)
HORIZON_DECAYS = 14.0
# default step as a fraction of the barrier diffusion time (L/2)^2 / sigma^2
EXIT_STEP_FRACTION = 1e-2
BIASED_LOW_CENSORING = 1e-3


@dataclass(frozen=True)
class InitialVolatility:
    """How the scaled volatility of each path is initialised."""
    mode: str = GAMMA_STATIONARY
    v: Optional[float] = None

    def __post_init__(self):
        require(self.mode in (FIXED, GAMMA_STATIONARY), "v0_mode", self.mode,
                f"must be '{FIXED}' or '{GAMMA_STATIONARY}'")
        if self.mode == FIXED:
            require(self.v is not None and math.isfinite(self.v) and self.v >= 0,
                    "v0", self.v, "fixed initial volatility must be finite and >= 0")

    @classmethod
    def fixed(cls, v: float) -> "InitialVolatility":
        return cls(FIXED, float(v))

    @classmethod
    def stationary(cls) -> "InitialVolatility":
        return cls(GAMMA_STATIONARY)


@dataclass(frozen=True)
class McConfig:
    """Simulation settings; ``dt`` and ``horizon`` are in scaled time."""
    n_paths: int
    dt: float = DEFAULT_DT
    horizon: float = 10.0
    seed: int = 0
    scheme: str = FULL_TRUNCATION_EULER
    v0_mode: InitialVolatility = field(default_factory=InitialVolatility.stationary)
    antithetic: bool = False
    chunk_size: int = DEFAULT_CHUNK

    def __post_init__(self):
        require(isinstance(self.n_paths, int) and self.n_paths >= 1,
                "paths", self.n_paths, "need at least one path")
        require(math.isfinite(self.dt) and 0.0 < self.dt <= 1e-2, "dt", self.dt, "must lie in (0, 1e-2]")
        require(math.isfinite(self.horizon) and self.horizon > 0, "horizon", self.horizon, "must be positive")
        require(isinstance(self.seed, int) and 0 <= self.seed < 2 ** 64,
                "seed", self.seed, "must be a 64-bit unsigned integer")
        require(self.scheme == FULL_TRUNCATION_EULER, "scheme", self.scheme,
                f"only '{FULL_TRUNCATION_EULER}' is available")
        require(isinstance(self.chunk_size, int) and self.chunk_size >= 2,
                "chunk_size", self.chunk_size, "must be an integer >= 2")
        if self.antithetic:
            require(self.n_paths % 2 == 0 and self.chunk_size % 2 == 0, "paths", self.n_paths,
                    "antithetic pairing needs an even path count and chunk size")

    @staticmethod
    def max_dt(params: ModelParams, L: float) -> float:
        """Largest admissible step, 1e-2 min(1, 1/Delta_0)."""
        return 1e-2 * min(1.0, 1.0 / mode_coeffs(0, float(L), params).delta_n)

    @staticmethod
    def default_horizon(params: ModelParams, L: float) -> float:
        """Horizon covering 14 decay times of the slowest mode."""
        return HORIZON_DECAYS / (params.theta * mode_coeffs(0, float(L), params).mu_minus)

    @staticmethod
    def diffusion_dt(params: ModelParams, L: float, v_ref: float) -> float:
        """Step of 1e-2 times the time the return needs to diffuse from the centre to a barrier.

        The return variance rate is (k/alpha)^2 max(v_ref, theta) / 2.
        """
        rate = 0.5 * params.k_over_alpha ** 2 * max(float(v_ref), params.theta)
        return EXIT_STEP_FRACTION * (0.5 * float(L)) ** 2 / rate

    @classmethod
    def for_problem(cls, params: ModelParams, L: float, n_paths: int = 10000, seed: int = 0,
                    dt: Optional[float] = None, horizon: Optional[float] = None,
                    v0_mode: Optional[InitialVolatility] = None,
                    antithetic: bool = False) -> "McConfig":
        """Config whose step and horizon suit the span ``L`` under ``params``.

        The default step is the smallest of 1e-4, the mode-0 limit
        :meth:`max_dt` and the barrier diffusion step :meth:`diffusion_dt`.
        """
        v0_mode = InitialVolatility.stationary() if v0_mode is None else v0_mode
        if dt is None:
            v_ref = v0_mode.v if v0_mode.mode == FIXED else params.theta
            dt = min(DEFAULT_DT, cls.max_dt(params, L), cls.diffusion_dt(params, L, v_ref))
        cfg = cls(
            n_paths=n_paths,
            dt=dt,
            horizon=cls.default_horizon(params, L) if horizon is None else horizon,
            seed=seed,
            v0_mode=v0_mode,
            antithetic=antithetic,
        )
        cfg.validate_for(params, L)
        return cfg

    def validate_for(self, params: ModelParams, L: float) -> None:
        limit = self.max_dt(params, L)
        if self.dt > limit * (1.0 + 1e-12):
            raise ParameterDomainError("dt", self.dt, f"must not exceed 1e-2 min(1, 1/Delta_0) = {limit:.3e}")

    @property
    def n_steps(self) -> int:
        return max(1, int(math.ceil(self.horizon / self.dt - 1e-9)))


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_effective: int
    censored_fraction: float
    biased_low: bool = False

    def z_score(self, reference: float) -> float:
        """(mean - reference) / std_error."""
        diff = self.mean - reference
        if self.std_error > 0:
            return diff / self.std_error
        return 0.0 if diff == 0 else math.copysign(math.inf, diff)


@dataclass(frozen=True)
class ExitSample:
    """Per-path exit times in scaled units; censored paths carry the horizon."""
    exit_tau: np.ndarray
    censored: np.ndarray
    v_end: np.ndarray
    horizon: float
    antithetic: bool = False
    chunk_size: int = DEFAULT_CHUNK

    @property
    def n_paths(self) -> int:
        return len(self.exit_tau)

    @property
    def censored_fraction(self) -> float:
        return float(np.mean(self.censored))

    def pair_means(self, values: np.ndarray) -> np.ndarray:
        """Average antithetic partners; partners sit in the two halves of each chunk."""
        means = []
        for start in range(0, len(values), self.chunk_size):
            chunk = values[start:start + self.chunk_size]
            half = len(chunk) // 2
            means.append(0.5 * (chunk[:half] + chunk[half:]))
        return np.concatenate(means)


def sample_gamma_stationary(theta: float, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """Draw ``size`` samples of the stationary Gamma(theta, 1) law.

    Marsaglia-Tsang squeeze/rejection for shape >= 1; for theta < 1 a
    Gamma(theta + 1) draw is scaled by U^(1/theta) in log space.
    """
    require(math.isfinite(theta) and theta > 0, "theta", theta, "must be positive")
    require(isinstance(size, (int, np.integer)) and size >= 0, "size", size, "must be >= 0")
    if theta >= 1.0:
        return _marsaglia_tsang(theta, int(size), rng)
    boosted = _marsaglia_tsang(theta + 1.0, int(size), rng)
    u = 1.0 - rng.random(int(size))
    return np.exp(np.log(boosted) + np.log(u) / theta)


def _marsaglia_tsang(shape: float, size: int, rng: np.random.Generator) -> np.ndarray:
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.empty(size)
    pending = np.arange(size)
    while pending.size:
        x = rng.standard_normal(pending.size)
        u = 1.0 - rng.random(pending.size)
        v = (1.0 + c * x) ** 3
        ok = v > 0
        log_v = np.log(np.where(ok, v, 1.0))
        accept = ok & ((u < 1.0 - 0.0331 * x ** 4)
                       | (np.log(u) < 0.5 * x * x + d * (1.0 - v + log_v)))
        out[pending[accept]] = d * v[accept]
        pending = pending[~accept]
    return out


def _chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(chunk_index,))))


def _initial_variance(mode: InitialVolatility, theta: float, size: int,
                      rng: np.random.Generator) -> np.ndarray:
    if mode.mode == FIXED:
        return np.full(size, mode.v)
    return sample_gamma_stationary(theta, rng, size)


def _bridge_crossing(x_start: np.ndarray, x_end: np.ndarray, variance: np.ndarray,
                     half: float, out: np.ndarray) -> np.ndarray:
    """Probability that a Brownian bridge from x_start to x_end touched +/- half.

    Zero for paths already ``out`` and for steps with no diffusion.
    """
    live = ~out & (variance > 0.0)
    safe = np.where(live, variance, 1.0)
    with np.errstate(over="ignore", under="ignore"):
        upper = np.exp(-2.0 * (half - x_start) * (half - x_end) / safe)
        lower = np.exp(-2.0 * (half + x_start) * (half + x_end) / safe)
    return np.where(live, upper + lower, 0.0)


def _simulate_chunk(chunk_index: int, size: int, x0: float, L: float,
                    params: ModelParams, cfg: McConfig) -> ExitSample:
    rng = _chunk_rng(cfg.seed, chunk_index)
    dt, theta, n_steps = cfg.dt, params.theta, cfg.n_steps
    v = _initial_variance(cfg.v0_mode, theta, size, rng)
    x = np.full(size, float(x0))
    exit_tau = np.full(size, n_steps * dt)
    censored = np.ones(size, dtype=bool)
    half = 0.5 * L

    if abs(x0) >= half:
        return ExitSample(np.zeros(size), np.zeros(size, dtype=bool), np.maximum(v, 0.0),
                          cfg.horizon, cfg.antithetic, cfg.chunk_size)

    alive = np.arange(size)
    step_x = params.k_over_alpha * math.sqrt(0.5 * dt)
    step_v = math.sqrt(2.0 * dt)
    for step in range(n_steps):
        if alive.size == 0:
            break
        if cfg.antithetic:
            z = rng.standard_normal((2, size // 2))
            z = np.concatenate([z, -z], axis=1)[:, alive]
        else:
            z = rng.standard_normal((2, alive.size))
        v_alive = v[alive]
        v_pos = np.maximum(v_alive, 0.0)
        root = np.sqrt(v_pos)
        x_start = x[alive]
        x_alive = x_start + step_x * root * z[0]
        v[alive] = v_alive + (theta - v_pos) * dt + step_v * root * z[1]
        x[alive] = x_alive
        out = np.abs(x_alive) >= half
        out |= rng.random(alive.size) < _bridge_crossing(x_start, x_alive, step_x ** 2 * v_pos, half, out)
        if out.any():
            gone = alive[out]
            exit_tau[gone] = (step + 1) * dt
            censored[gone] = False
            alive = alive[~out]

    logger.debug(f"chunk {chunk_index}: {size - alive.size}/{size} paths exited")
    return ExitSample(exit_tau, censored, np.maximum(v, 0.0), cfg.horizon,
                      cfg.antithetic, cfg.chunk_size)


def simulate_exit_times(x0: float, L: float, params: ModelParams, cfg: McConfig,
                        workers: Optional[int] = None, progress: bool = False) -> ExitSample:
    """Simulate ``cfg.n_paths`` paths from (x0, v0) until exit or the horizon.

    Args:
        x0: initial return, |x0| <= L/2
        L: span of the interval
        params: Heston parameters
        cfg: simulation settings; ``cfg.v0_mode`` sets the initial volatility
        workers: threads running the chunks (default HESTON_ESCAPE_THREADS)
        progress: show a tqdm bar over chunks
    """
    require(math.isfinite(L) and L > 0, "L", L, "span must be finite and positive")
    require(math.isfinite(x0) and abs(x0) <= 0.5 * L, "x0", x0, f"must satisfy |x0| <= L/2 = {0.5 * L}")
    cfg.validate_for(params, L)

    chunks = [(i, min(cfg.chunk_size, cfg.n_paths - start))
              for i, start in enumerate(range(0, cfg.n_paths, cfg.chunk_size))]
    logger.debug(f"{cfg.n_paths} paths in {len(chunks)} chunks, dt={cfg.dt:.2e}, {cfg.n_steps} steps max")

    bar = None
    lock = threading.Lock()
    if progress:
        bar = tqdm(total=len(chunks), desc="paths", unit="chunk")

    def run(chunk):
        sample = _simulate_chunk(chunk[0], chunk[1], x0, L, params, cfg)
        if bar is not None:
            with lock:
                bar.update(1)
        return sample

    try:
        parts: List[ExitSample] = ordered_map(run, chunks, workers)
    finally:
        if bar is not None:
            bar.close()

    return ExitSample(
        exit_tau=np.concatenate([p.exit_tau for p in parts]),
        censored=np.concatenate([p.censored for p in parts]),
        v_end=np.concatenate([p.v_end for p in parts]),
        horizon=cfg.horizon,
        antithetic=cfg.antithetic,
        chunk_size=cfg.chunk_size,
    )


def _estimate(values: np.ndarray, sample: ExitSample, censored_fraction: float,
              biased_low: bool = False) -> McEstimate:
    if sample.antithetic:
        values = sample.pair_means(values)
    n = len(values)
    std_error = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return McEstimate(float(np.mean(values)), std_error, n, censored_fraction, biased_low)


def mc_survival(x0: float, v0_mode: InitialVolatility, tau_eval: float, L: float,
                params: ModelParams, cfg: McConfig, workers: Optional[int] = None,
                progress: bool = False) -> McEstimate:
    """Fraction of paths still inside the interval at scaled time ``tau_eval``."""
    require(math.isfinite(tau_eval) and 0.0 <= tau_eval <= cfg.horizon, "tau", tau_eval,
            f"must lie in [0, horizon = {cfg.horizon}]")
    cfg = replace(cfg, v0_mode=v0_mode)
    if tau_eval == 0.0:
        return McEstimate(1.0, 0.0, cfg.n_paths, 1.0)
    # simulating past tau_eval adds nothing
    sample = simulate_exit_times(x0, L, params, replace(cfg, horizon=tau_eval), workers, progress)
    alive = (sample.censored | (sample.exit_tau > tau_eval)).astype(float)
    estimate = _estimate(alive, sample, float(np.mean(alive)))
    if not sample.antithetic:
        # binomial standard error, with half a count added so it stays positive at 0 and 1
        n = sample.n_paths
        p = (float(np.sum(alive)) + 0.5) / (n + 1.0)
        estimate = replace(estimate, std_error=math.sqrt(p * (1.0 - p) / n))
    logger.debug(f"survival at tau={tau_eval}: {estimate.mean:.5f} +/- {estimate.std_error:.5f}")
    return estimate


def met_from_sample(sample: ExitSample, params: ModelParams) -> McEstimate:
    """Mean exit time of ``sample`` in original time units."""
    censored_fraction = sample.censored_fraction
    biased_low = censored_fraction >= BIASED_LOW_CENSORING
    if biased_low:
        logger.warning(f"{censored_fraction:.2%} of paths censored at tau={sample.horizon:.3g}; "
                       f"mean exit time is biased low")
    return _estimate(sample.exit_tau / params.alpha, sample, censored_fraction, biased_low)


def mc_met(x0: float, v0_mode: InitialVolatility, L: float, params: ModelParams,
           cfg: McConfig, workers: Optional[int] = None, progress: bool = False) -> McEstimate:
    """Sample mean exit time in original time units (the units of met_2d)."""
    sample = simulate_exit_times(x0, L, params, replace(cfg, v0_mode=v0_mode), workers, progress)
    return met_from_sample(sample, params)
