"""
Base class for the odd-harmonic cosine series that every escape quantity takes.

Each quantity is written as

    Q(x) = sum_n c_n cos((2n+1) pi x / L),    c_n of sign (-1)^n,

so subclasses only supply the amplitudes c_n for a block of modes. The base
class sums blocks of growing size, shares the amplitudes across any number of
evaluation points, and stops when

* the last ``consecutive_small`` amplitudes are below ``rel_tol * |c_0|``, and
* a bound on the omitted tail is below ``rel_tol * |c_0|``.

The tail bound is the smaller of a geometric bound (ratio of the last two
amplitudes) and the alternating-series bound |c_N| / |cos(pi x / L)|, valid
because sum_n (-1)^n cos((2n+1)y) has partial sums bounded by 1/|cos y|.
"""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

from ..modal import ModeTable, mode_table
from ..model import ModelParams
from .errors import ConvergenceError, ParameterDomainError, require


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy for the Fourier sums."""
    max_modes: int = 512
    rel_tol: float = 1e-10
    consecutive_small: int = 3

    def __post_init__(self):
        require(isinstance(self.max_modes, int) and self.max_modes >= 1,
                "max_modes", self.max_modes, "must be an integer >= 1")
        require(0.0 < self.rel_tol < 1.0, "rel_tol", self.rel_tol, "must lie in (0, 1)")
        require(isinstance(self.consecutive_small, int) and self.consecutive_small >= 1,
                "consecutive_small", self.consecutive_small, "must be an integer >= 1")

    @classmethod
    def for_mean_time(cls) -> "SeriesControl":
        """Defaults for the mean-time series, whose amplitudes decay like n^-2."""
        return cls(max_modes=32768, rel_tol=1e-8)

    def with_max_modes(self, max_modes: int) -> "SeriesControl":
        return replace(self, max_modes=max_modes)


@dataclass(frozen=True)
class SeriesResult:
    value: float
    modes_used: int
    truncation_estimate: float


class CosineSeries(ABC):
    """Evaluator of one odd-harmonic cosine series on the span ``L``."""

    first_block = 32
    max_block = 4096
    # survival probabilities are clamped to [0, 1] after summation
    clamp_unit = False

    def __init__(self, L: float, params: Optional[ModelParams], ctrl: Optional[SeriesControl] = None):
        """
        Args:
            L: span of the interval [-L/2, L/2]
            params: Heston parameter set (None for series that only need the harmonics)
            ctrl: truncation policy; None selects the class default
        """
        require(math.isfinite(L) and L > 0, "L", L, "span must be finite and positive")
        self.L = float(L)
        self.params = params
        self.ctrl = ctrl if ctrl is not None else self.default_control()
        self.logger = logging.getLogger(f"heston_escape.{self.__class__.__name__}")

    @classmethod
    def default_control(cls) -> SeriesControl:
        return SeriesControl()

    def block(self, n_start: int, n_stop: int) -> ModeTable:
        """Mode constants for modes n_start .. n_stop - 1."""
        return mode_table(n_start, n_stop, self.L, self.params)

    @abstractmethod
    def amplitudes(self, modes: ModeTable) -> np.ndarray:
        """Signed amplitudes c_n for the modes of ``modes``."""

    def closed_value(self) -> Optional[float]:
        """Value at every interior point when the series is known in closed form."""
        return None

    def evaluate(self, x: float) -> SeriesResult:
        return self.evaluate_many([x])[0]

    def evaluate_many(self, xs: Sequence[float]) -> List[SeriesResult]:
        """Evaluate at every point of ``xs``; amplitudes are computed once."""
        x = np.abs(np.asarray(xs, dtype=float).ravel())
        for xi in x:
            if not (math.isfinite(xi) and xi <= 0.5 * self.L):
                raise ParameterDomainError("x", float(xi), f"must satisfy |x| <= L/2 = {0.5 * self.L}")

        results: List[Optional[SeriesResult]] = [None] * len(x)
        interior = np.flatnonzero(x < 0.5 * self.L)
        for i in np.flatnonzero(x >= 0.5 * self.L):
            results[i] = SeriesResult(0.0, 0, 0.0)

        closed = self.closed_value()
        if closed is not None:
            for i in interior:
                results[i] = SeriesResult(float(closed), 0, 0.0)
            return results
        if interior.size == 0:
            return results

        values, modes_used, estimates = self._sum(x[interior])
        for j, i in enumerate(interior):
            results[i] = self._finish(values[j], modes_used[j], estimates[j])
        return results

    def _finish(self, value: float, modes_used: int, estimate: float) -> SeriesResult:
        if self.clamp_unit:
            clamped = min(max(value, 0.0), 1.0)
            excess = abs(clamped - value)
            if excess > 10.0 * self.ctrl.rel_tol:
                self.logger.warning(f"clamped survival value {value:.3e} to [0, 1]")
            value, estimate = clamped, max(estimate, excess)
        self.logger.debug(f"{modes_used} modes, truncation estimate {estimate:.3e}")
        return SeriesResult(float(value), int(modes_used), float(estimate))

    def _sum(self, x: np.ndarray):
        ctrl = self.ctrl
        phase = math.pi * x / self.L
        cos_first = np.abs(np.cos(phase))
        totals = np.zeros(len(x))
        modes_used = np.zeros(len(x), dtype=int)
        estimates = np.full(len(x), math.inf)
        active = np.ones(len(x), dtype=bool)

        amps_seen: List[np.ndarray] = []
        ref = 0.0
        n_start, size = 0, min(self.first_block, ctrl.max_modes)
        while n_start < ctrl.max_modes and active.any():
            n_stop = min(n_start + size, ctrl.max_modes)
            table = self.block(n_start, n_stop)
            amps = np.asarray(self.amplitudes(table), dtype=float)
            if not np.all(np.isfinite(amps)):
                raise ConvergenceError(
                    f"{self.__class__.__name__}: non-finite amplitude in modes {n_start}..{n_stop - 1}",
                    modes_used=n_start,
                )
            if n_start == 0:
                ref = abs(amps[0]) or float(np.max(np.abs(amps))) or 1.0
            amps_seen.append(amps)

            idx = np.flatnonzero(active)
            odd = 2.0 * table.n + 1.0
            cosines = np.cos(np.outer(phase[idx], odd))
            # row-wise reduction keeps each point's sum independent of the batch
            totals[idx] += (cosines * amps).sum(axis=1)

            tail = np.abs(np.concatenate(amps_seen[-2:])[-(ctrl.consecutive_small + 1):])
            bound = self._tail_bound(tail, cos_first[idx])
            small = tail.size > ctrl.consecutive_small and np.all(
                tail[-ctrl.consecutive_small:] < ctrl.rel_tol * ref)
            estimates[idx] = bound / ref
            modes_used[idx] = n_stop
            if small:
                done = bound <= ctrl.rel_tol * ref
                active[idx[done]] = False

            n_start = n_stop
            size = min(2 * size, self.max_block)

        if active.any():
            worst = float(np.max(estimates[active]))
            raise ConvergenceError(
                f"{self.__class__.__name__}: tail estimate {worst:.3e} above rel_tol "
                f"{ctrl.rel_tol:.1e} after {ctrl.max_modes} modes",
                modes_used=ctrl.max_modes,
                truncation_estimate=worst,
            )
        return totals, modes_used, estimates

    @staticmethod
    def _tail_bound(tail: np.ndarray, cos_first: np.ndarray) -> np.ndarray:
        last = tail[-1]
        if last == 0.0:
            return np.zeros(len(cos_first))
        prev = tail[-2] if tail.size > 1 else math.inf
        ratio = last / prev if prev > 0 else math.inf
        geometric = last * ratio / (1.0 - ratio) if ratio < 1.0 else math.inf
        if last <= prev:
            with np.errstate(divide="ignore"):
                alternating = np.where(cos_first > 0, last / cos_first, math.inf)
        else:
            alternating = np.full(len(cos_first), math.inf)
        return np.minimum(geometric, alternating)
