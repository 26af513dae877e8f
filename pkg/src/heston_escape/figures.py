"""
Figure datasets: every figure is a grid of the exact closed forms written as a
wide table, axis columns first and one value column per parameter set.

Columns are computed independently (one series per column and grid line) and
collected in a fixed order, so the table is identical whatever the number of
worker threads.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .averaged import MetReturnSeries, SurvivalReturnLongTimeSeries, SurvivalReturnSeries, \
    SurvivalReturnShortTimeSeries, met_outer
from .baseline import WienerParams, WienerSurvivalSeries, met_wiener
from .common.base_series import CosineSeries, SeriesControl
from .common.errors import ParameterDomainError, require
from .escape2d import Met2DSeries, Survival2DSeries
from .model import ModelParams, params_from_theta
from .utils.workers import ordered_map

logger = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.045
DEFAULT_M = 0.093
DEFAULT_THETAS = (0.5, 1.0, 1.25)


@dataclass(frozen=True)
class Axis:
    name: str
    start: float
    stop: float
    count: int
    log: bool = False

    def __post_init__(self):
        require(isinstance(self.count, int) and self.count >= 2, self.name, self.count,
                "grid needs at least two points per axis")
        require(math.isfinite(self.start) and math.isfinite(self.stop) and self.start < self.stop,
                self.name, (self.start, self.stop), "axis range must be finite and increasing")
        if self.log:
            require(self.start > 0, self.name, self.start, "log axis must start above zero")

    def values(self) -> np.ndarray:
        if self.log:
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class FigureSpec:
    """What to tabulate: figure id, grid axes, parameter sets and per-figure options."""
    figure_id: str
    axes: Tuple[Axis, ...]
    params: Tuple[ModelParams, ...]
    extras: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        require(self.figure_id in FIGURES, "figure_id", self.figure_id,
                f"must be one of {', '.join(FIGURE_IDS)}")
        require(len(self.params) >= 1, "params", self.params, "parameter list must be non-empty")
        names = [axis.name for axis in self.axes]
        for required in _AXES[self.figure_id]:
            require(required in names, "axes", names, f"{self.figure_id} needs a '{required}' axis")

    def axis(self, name: str) -> np.ndarray:
        for axis in self.axes:
            if axis.name == name:
                return axis.values()
        raise ParameterDomainError("axes", name, "axis not present")

    def extra(self, name: str) -> Any:
        return self.extras.get(name, _EXTRAS[self.figure_id].get(name))


def _label(params: ModelParams, **context) -> str:
    parts = [f"{key}={value:g}" for key, value in context.items()]
    parts.append(f"theta={params.theta:g}")
    return ",".join(parts)


def _values(series: CosineSeries, xs: Sequence[float]) -> np.ndarray:
    return np.array([r.value for r in series.evaluate_many(xs)])


def _columns(tasks: List[Tuple[str, Callable[[], np.ndarray]]], workers: Optional[int]) -> Dict[str, np.ndarray]:
    values = ordered_map(lambda task: task[1](), tasks, workers)
    return {name: value for (name, _), value in zip(tasks, values)}


def _surface(spec: FigureSpec, inner: str, outer: str,
             column: Callable[[ModelParams, float, np.ndarray], np.ndarray],
             workers: Optional[int]) -> pd.DataFrame:
    inner_values, outer_values = spec.axis(inner), spec.axis(outer)
    tasks = [((_label(p), o), (lambda p=p, o=o: column(p, o, inner_values)))
             for p in spec.params for o in outer_values]
    results = ordered_map(lambda task: task[1](), tasks, workers)
    frame = pd.DataFrame({
        inner: np.tile(inner_values, len(outer_values)),
        outer: np.repeat(outer_values, len(inner_values)),
    })
    per_label: Dict[str, List[np.ndarray]] = {}
    for ((label, _), _), values in zip(tasks, results):
        per_label.setdefault(label, []).append(values)
    for label, blocks in per_label.items():
        frame[label] = np.concatenate(blocks)
    return frame


def _sp_surface(spec, ctrl, workers):
    L = spec.extra("L")
    tau = spec.extra("tau")
    return _surface(spec, "x", "v", lambda p, v, xs: _values(Survival2DSeries(tau, v, L, p, ctrl), xs), workers)


def _met_surface(spec, ctrl, workers):
    L = spec.extra("L")
    return _surface(spec, "x", "v", lambda p, v, xs: _values(Met2DSeries(v, L, p, ctrl), xs), workers)


def _sp_return_surface(spec, ctrl, workers):
    L = spec.extra("L")
    return _surface(spec, "x", "tau",
                    lambda p, tau, xs: _values(SurvivalReturnSeries(tau, L, p, ctrl), xs), workers)


def _sp_vs_v(spec, ctrl, workers):
    v = spec.axis("v")
    tasks = []
    for tau, L in spec.extra("panels"):
        for p in spec.params:
            tasks.append((_label(p, tau=tau, L=L),
                          lambda p=p, tau=tau, L=L: np.array(
                              [Survival2DSeries(tau, vi, L, p, ctrl).evaluate(0.0).value for vi in v])))
    return pd.DataFrame({"v": v, **_columns(tasks, workers)})


def _met_vs_x(spec, ctrl, workers):
    L = spec.extra("L")
    x = spec.axis("x_over_L") * L
    tasks = [(_label(p, v=v), lambda p=p, v=v: _values(Met2DSeries(v, L, p, ctrl), x))
             for v in spec.extra("v_values") for p in spec.params]
    return pd.DataFrame({"x_over_L": spec.axis("x_over_L"), "x": x, **_columns(tasks, workers)})


def _met_vs_v(spec, ctrl, workers):
    L = spec.extra("L")
    v = spec.axis("v")
    tasks = [(_label(p), lambda p=p: np.array([Met2DSeries(vi, L, p, ctrl).evaluate(0.0).value for vi in v]))
             for p in spec.params]
    return pd.DataFrame({"v": v, **_columns(tasks, workers)})


def _sp_return_vs_tau(spec, ctrl, workers):
    L = spec.extra("L")
    tau = spec.axis("tau")
    tasks = []
    for p in spec.params:
        tasks.append((_label(p), lambda p=p: np.array(
            [SurvivalReturnSeries(t, L, p, ctrl).evaluate(0.0).value for t in tau])))
    for theta in spec.extra("asymptote_thetas"):
        p = _matching(spec.params, theta)
        # the long-time series converges too slowly at tau = 0
        tasks.append((f"long:theta={theta:g}", lambda p=p: np.array(
            [SurvivalReturnLongTimeSeries(t, L, p, ctrl).evaluate(0.0).value if t > 0 else math.nan
             for t in tau])))
        tasks.append((f"short:theta={theta:g}", lambda p=p: np.array(
            [SurvivalReturnShortTimeSeries(t, L, p, ctrl).evaluate(0.0).value for t in tau])))
    return pd.DataFrame({"tau": tau, **_columns(tasks, workers)})


def _met_return_vs_x(spec, ctrl, workers):
    frac = spec.axis("x_over_L")
    tasks = []
    for L in spec.extra("L_values"):
        x = frac * L
        for p in spec.params:
            tasks.append((_label(p, L=L), lambda p=p, L=L, x=x: _values(MetReturnSeries(L, p, ctrl), x)))
        sigma = spec.params[0].m
        tasks.append((f"L={L:g},wiener", lambda L=L, x=x: np.array([met_wiener(xi, L, sigma) for xi in x])))
    return pd.DataFrame({"x_over_L": frac, **_columns(tasks, workers)})


def _met_vs_L(spec, ctrl, workers):
    L = spec.axis("L")
    tasks = [(_label(p), lambda p=p: np.array([MetReturnSeries(Li, p, ctrl).evaluate(0.0).value for Li in L]))
             for p in spec.params]
    columns = _columns(tasks, workers)
    columns["outer"] = np.array([met_outer(0.0, Li, spec.params[0].m ** 2) for Li in L])
    return pd.DataFrame({"L": L, **columns})


def _sp_vs_x_wiener(spec, ctrl, workers):
    L = spec.extra("L")
    tau = spec.extra("tau")
    frac = spec.axis("x_over_L")
    x = frac * L
    tasks = [(_label(p), lambda p=p: _values(SurvivalReturnSeries(tau, L, p, ctrl), x)) for p in spec.params]
    p0 = spec.params[0]
    tasks.append(("wiener", lambda: _values(WienerSurvivalSeries(tau / p0.alpha, L, WienerParams(p0.m), ctrl), x)))
    return pd.DataFrame({"x_over_L": frac, **_columns(tasks, workers)})


def _sp_vs_tau_wiener(spec, ctrl, workers):
    L = spec.extra("L")
    tau = spec.axis("tau")
    p0 = spec.params[0]
    tasks = [(_label(p), lambda p=p: np.array(
        [SurvivalReturnSeries(t, L, p, ctrl).evaluate(0.0).value for t in tau])) for p in spec.params]
    tasks.append(("wiener", lambda: np.array(
        [WienerSurvivalSeries(t / p0.alpha, L, WienerParams(p0.m), ctrl).evaluate(0.0).value for t in tau])))
    return pd.DataFrame({"tau": tau, "t": tau / p0.alpha, **_columns(tasks, workers)})


def _matching(params: Sequence[ModelParams], theta: float) -> ModelParams:
    for p in params:
        if abs(p.theta - theta) <= 1e-9 * theta:
            return p
    raise ParameterDomainError("asymptote_thetas", theta, "must be one of the figure's theta values")


FIGURES: Dict[str, Callable[..., pd.DataFrame]] = {
    "sp_surface": _sp_surface,
    "sp_vs_v": _sp_vs_v,
    "met_surface": _met_surface,
    "met_vs_x": _met_vs_x,
    "met_vs_v": _met_vs_v,
    "sp_return_surface": _sp_return_surface,
    "sp_return_vs_tau": _sp_return_vs_tau,
    "met_return_vs_x": _met_return_vs_x,
    "met_vs_L_small_theta": _met_vs_L,
    "met_vs_L_large_theta": _met_vs_L,
    "sp_vs_x_wiener": _sp_vs_x_wiener,
    "sp_vs_tau_wiener": _sp_vs_tau_wiener,
}
FIGURE_IDS = tuple(FIGURES)

_AXES = {
    "sp_surface": ("x", "v"),
    "sp_vs_v": ("v",),
    "met_surface": ("x", "v"),
    "met_vs_x": ("x_over_L",),
    "met_vs_v": ("v",),
    "sp_return_surface": ("x", "tau"),
    "sp_return_vs_tau": ("tau",),
    "met_return_vs_x": ("x_over_L",),
    "met_vs_L_small_theta": ("L",),
    "met_vs_L_large_theta": ("L",),
    "sp_vs_x_wiener": ("x_over_L",),
    "sp_vs_tau_wiener": ("tau",),
}

_EXTRAS: Dict[str, Dict[str, Any]] = {
    "sp_surface": {"L": 0.01, "tau": 0.1},
    "sp_vs_v": {"panels": ((0.1, 0.01), (100.0, 0.1))},
    "met_surface": {"L": 0.01},
    "met_vs_x": {"L": 0.01, "v_values": (1300.0, 0.001)},
    "met_vs_v": {"L": 0.01},
    "sp_return_surface": {"L": 0.01},
    "sp_return_vs_tau": {"L": 0.01, "asymptote_thetas": (0.5,)},
    "met_return_vs_x": {"L_values": (0.1, 0.01)},
    "met_vs_L_small_theta": {},
    "met_vs_L_large_theta": {},
    # t = 5 days
    "sp_vs_x_wiener": {"L": 0.05, "tau": 5 * DEFAULT_ALPHA},
    "sp_vs_tau_wiener": {"L": 0.01},
}

_DEFAULT_THETAS = {
    "sp_surface": (1.25,),
    "met_surface": (1.25,),
    "sp_return_surface": (1.25,),
    "sp_vs_tau_wiener": (1.25,),
    "met_vs_L_small_theta": (0.25, 0.5, 0.75),
    "met_vs_L_large_theta": (1.0, 1.25, 2.0),
}


def default_axes(figure_id: str, L: Optional[float] = None) -> Tuple[Axis, ...]:
    half = 0.5 * (L if L is not None else _EXTRAS[figure_id].get("L", 0.01))
    if figure_id == "sp_surface":
        return Axis("x", -half, half, 21), Axis("v", 0.0, 2.0, 11)
    if figure_id == "met_surface":
        return Axis("x", -half, half, 21), Axis("v", 0.0, 5.0, 11)
    if figure_id == "sp_return_surface":
        return Axis("x", -half, half, 21), Axis("tau", 0.0, 0.05, 21)
    if figure_id == "sp_vs_v":
        return (Axis("v", 0.0, 10.0, 41),)
    if figure_id in ("met_vs_x", "met_return_vs_x", "sp_vs_x_wiener"):
        return (Axis("x_over_L", -0.5, 0.5, 41),)
    if figure_id == "met_vs_v":
        return (Axis("v", 1e-3, 1e3, 25, log=True),)
    if figure_id in ("sp_return_vs_tau", "sp_vs_tau_wiener"):
        return (Axis("tau", 0.0, 0.1, 41),)
    if figure_id in ("met_vs_L_small_theta", "met_vs_L_large_theta"):
        return (Axis("L", 1e-5, 1e2, 15, log=True),)
    raise ParameterDomainError("figure_id", figure_id, f"must be one of {', '.join(FIGURE_IDS)}")


def default_spec(figure_id: str, alpha: float = DEFAULT_ALPHA, m: float = DEFAULT_M,
                 params: Optional[Sequence[ModelParams]] = None, L: Optional[float] = None) -> FigureSpec:
    """Spec with the default grid.

    ``params`` defaults to the figure's theta list at (alpha, m); ``L`` replaces
    the span of single-span figures and is ignored by the others.
    """
    require(figure_id in FIGURES, "figure_id", figure_id, f"must be one of {', '.join(FIGURE_IDS)}")
    if params is None:
        thetas = _DEFAULT_THETAS.get(figure_id, DEFAULT_THETAS)
        params = [params_from_theta(alpha, m, theta) for theta in thetas]
    extras: Dict[str, Any] = {}
    if L is not None:
        if "L" in _EXTRAS[figure_id]:
            extras["L"] = L
        else:
            logger.debug(f"{figure_id} sets its own spans; L={L} ignored")
    if figure_id == "sp_vs_x_wiener":
        extras["tau"] = 5.0 * params[0].alpha
    if figure_id == "sp_return_vs_tau":
        # asymptotes drawn on the lowest-theta curve
        extras["asymptote_thetas"] = (min(p.theta for p in params),)
    return FigureSpec(figure_id, default_axes(figure_id, extras.get("L")), tuple(params), extras)


def build_figure(spec: FigureSpec, ctrl: Optional[SeriesControl] = None,
                 workers: Optional[int] = None) -> pd.DataFrame:
    """Tabulate ``spec``; rows follow the axes, columns follow ``spec.params``."""
    logger.debug(f"building {spec.figure_id} for {len(spec.params)} parameter set(s)")
    return FIGURES[spec.figure_id](spec, ctrl, workers)
