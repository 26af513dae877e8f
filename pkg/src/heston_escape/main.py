"""
Command-line front end of heston_escape.

    heston-escape eval met-wiener --x 0 --L 0.01 --sigma 0.093
    heston-escape figure met_vs_v --out met_vs_v.csv
    heston-escape mc-check sp2d --x 0 --v 1.25 --tau 0.1 --paths 100000
    heston-escape sweep-L --L-min 1e-5 --L-max 1e-3 --theta 0.5

Times are in days; ``--tau`` is the scaled time alpha t, ``--t`` the time in days.
"""
import argparse
import logging
import math
import sys
from typing import Any, Dict, List, Optional

import pandas as pd
from dotenv import load_dotenv

from .averaged import MetReturnSeries, SurvivalReturnSeries, met_return, met_return_large_span_check, \
    met_return_span_sweep, stationary_density, survival_return
from .baseline import WienerParams, WienerSurvivalSeries, met_wiener
from .common.base_series import SeriesControl, SeriesResult
from .common.errors import ConvergenceError, ParameterDomainError, require
from .escape2d import EscapeDensitySeries, Met2DSeries, Survival2DSeries, met_2d, survival_2d
from .figures import DEFAULT_ALPHA, DEFAULT_M, FIGURE_IDS, build_figure, default_spec
from .model import ModelParams, ScaledPoint, make_params, params_from_theta
from .oracle import InitialVolatility, McConfig, mc_survival, met_from_sample, simulate_exit_times
from .utils.data_storage import DataStorage
from .utils.logger import setup_logger

DEFAULT_THETA = 1.25
DEFAULT_L = 0.01
DEFAULT_MC_PATHS = 10000

EVAL_QUANTITIES = ["sp2d", "met2d", "f2d", "sp-return", "met-return", "sp-wiener", "met-wiener", "p-stat"]
MC_QUANTITIES = ["sp2d", "met2d", "sp-return", "met-return"]

EXIT_MC_FAIL = 1
EXIT_DOMAIN = 2
EXIT_CONVERGENCE = 3
EXIT_IO = 4

# (name, converter) for every key a config file may set
CONFIG_FIELDS = {
    "alpha": float, "m": float, "theta": float, "k": float, "L": float,
    "modes": int, "rel_tol": float, "seed": int, "paths": int, "dt": float,
}


def _global_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--alpha", type=float, help=f"mean-reversion rate, 1/day (default {DEFAULT_ALPHA})")
    common.add_argument("--m", type=float, help=f"volatility normal level, 1/sqrt(day) (default {DEFAULT_M})")
    shape = common.add_mutually_exclusive_group()
    shape.add_argument("--theta", type=float, help=f"dimensionless normal level (default {DEFAULT_THETA})")
    shape.add_argument("--k", type=float, help="vol-of-vol; k and theta are mutually exclusive")
    common.add_argument("--L", type=float, help=f"span of the return interval (default {DEFAULT_L})")
    common.add_argument("--modes", type=int, help="maximum number of Fourier modes")
    common.add_argument("--rel-tol", dest="rel_tol", type=float, help="relative truncation tolerance")
    common.add_argument("--seed", type=int, help="Monte-Carlo seed (default 0)")
    common.add_argument("--paths", type=int, help=f"Monte-Carlo paths (default {DEFAULT_MC_PATHS})")
    common.add_argument("--dt", type=float, help="Monte-Carlo step in scaled time")
    common.add_argument("--out", help="output CSV path")
    common.add_argument("--config", help="flat key=value config file; flags take precedence")
    common.add_argument("--debug", action="store_true", help="Enable debug logging")
    common.add_argument("--log-dir", dest="log_dir", help="also write a log file to this directory")
    common.add_argument("--progress", action="store_true", help="show progress bars")
    return common


def _point_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--x", type=float, default=0.0, help="initial return (default 0)")
    parser.add_argument("--v", type=float, help="initial scaled volatility")
    when = parser.add_mutually_exclusive_group()
    when.add_argument("--tau", type=float, help="scaled time alpha t")
    when.add_argument("--t", type=float, help="time in days")


def build_parser() -> argparse.ArgumentParser:
    common = _global_options()
    parser = argparse.ArgumentParser(prog="heston-escape", description="Heston escape problem solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", parents=[common], help="evaluate one quantity at a point")
    p_eval.add_argument("quantity", choices=EVAL_QUANTITIES)
    _point_options(p_eval)
    p_eval.add_argument("--sigma", type=float, help="Wiener volatility (default m)")
    p_eval.set_defaults(handler=cmd_eval)

    p_fig = sub.add_parser("figure", parents=[common], help="write the CSV dataset of a figure")
    p_fig.add_argument("figure_id", choices=FIGURE_IDS)
    p_fig.add_argument("--thetas", help="comma-separated theta list (default: the figure's own)")
    p_fig.set_defaults(handler=cmd_figure)

    p_mc = sub.add_parser("mc-check", parents=[common], help="compare a closed form with Monte-Carlo")
    p_mc.add_argument("quantity", choices=MC_QUANTITIES)
    _point_options(p_mc)
    p_mc.add_argument("--horizon", type=float, help="simulation horizon in scaled time")
    p_mc.add_argument("--antithetic", action="store_true", help="antithetic noise pairs")
    p_mc.add_argument("--k-scale-closed-form", dest="k_scale", type=float, default=1.0,
                      help="evaluate the closed form with k scaled by this factor (negative control)")
    p_mc.add_argument("--dump", help="write raw exit times to this CSV")
    p_mc.set_defaults(handler=cmd_mc_check)

    p_sweep = sub.add_parser("sweep-L", parents=[common], help="fit the span scaling of the mean time")
    p_sweep.add_argument("--x-frac", dest="x_frac", type=float, default=0.0, help="x / L (default 0)")
    p_sweep.add_argument("--L-min", dest="L_min", type=float, default=1e-5)
    p_sweep.add_argument("--L-max", dest="L_max", type=float, default=1e-3)
    p_sweep.add_argument("--count", type=int, default=9, help="number of log-spaced spans")
    p_sweep.add_argument("--check-large", dest="check_large", action="store_true",
                         help="also check the large-span law against the outer solution")
    p_sweep.set_defaults(handler=cmd_sweep_L)
    return parser


def resolve_settings(args: argparse.Namespace, storage: DataStorage) -> Dict[str, Any]:
    """Merge built-in defaults, the config file and the flags, in that order."""
    from_file: Dict[str, Any] = {}
    if args.config:
        for key, raw in storage.load_config(args.config, CONFIG_FIELDS).items():
            try:
                from_file[key] = CONFIG_FIELDS[key](raw)
            except ValueError:
                raise ParameterDomainError(key, raw, f"not a valid {CONFIG_FIELDS[key].__name__}")
        if "theta" in from_file and "k" in from_file:
            raise ParameterDomainError("k", from_file["k"], "config may set theta or k, not both")

    settings = {"alpha": DEFAULT_ALPHA, "m": DEFAULT_M, "L": DEFAULT_L, "modes": None,
                "rel_tol": None, "seed": 0, "paths": DEFAULT_MC_PATHS, "dt": None}
    settings.update({key: value for key, value in from_file.items() if key not in ("theta", "k")})
    settings["explicit_span"] = args.L is not None or "L" in from_file
    for key in settings:
        if getattr(args, key, None) is not None:
            settings[key] = getattr(args, key)

    # an explicit flag picks the parameterisation even when the file chose the other one
    if args.theta is not None or args.k is not None:
        settings["theta"], settings["k"] = args.theta, args.k
    else:
        settings["theta"], settings["k"] = from_file.get("theta"), from_file.get("k")
    settings["explicit_shape"] = settings["theta"] is not None or settings["k"] is not None
    if not settings["explicit_shape"]:
        settings["theta"] = DEFAULT_THETA
    return settings


def params_of(settings: Dict[str, Any]) -> ModelParams:
    if settings["k"] is not None:
        return make_params(settings["alpha"], settings["m"], settings["k"])
    return params_from_theta(settings["alpha"], settings["m"], settings["theta"])


def control_of(settings: Dict[str, Any], mean_time: bool) -> Optional[SeriesControl]:
    """Series control from --modes/--rel-tol; None keeps each series' default."""
    if settings["modes"] is None and settings["rel_tol"] is None:
        return None
    base = SeriesControl.for_mean_time() if mean_time else SeriesControl()
    return SeriesControl(
        max_modes=base.max_modes if settings["modes"] is None else settings["modes"],
        rel_tol=base.rel_tol if settings["rel_tol"] is None else settings["rel_tol"],
    )


def _scaled_time(args: argparse.Namespace, params: ModelParams, required: bool) -> float:
    if args.t is not None:
        require(math.isfinite(args.t) and args.t >= 0, "t", args.t, "time must be non-negative")
        return params.alpha * args.t
    if args.tau is None:
        require(not required, "tau", None, "this quantity needs --tau or --t")
        return 0.0
    return args.tau


def _print_result(quantity: str, result: SeriesResult) -> None:
    print(f"quantity={quantity} value={result.value:.16e} modes_used={result.modes_used} "
          f"truncation_estimate={result.truncation_estimate:.3e}")


def cmd_eval(args: argparse.Namespace, settings: Dict[str, Any], storage: DataStorage,
             logger: logging.Logger) -> int:
    params = params_of(settings)
    L, q = settings["L"], args.quantity
    mean_time = q in ("met2d", "met-return")
    ctrl = control_of(settings, mean_time)
    needs_time = q in ("sp2d", "f2d", "sp-return", "sp-wiener")
    tau = _scaled_time(args, params, required=needs_time)
    logger.debug(f"eval {q}: x={args.x} v={args.v} tau={tau} L={L} theta={params.theta:.6g} k={params.k:.6g}")

    if q == "p-stat":
        require(args.v is not None, "v", None, "p-stat needs --v")
        result = SeriesResult(stationary_density(args.v, params.theta), 0, 0.0)
    elif q == "met-wiener":
        sigma = params.m if args.sigma is None else args.sigma
        result = SeriesResult(met_wiener(args.x, L, sigma), 0, 0.0)
    elif q == "sp-wiener":
        sigma = params.m if args.sigma is None else args.sigma
        point = ScaledPoint(x=args.x, L=L, tau=tau)
        result = WienerSurvivalSeries(tau / params.alpha, L, WienerParams(sigma), ctrl).evaluate(point.x)
    elif q in ("sp-return", "met-return"):
        point = ScaledPoint(x=args.x, L=L, tau=tau)
        series = SurvivalReturnSeries(point.tau, L, params, ctrl) if q == "sp-return" \
            else MetReturnSeries(L, params, ctrl)
        result = series.evaluate(point.x)
    else:
        point = ScaledPoint(x=args.x, L=L, tau=tau, v=args.v)
        v = point.require_volatility()
        if q == "sp2d":
            series = Survival2DSeries(point.tau, v, L, params, ctrl)
        elif q == "f2d":
            require(point.tau > 0, "tau", point.tau, "escape-time density needs tau > 0")
            series = EscapeDensitySeries(point.tau, v, L, params, ctrl)
        else:
            series = Met2DSeries(v, L, params, ctrl)
        result = series.evaluate(point.x)

    _print_result(q, result)
    return 0


def cmd_figure(args: argparse.Namespace, settings: Dict[str, Any], storage: DataStorage,
               logger: logging.Logger) -> int:
    if settings["explicit_shape"]:
        params_list = [params_of(settings)]
    elif args.thetas:
        try:
            thetas = [float(s) for s in args.thetas.split(",") if s.strip()]
        except ValueError:
            raise ParameterDomainError("thetas", args.thetas, "must be a comma-separated list of numbers")
        require(len(thetas) > 0, "thetas", args.thetas, "parameter list must be non-empty")
        params_list = [params_from_theta(settings["alpha"], settings["m"], th) for th in thetas]
    else:
        params_list = None

    spec = default_spec(args.figure_id, settings["alpha"], settings["m"], params_list,
                        settings["L"] if settings["explicit_span"] else None)
    logger.info(f"Building figure {spec.figure_id} ({len(spec.params)} parameter set(s))")
    frame = build_figure(spec, control_of(settings, mean_time=False) if "sp" in spec.figure_id
                         else control_of(settings, mean_time=True))
    out = args.out or f"{spec.figure_id}.csv"
    path = storage.save_grid_csv(frame, out)
    logger.info(f"Wrote {len(frame)} rows to {path}")
    print(f"figure={spec.figure_id} rows={len(frame)} path={path}")
    return 0


def cmd_mc_check(args: argparse.Namespace, settings: Dict[str, Any], storage: DataStorage,
                 logger: logging.Logger) -> int:
    params = params_of(settings)
    L, q = settings["L"], args.quantity
    require(math.isfinite(args.k_scale) and args.k_scale > 0, "k_scale", args.k_scale, "must be positive")
    closed_params = params.with_k(params.k * args.k_scale)
    ctrl = control_of(settings, mean_time=q.startswith("met"))
    two_d = q in ("sp2d", "met2d")
    survival = q.startswith("sp")
    tau = _scaled_time(args, params, required=survival)

    if two_d:
        point = ScaledPoint(x=args.x, L=L, tau=tau, v=args.v)
        v0 = InitialVolatility.fixed(point.require_volatility())
    else:
        point = ScaledPoint(x=args.x, L=L, tau=tau)
        v0 = InitialVolatility.stationary()

    horizon = args.horizon
    if horizon is None:
        horizon = McConfig.default_horizon(params, L)
        if survival:
            horizon = max(horizon, tau)
    cfg = McConfig.for_problem(params, L, n_paths=settings["paths"], seed=settings["seed"],
                               dt=settings["dt"], horizon=horizon, v0_mode=v0, antithetic=args.antithetic)
    logger.info(f"Simulating {cfg.n_paths} paths, dt={cfg.dt:.2e}, horizon={cfg.horizon:.4g}")

    if survival:
        closed = (survival_2d(point, closed_params, ctrl).value if two_d
                  else survival_return(point.x, point.tau, L, closed_params, ctrl))
        estimate = mc_survival(point.x, v0, point.tau, L, params, cfg, progress=args.progress)
    else:
        closed = (met_2d(point.x, point.v, L, closed_params, ctrl) if two_d
                  else met_return(point.x, L, closed_params, ctrl))
        sample = simulate_exit_times(point.x, L, params, cfg, progress=args.progress)
        if args.dump:
            path = storage.save_samples_csv(sample.exit_tau, sample.censored, args.dump)
            logger.info(f"Wrote raw exit times to {path}")
        estimate = met_from_sample(sample, params)

    z = estimate.z_score(closed)
    passed = abs(z) <= 3.0
    logger.info(f"MC {q}: {estimate.mean:.6e} +/- {estimate.std_error:.2e}, closed form {closed:.6e}")
    print(f"quantity={q} closed_form={closed:.16e} mc_mean={estimate.mean:.16e} "
          f"std_error={estimate.std_error:.6e} z={z:.4f} n_effective={estimate.n_effective} "
          f"censored_fraction={estimate.censored_fraction:.3e} biased_low={int(estimate.biased_low)}")
    print(f"result={'pass' if passed else 'fail'}")
    return 0 if passed else EXIT_MC_FAIL


def cmd_sweep_L(args: argparse.Namespace, settings: Dict[str, Any], storage: DataStorage,
                logger: logging.Logger) -> int:
    params = params_of(settings)
    require(args.count >= 3, "count", args.count, "need at least three spans")
    require(0 < args.L_min < args.L_max, "L_min", args.L_min, "need 0 < L_min < L_max")
    step = (math.log(args.L_max) - math.log(args.L_min)) / (args.count - 1)
    spans: List[float] = [math.exp(math.log(args.L_min) + i * step) for i in range(args.count)]
    spans[-1] = args.L_max
    ctrl = control_of(settings, mean_time=True)
    if args.check_large:
        report = met_return_large_span_check(args.x_frac, spans, params, ctrl)
    else:
        report = met_return_span_sweep(args.x_frac, spans, params, ctrl)

    print(f"theta={params.theta:.6g} regime={report.theta_regime} fitted_exponent={report.fitted_exponent:.6f} "
          f"prefactor={report.prefactor:.6e} fit_range={report.fit_range[0]:.3e}:{report.fit_range[1]:.3e}")
    if report.passed is not None:
        print(f"outer_ratio={report.outer_ratios[-1]:.6f} large_span={'pass' if report.passed else 'fail'}")
    if args.out:
        frame = pd.DataFrame({"L": report.L_values, "T": report.values, "outer_ratio": report.outer_ratios})
        path = storage.save_grid_csv(frame, args.out)
        logger.info(f"Wrote sweep to {path}")
    return 0


def _error_line(kind: str, field: str, message: str) -> None:
    message = " ".join(str(message).split())
    print(f"error={kind} field={field} message={message}", file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)

    log_level = logging.DEBUG if args.debug else logging.INFO
    logger = setup_logger("heston_escape", args.log_dir, log_level)
    logger.debug(f"Arguments: {args}")

    storage = DataStorage(base_dir=".")
    try:
        settings = resolve_settings(args, storage)
        return args.handler(args, settings, storage, logger)
    except ParameterDomainError as e:
        _error_line("domain", e.field, e)
        return EXIT_DOMAIN
    except ConvergenceError as e:
        logger.debug(f"modes_used={e.modes_used} truncation_estimate={e.truncation_estimate} "
                     f"diagnostics={e.diagnostics}")
        _error_line("convergence", "-", e)
        return EXIT_CONVERGENCE
    except OSError as e:
        _error_line("io", "-", e)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
