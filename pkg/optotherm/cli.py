# This code is part of optotherm and is licensed under the MIT license.
"""
``optotherm`` command-line interface.

Exit status is 0 on success, 1 on a runtime failure (fit did not converge,
degenerate data, a power outside the thermometer table) and 2 on invalid
input (bad flags, configuration or unreadable input files).
Failures print a one-line JSON object on stderr; stdout carries short human
summaries only. Numbers are plain SI values (``415e-6``, ``702e3``).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

try:
    from pydantic.v1 import ValidationError
except ImportError:
    from pydantic import ValidationError

from .errors import ConfigurationError, OptothermError
from .inference import (
    estimate_area,
    estimate_asymmetry,
    estimate_damping,
    fit_sidebands,
    sideband_asymmetry,
)
from .io import (
    load_spectrum_pair,
    read_fit_json,
    read_sweep_json,
    write_calibration_dat,
    write_calibration_json,
    write_estimates_dat,
    write_estimates_json,
    write_fit_json,
    write_plot_data,
    write_spectrum_csv,
    write_sweep_csv,
    write_sweep_json,
)
from .params import load_run_config
from .settings import BeamRole, RunConfig
from .settings.models import TWO_PI
from .sweep import execute_sweep, simulate_pair, thermo_model

logger = logging.getLogger(__name__)

CONFIG_ENV = "OPTOTHERM_CONFIG"

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_INVALID = 2


class _ValidationFailure(Exception):
    """Raised for input problems that should exit with status 2"""


def _fit_range(text: str) -> tuple[float, float]:
    lo, sep, hi = text.partition(':')
    try:
        if not sep:
            raise ValueError
        bounds = float(lo), float(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected LO:HI in Hz, e.g. 702e3:714e3, got {text!r}") from None
    if not bounds[0] < bounds[1]:
        raise argparse.ArgumentTypeError(f"empty fit range {text!r}")
    return bounds


def _power(text: str) -> float:
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"power must be >= 0, got {text}")
    return value


def _load_config(args) -> RunConfig:
    if args.config is None:
        config = RunConfig()
    else:
        config = load_run_config(args.config)
    updates = {}
    if getattr(args, 'seed', None) is not None:
        updates['seed'] = args.seed
    if getattr(args, 'm_avg', None) is not None:
        updates['n_avg'] = args.m_avg
    if getattr(args, 'noiseless', False):
        updates['noiseless'] = True
    if updates:
        config = config.copy(update={'noise': config.noise.copy(update=updates)})
    if getattr(args, 'range', None) is not None:
        lo, hi = args.range
        config = config.copy(update={'fit': config.fit.copy(update={
            'range_start_hz': lo, 'range_stop_hz': hi})})
    return config


def _require_config(parser: argparse.ArgumentParser, args) -> None:
    if args.config is None:
        parser.error(f"--config is required (or set {CONFIG_ENV})")


def _cmd_simulate(args) -> int:
    config = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sim = simulate_pair(config, args.pcl, seed=config.noise.seed,
                        n_bar=args.nbar_override, n_jobs=args.threads)
    write_spectrum_csv(sim['red'], out / "red.csv")
    write_spectrum_csv(sim['blue'], out / "blue.csv")
    truth = sim['predicted']
    print(f"n_bar={truth['n_bar']:.6g} omega_tilde={truth['omega_tilde_hz']:.3f} Hz "
          f"gamma_tilde={truth['gamma_tilde_hz']:.3f} Hz -> {out}")
    return EXIT_OK


def _read_input(reader, *paths):
    try:
        return reader(*paths)
    except (OSError, ValueError) as e:
        raise _ValidationFailure(f"cannot read {', '.join(map(str, paths))}: "
                                 f"{e}") from e


def _fit_pair(args, config: RunConfig):
    red, blue = _read_input(load_spectrum_pair, args.red, args.blue)
    return fit_sidebands(red, blue, settings=config.fit)


def _cmd_fit(args) -> int:
    config = _load_config(args)
    fit = _fit_pair(args, config)
    write_fit_json(fit, args.out)
    zeta, zeta_sigma = sideband_asymmetry(fit, config.system,
                                          config.beam(BeamRole.PROBE))
    print(f"omega_tilde={fit.omega_tilde:.3f}+-{fit.sigma('omega_tilde'):.3f} Hz "
          f"gamma_tilde={fit.gamma_tilde:.3f}+-{fit.sigma('gamma_tilde'):.3f} Hz "
          f"zeta={zeta:.4f}+-{zeta_sigma:.4f}")
    return EXIT_OK


def _cmd_estimate(args) -> int:
    config = _load_config(args)
    if args.fit is not None:
        fit = _read_input(read_fit_json, args.fit)
    elif args.red and args.blue:
        fit = _fit_pair(args, config)
    else:
        raise _ValidationFailure("estimate needs --fit or both --red and --blue")

    params = config.system
    beams = [b.copy(update={'power': args.pcl}) if b.role is BeamRole.COOLING
             else b for b in config.beams]
    t_pot, t_stage = thermo_model(args.pcl, config.thermometry)
    t_bath = params.alpha * t_stage + (1.0 - params.alpha) * t_pot
    estimates = [
        estimate_asymmetry(fit, params, config.beam(BeamRole.PROBE)),
        estimate_area(fit, params, 'red'),
        estimate_area(fit, params, 'blue'),
        estimate_damping(fit, params, beams, t_bath,
                         config.estimation.t_bath_sigma),
    ]
    out = Path(args.out)
    write_estimates_json(estimates, out, fit=fit,
                         omega=TWO_PI * fit.omega_tilde)
    write_estimates_dat(estimates, out.with_suffix(".dat"))
    for est in estimates:
        print(f"{est.method.value:>16}: n_bar={est.n_bar:.4g}+-{est.sigma:.2g}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = execute_sweep(config, n_jobs=args.threads)
    write_sweep_csv(result, out / "sweep.csv")
    write_sweep_json(result, out / "sweep.json")
    write_plot_data(result, out / "plots")
    n_failed = sum(1 for r in result.records if not r.ok())
    print(f"{len(result.records)} points, {n_failed} failed -> {out}")
    if result.alpha is not None:
        print(f"alpha={result.alpha.alpha:.4f}")
    return EXIT_OK if n_failed == 0 else EXIT_RUNTIME


def _cmd_calibrate(args) -> int:
    config = _load_config(args)
    if args.sweep is not None:
        result = _read_input(read_sweep_json, args.sweep)
    else:
        result = execute_sweep(config, n_jobs=args.threads)

    out = Path(args.out)
    write_calibration_json(result, out)
    write_calibration_dat(result, out.with_suffix(".dat"))
    if (alpha := result.alpha) is not None:
        print(f"alpha={alpha.alpha:.4f}+-{alpha.alpha_sigma:.4f} "
              f"over {alpha.n_points} points")
    if (cal := result.calibration) is not None:
        print(f"g0/2pi={cal.g0 / TWO_PI:.4f}+-{cal.g0_sigma / TWO_PI:.4f} Hz "
              f"probe detuning/2pi={cal.probe_detuning / TWO_PI:.1f} Hz")
    if alpha is None and cal is None:
        raise OptothermError("the sweep yielded neither an alpha fit nor a "
                             "g0/detuning calibration; see the sweep failures")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="optotherm",
        description="Sideband thermometry of an optomechanical resonator")
    parser.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="logging level on stderr (default WARNING)")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for synthesis and sweeps")
    sub = parser.add_subparsers(dest="verb", required=True)

    default_config = os.getenv(CONFIG_ENV)
    config_help = f"config file (CLI > env:{CONFIG_ENV})"

    p = sub.add_parser("simulate", help="write a synthetic red/blue pair")
    p.add_argument("--config", default=default_config, help=config_help)
    p.add_argument("--pcl", type=_power, default=415e-6,
                   help="cooling power, W")
    p.add_argument("--nbar-override", type=float, default=None,
                   help="plant this mean phonon number")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--m-avg", type=int, default=None,
                   help="number of averaged periodograms")
    p.add_argument("--noiseless", action="store_true")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=_cmd_simulate, needs_config=True)

    p = sub.add_parser("fit", help="fit a red/blue pair")
    p.add_argument("--config", default=default_config, help=config_help)
    p.add_argument("--red", required=True)
    p.add_argument("--blue", required=True)
    p.add_argument("--range", type=_fit_range, default=None,
                   help="fit window LO:HI in Hz (default 702e3:714e3)")
    p.add_argument("--out", default="fit.json")
    p.set_defaults(func=_cmd_fit, needs_config=False)

    p = sub.add_parser("estimate", help="all four phonon-number estimates")
    p.add_argument("--config", default=default_config, help=config_help)
    p.add_argument("--fit", default=None, help="fit JSON from `fit`")
    p.add_argument("--red", default=None)
    p.add_argument("--blue", default=None)
    p.add_argument("--range", type=_fit_range, default=None)
    p.add_argument("--pcl", type=_power, default=415e-6,
                   help="cooling power of the measurement, W")
    p.add_argument("--out", default="estimates.json")
    p.set_defaults(func=_cmd_estimate, needs_config=True)

    p = sub.add_parser("sweep", help="run a cooling-power sweep")
    p.add_argument("--config", default=default_config, help=config_help)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--m-avg", type=int, default=None)
    p.add_argument("--noiseless", action="store_true")
    p.add_argument("--out", default="sweep")
    p.set_defaults(func=_cmd_sweep, needs_config=True)

    p = sub.add_parser("calibrate",
                       help="fit alpha, g0 and the probe detuning")
    p.add_argument("--config", default=default_config, help=config_help)
    p.add_argument("--sweep", default=None,
                   help="sweep JSON from `sweep`; runs a sweep if omitted")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--m-avg", type=int, default=None)
    p.add_argument("--noiseless", action="store_true")
    p.add_argument("--out", default="calibration.json")
    p.set_defaults(func=_cmd_calibrate, needs_config=True)
    return parser


def _report(exc: BaseException, code: int) -> int:
    payload = {'error': type(exc).__name__, 'message': str(exc),
               'exit_code': code}
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def _is_validation_error(exc: BaseException) -> bool:
    # numerical ValueErrors (extrapolated thermometry, degenerate detuning)
    # are runtime failures
    return isinstance(exc, (ConfigurationError, ValidationError,
                            _ValidationFailure))


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.needs_config:
        _require_config(parser, args)

    logging.basicConfig(level=args.log_level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as e:
        if _is_validation_error(e):
            return _report(e, EXIT_INVALID)
        logger.debug("command failed", exc_info=True)
        return _report(e, EXIT_RUNTIME)


if __name__ == "__main__":
    sys.exit(main())
