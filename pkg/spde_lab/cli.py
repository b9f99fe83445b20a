"""Command-line experiment runner."""
from __future__ import annotations

import argparse
from collections.abc import Callable, Sequence
import logging
import math
import sys

from . import MonteCarloCoordinator
from .config_flow import (
    BOUND_LAPLACIAN,
    ConfigValidationError,
    RunConfig,
    build_model,
    load_run_config,
)
from .const import (
    CONF_FUNCTIONAL,
    CONF_GRID,
    CONF_MC,
    CONF_MODEL,
    CONF_OUTPUT,
    CONF_PERTURBATION,
    CONF_SCHEME,
    CONF_SWEEP,
    DEFAULT_STRONG_SAMPLES,
    DEFAULT_WEAK_SAMPLES,
    EXIT_ACCEPTANCE,
    EXIT_IO,
    EXIT_OK,
    EXIT_UNEXPECTED,
    EXIT_VALIDATION,
    SUBCOMMAND_LOWER_BOUND,
    SUBCOMMAND_ORACLE_CHECK,
    SUBCOMMAND_PERTURBATION_CHECK,
    SUBCOMMAND_SIMULATE,
    SUBCOMMAND_STRONG_RATE,
    SUBCOMMAND_WEAK_RATE,
    SUBCOMMANDS,
    VERSION,
)
from .experiments import (
    AcceptanceFailed,
    ExperimentReport,
    lower_bound_sweep,
    oracle_check,
    perturbation_sweep,
    simulate,
    strong_rate,
    weak_rate,
)
from .functionals import get_functional
from .galerkin.errors import InvalidArgument
from .report import ReportWriteError, emit_report

_LOGGER = logging.getLogger(__name__)

ACCEPTANCE_SUBCOMMANDS = (SUBCOMMAND_ORACLE_CHECK, SUBCOMMAND_PERTURBATION_CHECK)


def _coordinator(config: RunConfig) -> MonteCarloCoordinator:
    return MonteCarloCoordinator(config.threads, config[CONF_MC]["chunk_size"])


def _run_simulate(config: RunConfig) -> ExperimentReport:
    return simulate(
        build_model(config),
        config[CONF_SCHEME]["kind"],
        get_functional(config[CONF_FUNCTIONAL]["name"]),
        config[CONF_GRID]["n_list"],
        config.samples(DEFAULT_STRONG_SAMPLES),
        config.seed,
        _coordinator(config),
    )


def _run_weak_rate(config: RunConfig) -> ExperimentReport:
    return weak_rate(
        build_model(config),
        config[CONF_SCHEME]["kind"],
        get_functional(config[CONF_FUNCTIONAL]["name"]),
        config[CONF_GRID]["n_list"],
        config[CONF_GRID]["n_ref"],
        config.samples(DEFAULT_WEAK_SAMPLES),
        config.seed,
        _coordinator(config),
    )


def _run_strong_rate(config: RunConfig) -> ExperimentReport:
    return strong_rate(
        build_model(config),
        config[CONF_SCHEME]["kind"],
        config[CONF_GRID]["n_list"],
        config[CONF_GRID]["n_ref"],
        config.samples(DEFAULT_STRONG_SAMPLES),
        config.seed,
        _coordinator(config),
    )


def _run_lower_bound(config: RunConfig) -> ExperimentReport:
    model, sweep = config[CONF_MODEL], config[CONF_SWEEP]
    return lower_bound_sweep(
        model["c"],
        model["rho"],
        model["delta"],
        model["T"],
        sweep["modes"],
        [model["T"] / 2**exponent for exponent in sweep["h_exponents"]],
        sweep["scheme"],
        weak=sweep["weak"],
        sharp=sweep["sharp"],
        laplacian=sweep["bound"] == BOUND_LAPLACIAN,
    )


def _run_oracle_check(config: RunConfig) -> ExperimentReport:
    return oracle_check(
        build_model(config),
        config[CONF_SCHEME]["kind"],
        get_functional(config[CONF_FUNCTIONAL]["name"]),
        config[CONF_GRID]["n_list"],
        config.samples(DEFAULT_STRONG_SAMPLES),
        config.seed,
        _coordinator(config),
    )


def _run_perturbation_check(config: RunConfig) -> ExperimentReport:
    perturbation = config[CONF_PERTURBATION]
    return perturbation_sweep(
        build_model(config),
        config[CONF_SCHEME]["kind"],
        perturbation["n"],
        config.samples(DEFAULT_STRONG_SAMPLES),
        perturbation["distances"],
        [config.seed + k for k in range(perturbation["seeds"])],
        mode=perturbation["mode"],
        theta=perturbation["theta"],
        coordinator=_coordinator(config),
    )


RUNNERS: dict[str, Callable[[RunConfig], ExperimentReport]] = {
    SUBCOMMAND_SIMULATE: _run_simulate,
    SUBCOMMAND_WEAK_RATE: _run_weak_rate,
    SUBCOMMAND_STRONG_RATE: _run_strong_rate,
    SUBCOMMAND_LOWER_BOUND: _run_lower_bound,
    SUBCOMMAND_ORACLE_CHECK: _run_oracle_check,
    SUBCOMMAND_PERTURBATION_CHECK: _run_perturbation_check,
}


def build_parser() -> argparse.ArgumentParser:
    """Argument parser shared by every subcommand."""
    parser = argparse.ArgumentParser(
        prog="spde_lab", description="Spectral-Galerkin SPDE convergence experiments."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("overrides", nargs="*", metavar="section.key=value")
    parser.add_argument("--config", help="INI run configuration")
    parser.add_argument("--out", help="report path (default: <subcommand>.<format>)")
    parser.add_argument("--format", dest="output_format", choices=["csv", "json"])
    parser.add_argument("--seed", type=int)
    parser.add_argument("--threads", help="worker threads, an integer or 'auto'")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument(
        "--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], default=None
    )
    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    if args.log_level is not None:
        level = getattr(logging, args.log_level)
    else:
        level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _summary(subcommand: str, report: ExperimentReport) -> str:
    lines = [f"{subcommand}: {len(report.points)} points"]
    for point in report.points:
        line = f"  N={point.N:<6d} h={point.h:.6g} estimate={point.estimate:.6e}"
        if point.samples:
            line += f" se={point.std_error:.2e}"
        if point.bound is not None:
            line += f" bound={point.bound:.6e}"
        lines.append(line)
    if not math.isnan(report.fitted_order):
        lines.append(f"  fitted order {report.fitted_order:.4f} (r2 {report.fit_r2:.4f})")
    if report.passed is not None:
        lines.append(f"  {'PASS' if report.passed else 'FAIL'}")
    return "\n".join(lines)


def run(args: argparse.Namespace) -> int:
    """Execute one subcommand and return its exit code."""
    try:
        config = load_run_config(
            args.config,
            args.overrides,
            seed=args.seed,
            out=args.out,
            output_format=args.output_format,
            threads=args.threads,
        )
        report = RUNNERS[args.subcommand](config)
        report = report.with_config(config.echo(), config.seed)
        output = config[CONF_OUTPUT]
        path = output.get("path") or f"{args.subcommand}.{output['format']}"
        emit_report(report, path, output["format"])
        print(_summary(args.subcommand, report))
        if args.subcommand in ACCEPTANCE_SUBCOMMANDS and report.passed is False:
            raise AcceptanceFailed(f"Acceptance check {args.subcommand} failed")
    except (ConfigValidationError, InvalidArgument) as err:
        _LOGGER.error("Invalid configuration: %s", err)
        return EXIT_VALIDATION
    except AcceptanceFailed as err:
        _LOGGER.error("%s", err)
        return EXIT_ACCEPTANCE
    except (ReportWriteError, OSError) as err:
        _LOGGER.error("I/O failure: %s", err)
        return EXIT_IO
    except Exception:  # pylint: disable=broad-except
        _LOGGER.exception("Unexpected exception")
        return EXIT_UNEXPECTED
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point for ``python -m spde_lab``."""
    args = build_parser().parse_intermixed_args(argv)
    _configure_logging(args)
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
