"""
The main entrypoint of the squirmer simulator: time-dependent runs, refinement studies, parameter
sweeps and the golden-data regression of the exact solutions.
"""

import argparse
import logging
import os
import sys
from typing import List, Optional

from squirm.config_builder import PRESETS, SimulationConfig, SimulationConfigBuilder, Overrides
from squirm.exceptions import SquirmException
from squirm.simulation.output import load_checkpoint, write_table
from squirm.simulation.pipeline import run
from squirm.simulation.studies import (
    DEFAULT_BETAS,
    DEFAULT_DRAG_COEFFICIENTS,
    DEFAULT_LEVELS,
    DEFAULT_REYNOLDS,
    converge,
    sweep_cd,
    sweep_re,
)
from squirm.verification.golden import check_all_golden

CONVERGENCE_FILE = "convergence.csv"
DRAG_SWEEP_FILE = "sweep_cd.csv"
REYNOLDS_SWEEP_FILE = "sweep_re.csv"


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "config",
        type=str,
        help=f"Path to a YAML configuration file or one of the presets {', '.join(PRESETS)}.",
    )
    parser.add_argument(
        "--output-dir",
        type=str,
        help="Override file setting for the output directory",
    )
    parser.add_argument(
        "--element",
        type=str,
        help="Override file setting for the element family, P1P1_GLS or P2P1",
    )
    parser.add_argument(
        "--level",
        type=int,
        help="Override file setting for the refinement level of the generated domain",
    )


def _add_time_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--t-end",
        type=float,
        help="Override file setting for the final time",
    )
    parser.add_argument(
        "--dt",
        type=float,
        help="Override file setting for the time step",
    )


def _get_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Finite element simulation of tangential squirmers")
    parser.add_argument(
        "--log-verbosity",
        type=str,
        default="INFO",
        help="Logging level, DEBUG,INFO,WARNING, etc.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="March a configuration in time")
    _add_config_args(run_parser)
    _add_time_args(run_parser)
    run_parser.add_argument(
        "--resume",
        type=str,
        help="Checkpoint file to continue from",
    )

    converge_parser = commands.add_parser("converge", help="Refinement study against the exact squirmer")
    _add_config_args(converge_parser)
    converge_parser.add_argument(
        "--levels",
        type=int,
        default=DEFAULT_LEVELS,
        help="Number of refinement levels",
    )

    cd_parser = commands.add_parser("sweep-cd", help="Cilia drag coefficient sweep of a metachronal squirmer")
    _add_config_args(cd_parser)
    _add_time_args(cd_parser)
    cd_parser.add_argument(
        "--cd",
        type=float,
        nargs="+",
        default=list(DEFAULT_DRAG_COEFFICIENTS),
        help="Drag coefficients C_D",
    )

    re_parser = commands.add_parser("sweep-re", help="Finite Reynolds number sweep of a Blake squirmer")
    _add_config_args(re_parser)
    re_parser.add_argument(
        "--re",
        type=float,
        nargs="+",
        default=list(DEFAULT_REYNOLDS),
        help="Reynolds numbers rho B1 R / mu",
    )
    re_parser.add_argument(
        "--beta",
        type=float,
        nargs="+",
        default=list(DEFAULT_BETAS),
        help="Squirmer parameters beta = B2 / B1",
    )

    commands.add_parser("verify", help="Compare the exact solutions with the frozen golden data")
    return parser.parse_args(argv)


def get_config(args: argparse.Namespace) -> SimulationConfig:
    """
    Build configuration from file or preset and command line overrides
    """
    config_builder = SimulationConfigBuilder()
    overrides = Overrides(
        t_end=getattr(args, "t_end", None),
        dt=getattr(args, "dt", None),
        output_directory=args.output_dir,
        element=args.element,
        level=args.level,
    )
    if os.path.isfile(args.config) or args.config not in PRESETS:
        config_builder.from_file(args.config)
    else:
        config_builder.from_preset(args.config)
    return config_builder.from_overrides(overrides).get_config()


def execute(args: argparse.Namespace) -> None:
    """Run the selected command"""
    if args.command == "verify":
        for result in check_all_golden().values():
            logging.info("%s: %d samples within %.3e", result.name, result.n_samples, result.max_deviation)
        return

    config = get_config(args)
    directory = config.output.directory
    if args.command == "run":
        resume_from = load_checkpoint(args.resume) if args.resume else None
        result = run(config, resume_from=resume_from)
        logging.info("Finished at t = %s after %d steps", result.series.rows[-1][0], result.state.step)
    elif args.command == "converge":
        write_table(os.path.join(directory, CONVERGENCE_FILE), converge(config, args.levels))
    elif args.command == "sweep-cd":
        write_table(os.path.join(directory, DRAG_SWEEP_FILE), sweep_cd(config, args.cd))
    elif args.command == "sweep-re":
        write_table(os.path.join(directory, REYNOLDS_SWEEP_FILE), sweep_re(config, args.re, args.beta))


def run_cli(argv: Optional[List[str]] = None) -> int:
    """
    The main entrypoint of the squirm console script
    """
    args = _get_args(argv)

    loglevel = args.log_verbosity
    numeric_level = getattr(logging, loglevel.upper(), None)
    if not isinstance(numeric_level, int):
        raise ValueError(f"Invalid log level: {loglevel}")
    logging.basicConfig(level=numeric_level)

    try:
        execute(args)
    except SquirmException as ex:
        logging.error("%s\n%s", ex.message, ex.chained_traceback_str())
        return 1
    return 0


def main() -> None:
    sys.exit(run_cli())
