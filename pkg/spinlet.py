#!/usr/bin/env python3
"""
spinlet
Main entry point for the spin needlet experiment CLI.
"""

import argparse
import logging
import sys
import warnings
from pathlib import Path
from typing import List, Optional

from rich.markup import escape

from src import __version__
from src.commands import run
from src.console import configure_logging, console, logger
from src.constants import Subcommand
from src.errors import ConfigError, SpinletError
from src.parser import ExperimentConfig, load_config

_FRAME_ALIASES = {"build": Subcommand.FRAME_BUILD.value, "check": Subcommand.FRAME_CHECK.value}


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=Path, help='YAML or JSON experiment config (or a previous manifest.json)')
    common.add_argument('--seed', type=int, help='root seed for every random stream')
    common.add_argument('--out', help='output directory')
    common.add_argument('--threads', type=int, help='worker threads for per-scale work')
    common.add_argument('--verbose', action='store_true', help='debug logging')
    common.add_argument('--quiet', action='store_true', help='warnings and errors only')
    common.add_argument('--no-check', action='store_true', help='report acceptance checks without failing')
    common.add_argument('--timestamp', action='store_true', help='record the creation time in manifest.json')
    common.add_argument('--spin', type=int, help='spin weight s')
    common.add_argument('--lmax', dest='L', type=int, help='band limit L')
    common.add_argument('--a', type=float, help='dilation base a > 1')
    common.add_argument('--b', type=float, help='partition parameter b in (0, 1)')
    common.add_argument('--alpha', type=float, help='power-law exponent of C_l = c l^-alpha')
    common.add_argument('--c', type=float, help='power-law amplitude')
    common.add_argument('--reps', dest='n_reps', type=int, help='Monte Carlo replications')
    common.add_argument('--trials', type=int, help='random trials for frame bounds')
    common.add_argument('--j', dest='j_list', type=int, action='append', help='scale j (repeatable)')
    common.add_argument('--b-list', dest='b_list', type=float, nargs='+', help='b values for frame-check')
    common.add_argument('--t-list', dest='t_list', type=float, nargs='+', help='scales t for localization')
    common.add_argument('--alpha-level', dest='alpha_level', type=float, help='test level of S_j')
    common.add_argument('--model-scale', dest='model_scale', type=float, help='C_l multiplier of the tested model')
    common.add_argument('--pair-distance', dest='pair_distance', type=float, help='geodesic distance of the point pair')
    common.add_argument('--samples', dest='n_samples', type=int, help='points per localization profile')
    common.add_argument('--spectrum', dest='spectrum_file', help='CSV spectrum (l, C_l) replacing the power law')
    common.add_argument('--frame', type=Path, help='frame.json to read or write')
    return common


_OVERRIDES = ("seed", "out", "threads", "spin", "L", "a", "b", "alpha", "c", "n_reps", "trials", "j_list",
              "b_list", "t_list", "alpha_level", "model_scale", "pair_distance", "n_samples", "spectrum_file")


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog='spinlet',
        description="Spin needlets on the sphere - harmonics, frames, random fields and their statistics",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Subcommands:
  harmonics-check   Gram residual, kernel diagonal, zonal functional, spin ladder
  frame-build       scales and partitions -> frame.json   (alias: frame build)
  frame-check       empirical frame bounds per b          (alias: frame check)
  simulate          Gaussian field, spectrum estimate, wavelets, scale statistics
  localization      needlet kernel decay
  uncorrelation     correlation of filtered values at a fixed pair
  clt               KS distance of standardized Gamma-hat per scale
  sj-test           rejection rate of the S_j test

Example:
  spinlet harmonics-check --lmax 32 --spin 3
  spinlet frame check --b-list 0.4 0.2 0.1 --lmax 64 --out results/
        """
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command', required=True)
    for command in Subcommand:
        sub.add_parser(command.value, parents=[common], help=f'run {command.value}')
    frame = sub.add_parser('frame', help='frame build | frame check')
    frame_sub = frame.add_subparsers(dest='frame_command', required=True)
    for name in _FRAME_ALIASES:
        frame_sub.add_parser(name, parents=[common], help=f'same as frame-{name}')
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Config file values, then flag overrides"""
    config = load_config(args.config) if args.config else ExperimentConfig()
    return config.with_overrides({name: getattr(args, name) for name in _OVERRIDES})


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run the subcommand and return the exit status"""
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    configure_logging(level)
    logging.captureWarnings(True)
    command = _FRAME_ALIASES[args.frame_command] if args.command == 'frame' else args.command

    try:
        config = resolve_config(args)
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            run(command, config, check=not args.no_check, frame_path=args.frame, timestamp=args.timestamp)
    except ConfigError as e:
        console.print(f"[red]Error: invalid configuration: {escape(str(e))}[/red]")
        return 2
    except SpinletError as e:
        console.print(f"[red]Error: {escape(str(e))}[/red]")
        return 1
    except ValueError as e:
        console.print(f"[red]Error: {escape(str(e))}[/red]")
        return 1
    except OSError as e:
        console.print(f"[red]Error writing results: {escape(str(e))}[/red]")
        return 1
    except KeyboardInterrupt:
        console.print("\n[yellow]Interrupted by user (Ctrl+C)[/yellow]")
        return 1

    logger.debug(f"{command} finished")
    return 0


if __name__ == "__main__":
    sys.exit(main())
