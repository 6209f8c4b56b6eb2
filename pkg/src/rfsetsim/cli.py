"""Command-line harness: one experiment per invocation.

Subcommands map one-to-one onto the sweep recipes:

    rfsetsim iv            --config cfg.yaml [--out PATH] [--seed-override N] [--parallel]
    rfsetsim s11           --config cfg.yaml ...
    rfsetsim stability-map --config cfg.yaml ...
    rfsetsim snr-benchmark --config cfg.yaml ...
    rfsetsim fit           --config cfg.yaml ...

Exit codes: 0 success, 2 config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

from . import sweeps
from .config import ConfigError, load_config
from .fitting import IllConditioned, SingularNormalEquations
from .resonator import NoResonanceInRange

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_RUNNERS = {
    "iv": lambda cfg, parallel: sweeps.run_iv(cfg, parallel=parallel),
    "s11": lambda cfg, parallel: sweeps.run_s11(cfg),
    "stability-map": lambda cfg, parallel: sweeps.run_stability_map(
        cfg, parallel=parallel),
    "snr-benchmark": lambda cfg, parallel: sweeps.run_snr_benchmark(cfg),
    "fit": lambda cfg, parallel: sweeps.run_fit(cfg),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rfsetsim",
        description="Kinetic-inductance resonator / rf-SET simulator")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _RUNNERS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True,
                         help="YAML experiment configuration")
        cmd.add_argument("--out", default=None,
                         help="output table path (overrides config)")
        cmd.add_argument("--seed-override", type=int, default=None)
        cmd.add_argument("--parallel", action="store_true",
                         help="evaluate independent sweep points in a "
                              "worker pool")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, seed_override=args.seed_override,
                             output_override=args.out)
        if not config.output_path:
            raise ConfigError("no output path: set output_path or --out")
        result = _RUNNERS[args.subcommand](config, args.parallel)
        written = result.write(config.output_path)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (sweeps.NumericalFailure, NoResonanceInRange, IllConditioned,
            SingularNormalEquations, FloatingPointError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
