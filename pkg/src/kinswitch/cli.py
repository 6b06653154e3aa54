"""Command-line entry point.

    kinswitch run --preset test1a [--override run.N=100000 ...] [--out DIR]
    kinswitch run --config experiment.toml [--no-plots]
    kinswitch presets
    kinswitch validate --config experiment.toml

Output goes to --out, else $KINSWITCH_OUT/<name>, else ./runs/<name>.
Exit codes: 0 success, 2 configuration error, 3 runtime constraint violation.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import ConfigError, apply_overrides, parse_config
from .nanbu import ConstraintError
from .presets import PRESET_NAMES, preset, preset_summaries
from .runner import run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONSTRAINT = 3


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="kinswitch",
        description="Kinetic label-switch + wealth-exchange experiments "
        "(Monte Carlo, macroscopic ODEs, quasi-invariant steady states).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write its bundle")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", type=Path, help="TOML experiment config")
    src.add_argument("--preset", choices=PRESET_NAMES, help="built-in parameterization")
    run.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config key (TOML value syntax), e.g. run.seed=7; repeatable",
    )
    run.add_argument("--out", type=Path, help="output directory (default: <root>/<name>)")
    run.add_argument(
        "--no-plots", action="store_true", help="skip rendering PNG figures into the bundle"
    )

    sub.add_parser("presets", help="list built-in presets")

    val = sub.add_parser("validate", help="parse and validate a config file")
    val.add_argument("--config", type=Path, required=True)
    return parser


def _load(args):
    if args.preset:
        cfg = preset(args.preset)
        name = args.preset
    else:
        try:
            text = args.config.read_text()
        except OSError as e:
            raise ConfigError(str(args.config), f"cannot read config: {e}") from e
        cfg = parse_config(text)
        name = args.config.stem
    if args.override:
        cfg = apply_overrides(cfg, args.override)
    return cfg, name


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "presets":
            for name, blurb in sorted(preset_summaries().items()):
                print(f"{name:10s} {blurb}")
            return EXIT_OK
        if args.command == "validate":
            parse_config(args.config.read_text())
            print(f"{args.config}: ok")
            return EXIT_OK
        cfg, name = _load(args)
        out_dir = args.out
        if out_dir is None:
            root = Path(os.environ.get("KINSWITCH_OUT", "runs"))
            out_dir = root / name
        summary = run_experiment(cfg, out_dir, plots_enabled=not args.no_plots)
        print(f"wrote {out_dir} (mode={summary['mode']}, seed={summary['seed']})")
        return EXIT_OK
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ConstraintError as e:
        print(f"constraint violation: {e}", file=sys.stderr)
        return EXIT_CONSTRAINT
    except OSError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
