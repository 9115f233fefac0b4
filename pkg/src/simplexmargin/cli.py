"""Command-line entry point: ``simplexmargin run --config <path> [options]``."""

import argparse
import logging
import os
import sys

from .config import load_config, to_text, with_overrides
from .exceptions import ConfigError
from .experiments import RUNNERS
from .properties import run_properties

EXIT_OK, EXIT_PROPERTY_FAILURE, EXIT_CONFIG_ERROR, EXIT_RUNTIME_ERROR = 0, 1, 2, 3
SEED_ENV = "SIMPLEX_MARGIN_SEED"


def _u64(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _positive(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser():
    parser = argparse.ArgumentParser(prog="simplexmargin", description="Simplex-coded classification experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the experiment described by a config file")
    run.add_argument("--config", required=True, help="key=value config file")
    run.add_argument("--out", help="output directory (overrides the config)")
    run.add_argument("--seed", type=_u64, help=f"base seed (overrides ${SEED_ENV} and the config)")
    run.add_argument("--svg", action="store_true", help="also write SVG figures")
    run.add_argument("--repeats", type=_positive, help="repeats per setting")
    run.add_argument("--jobs", type=_positive, default=1, help="worker processes")
    return parser


def resolve_seed(flag_seed, cfg_seed, environ=None):
    """Seed precedence: command-line flag, then environment variable, then config file."""
    environ = os.environ if environ is None else environ
    if flag_seed is not None:
        return flag_seed
    env = environ.get(SEED_ENV, "").strip()
    if env:
        try:
            v = int(env)
        except ValueError:
            raise ConfigError(SEED_ENV, f"not an integer: {env!r}") from None
        if not 0 <= v < 2 ** 64:
            raise ConfigError(SEED_ENV, "seed must fit in 64 unsigned bits")
        return v
    return cfg_seed


def run(args):
    try:
        cfg = load_config(args.config)
        cfg = with_overrides(cfg, seed=resolve_seed(args.seed, cfg.seed), out=args.out,
                             repeats=args.repeats, svg=True if args.svg else None)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except OSError as exc:
        print(f"config error: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    try:
        os.makedirs(cfg.out, exist_ok=True)
        with open(os.path.join(cfg.out, "config.resolved"), "w") as fh:
            fh.write(to_text(cfg))
        if cfg.experiment == "properties":
            _, report, code = run_properties(cfg)
            with open(os.path.join(cfg.out, "properties_report.txt"), "w") as fh:
                fh.write(report)
            sys.stdout.write(report)
            return EXIT_OK if code == 0 else EXIT_PROPERTY_FAILURE
        result = RUNNERS[cfg.experiment](cfg, jobs=args.jobs)
    except Exception as exc:  # noqa: BLE001 - any failure past config parsing is a runtime error
        logging.getLogger(__name__).debug("run failed", exc_info=True)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME_ERROR
    for name, path in sorted(result.files.items()):
        print(f"{name}: {path}")
    if result.diverged:
        print(f"diverged runs excluded: {result.diverged}")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        return run(args)
    return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
