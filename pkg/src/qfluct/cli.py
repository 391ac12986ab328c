"""Command-line entry point.

    qfluct sweep-sigma --config fig1.json --out fig1.csv
    qfluct sweep-rabi  --config fig2.json --seed 7 --trials 100000
    qfluct single-run  --config point.json --quadrature-only
    qfluct validate    [--config cfg.json]

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import FIG1_CONFIG, load_config, parse_config
from .errors import ConfigError, NumericalError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qfluct", description=__doc__.split("\n\n")[0] if __doc__ else None)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="JSON experiment configuration")
        p.add_argument("--seed", type=_u64, default=None, help="override run.master_seed")
        p.add_argument("--trials", type=int, default=None, help="override run.n_trials (at least 100)")

    for name, text in (("sweep-sigma", "xi against beta*sigma"),
                       ("sweep-rabi", "entropy and coherence increments against Omega_R/omega_q"),
                       ("single-run", "one parameter point")):
        p = sub.add_parser(name, help=text)
        common(p)
        p.add_argument("--out", default=None, help="CSV path (default: output.path, else stdout)")
        p.add_argument("--quadrature-only", action="store_true", help="skip Monte Carlo columns")

    p = sub.add_parser("validate", help="run the invariant suites and print a JSON report")
    common(p, config_required=False)
    p.add_argument("--out", default=None, help="also write the JSON report here")
    # negative-control hook: scale the meter density so completeness fails
    p.add_argument("--inject-kernel-scale", type=float, default=1.0, help=argparse.SUPPRESS)
    return parser


def _load(args):
    config = load_config(args.config) if args.config else parse_config(FIG1_CONFIG)
    return config.with_overrides(seed=args.seed, trials=args.trials)


def _emit(text: str, path) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    from . import experiments

    try:
        config = _load(args)
        if args.command == "validate":
            report = experiments.validate(config, kernel_mass=args.inject_kernel_scale)
            text = report.to_json() + "\n"
            sys.stdout.write(text)
            if args.out:
                _emit(text, args.out)
            return EXIT_OK if report.passed else EXIT_VALIDATION
        run = {"sweep-sigma": experiments.sweep_sigma,
               "sweep-rabi": experiments.sweep_rabi,
               "single-run": experiments.single_run}[args.command]
        result = run(config, quadrature_only=args.quadrature_only)
        _emit(result.to_csv(), args.out or config.output_path)
        return EXIT_OK
    except ConfigError as exc:
        print(f"qfluct: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"qfluct: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
