"""Command-line front end.

Verbs: sample, minkowski, pressure, gap, mean-energy, entropy, boundary,
gnz, validate.  Global flags: --config, --seed, --out, --jobs.  Exit codes:
0 success, 2 configuration error, 3 estimator failure, 4 invariant
violation.
"""

from __future__ import annotations

import argparse
import sys

from .config import KINDS, ConfigError, load_config
from .experiments import run_experiment
from .sampler import EstimatorError
from .thermo import InvariantViolation


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gibbsim",
        description="Gibbs point process simulation and thermodynamic "
                    "estimation")
    sub = parser.add_subparsers(dest="verb", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} experiment")
        p.add_argument("--config", default=None,
                       help="experiment configuration file (INI dialect)")
        p.add_argument("--seed", type=int, default=None,
                       help="master seed, overrides the config")
        p.add_argument("--out", default="out",
                       help="output directory (default: ./out)")
        p.add_argument("--jobs", type=int, default=1,
                       help="worker processes for independent jobs")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, kind=args.verb, seed_override=args.seed)
        run_experiment(cfg, args.out, jobs=max(1, args.jobs))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 4
    except EstimatorError as exc:
        print(f"estimator failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
