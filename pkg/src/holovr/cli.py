"""Command-line entry point: ``holovr homo|hetero|beamform|e2e``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness
from .errors import ConfigError
from .scenario import ScenarioConfig, default_config, load_config, save_config

_SUITE_BY_COMMAND = {
    "homo": "homo_sweeps",
    "hetero": "hetero_sweeps",
    "beamform": "beamform_sweeps",
    "e2e": "e2e",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="holovr",
        description="Latency simulator for RHS-assisted THz multi-user VR delivery")
    parser.add_argument("--version", action="version", version="%(prog)s 0.1.0")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, default=None,
                       help="scenario YAML (defaults to the built-in reference scenario)")
        p.add_argument("--seed", type=int, default=None,
                       help="base seed (defaults to the config's run.seed)")
        p.add_argument("--out", type=Path, default=Path("out"),
                       help="output directory for CSVs and plot scripts")
        p.add_argument("--workers", type=int, default=None,
                       help="worker processes (default: HOLOVR_WORKERS or 1)")

    common(sub.add_parser("homo", help="homogeneous policy sweeps"))
    hetero_p = sub.add_parser("hetero", help="heterogeneous solver sweeps")
    common(hetero_p)
    hetero_p.add_argument("--algorithm", choices=("h1", "h2", "h3", "oracle"),
                          default=None, help="override the configured solver")
    beam_p = sub.add_parser("beamform", help="beamformer power sweeps and traces")
    common(beam_p)
    beam_p.add_argument("--dump-matrices", action="store_true",
                        help="also dump impedance/coupling/pattern matrices as CSV")
    common(sub.add_parser("e2e", help="full two-timescale run"))

    init_p = sub.add_parser("init-config", help="write the reference scenario YAML")
    init_p.add_argument("path", type=Path)
    return parser


def _load(args) -> ScenarioConfig:
    if args.config is None:
        return default_config()
    return load_config(args.config)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "init-config":
        save_config(default_config(), args.path)
        print(f"wrote {args.path}")
        return 0
    try:
        config = _load(args)
        if args.command == "hetero" and args.algorithm is not None:
            config.solver.algorithm = args.algorithm
        kwargs = {}
        if args.command == "beamform":
            kwargs["dump_matrices"] = args.dump_matrices
        paths = harness.experiment_suite(
            _SUITE_BY_COMMAND[args.command], config, args.out,
            seed=args.seed, workers=args.workers, **kwargs)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
