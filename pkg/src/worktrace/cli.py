"""Command line entry point.

Exit codes: 0 success, 1 stage or validation failure, 2 bad configuration
or usage.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from .config import load_config
from .decomposition import load_decomposition, validate
from .errors import ConfigError, WorktraceError
from .pipeline import DEFAULT_WORKERS, STAGES, run, run_stage, stage_export


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="worktrace",
        description="Trace how a dialogue's content carries into a written report.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="path to the run configuration")
        p.add_argument(
            "--log-level", default="INFO",
            choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        )

    p_run = sub.add_parser("run", help="all stages in order")
    common(p_run)
    p_run.add_argument("--workers", type=int, default=DEFAULT_WORKERS)

    p_stage = sub.add_parser("stage", help="exactly one stage")
    common(p_stage)
    p_stage.add_argument("--stage", required=True, choices=STAGES)
    p_stage.add_argument("--workers", type=int, default=DEFAULT_WORKERS)

    p_val = sub.add_parser(
        "validate-decomposition",
        help="check the decomposition rules and report violations",
    )
    common(p_val)

    p_export = sub.add_parser("export", help="rewrite the manifest from existing artifacts")
    common(p_export)
    return parser


def _validate_decomposition(cfg) -> int:
    d = load_decomposition(cfg.decomposition.read_text())
    violations = validate(d)
    for v in violations:
        print(f"{v.rule}: {v.message} [{', '.join(v.node_ids)}]")
    if violations:
        print(f"{len(violations)} violation(s)")
        return 1
    print(f"ok: {len(d.nodes)} nodes, {len(d.leaf_ids())} leaves")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "run":
            manifest = run(cfg, workers=args.workers)
            print(f"wrote {manifest}")
        elif args.command == "stage":
            run_stage(cfg, args.stage, workers=args.workers)
            print(f"stage {args.stage} done")
        elif args.command == "validate-decomposition":
            return _validate_decomposition(cfg)
        elif args.command == "export":
            stage_export(cfg, 1)
            print(f"wrote {cfg.output_dir / 'manifest.json'}")
    except WorktraceError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
