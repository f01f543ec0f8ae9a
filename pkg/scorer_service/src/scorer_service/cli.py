"""Launcher. Settings come from flags, a JSON config file, or environment
variables (SCORER_PORT, SCORER_MODEL), in that order of precedence."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .models import DEFAULT_MODEL, make_model
from .service import DEFAULT_BATCH_CAP, serve


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="scorer-service")
    parser.add_argument("--config", help="JSON file with host/port/model/batch_cap")
    parser.add_argument("--host")
    parser.add_argument("--port", type=int)
    parser.add_argument("--model", help=f"model id, or 'lexical-stub' (default {DEFAULT_MODEL})")
    parser.add_argument("--batch-cap", type=int)
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format="%(levelname)s %(name)s: %(message)s")

    settings = {
        "host": "127.0.0.1",
        "port": 8090,
        "model": DEFAULT_MODEL,
        "batch_cap": DEFAULT_BATCH_CAP,
    }
    if os.environ.get("SCORER_PORT"):
        settings["port"] = int(os.environ["SCORER_PORT"])
    if os.environ.get("SCORER_MODEL"):
        settings["model"] = os.environ["SCORER_MODEL"]
    if args.config:
        try:
            loaded = json.loads(open(args.config).read())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        if not isinstance(loaded, dict):
            print("config error: root must be an object", file=sys.stderr)
            return 2
        unknown = set(loaded) - set(settings)
        if unknown:
            print(f"config error: unknown keys {sorted(unknown)}", file=sys.stderr)
            return 2
        settings.update(loaded)
    for flag in ("host", "port", "model", "batch_cap"):
        value = getattr(args, flag)
        if value is not None:
            settings[flag] = value

    serve(
        make_model(settings["model"]),
        host=settings["host"],
        port=int(settings["port"]),
        batch_cap=int(settings["batch_cap"]),
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
