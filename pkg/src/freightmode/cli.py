"""Command-line entry point: ``freightmode <stage> --config run.yaml``."""
from __future__ import annotations

import argparse
import logging
import sys

from .config import RunConfig
from .errors import FreightModeError
from .pipeline import SCENARIOS, Pipeline

COMMANDS = ("synth", "ingest", "split", "featurize", "train", "evaluate", "explain", "report", "run-all")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="freightmode", description="Freight mode choice pipeline.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="YAML run configuration (defaults apply when omitted)")
    p.add_argument("--seed", type=int, help="root seed, overriding the config")
    p.add_argument("--threads", type=int, help="worker threads for forest fitting")
    p.add_argument("--strict", action="store_true", help="abort ingest on the first invalid field")
    p.add_argument("--scenario", choices=SCENARIOS, action="append",
                   help="restrict train/evaluate to a scenario (repeatable)")
    p.add_argument("--output", help="output directory, overriding the config")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.load(args.config) if args.config else RunConfig()
        if args.output:
            cfg.data["paths"]["output"] = args.output
        cfg.override(seed=args.seed, threads=args.threads, strict=args.strict)
        pipe = Pipeline(cfg)
        cmd = args.command
        if cmd == "run-all":
            pipe.run_all()
        elif cmd in ("train", "evaluate"):
            getattr(pipe, cmd)(args.scenario)
        else:
            getattr(pipe, cmd)()
    except FreightModeError as exc:
        print(f"freightmode: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
