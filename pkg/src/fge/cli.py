"""Command-line entry point: ``fge <stage> [options]``."""
from __future__ import annotations

import argparse
import logging
import os
import sys

from .errors import FGEError
from .pipeline import STAGES, RunConfig, parse_config_file, run_all, run_stage

log = logging.getLogger("fge")

FLAG_KEYS = ("out", "seed", "threads", "epsilon_shares", "holding_months", "smote_alpha", "pos_weight",
             "dml_folds", "intents", "executions", "security", "factors", "links_dir")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fge", description="Insider intent/execution analysis pipeline.")
    p.add_argument("stage", choices=STAGES + ("all",), help="pipeline stage to run")
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--out", help="output directory (default fge_out)")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help="worker cap for parallel tree training")
    p.add_argument("--epsilon-shares", type=float, help="share tolerance of the execution threshold")
    p.add_argument("--holding-months", type=int, help="calendar-portfolio holding period H")
    p.add_argument("--smote-alpha", help="comma-separated SMOTE ratio grid")
    p.add_argument("--pos-weight", help="comma-separated positive-class weight grid")
    p.add_argument("--dml-folds", type=int, help="cross-fitting folds K")
    p.add_argument("--intents")
    p.add_argument("--executions")
    p.add_argument("--security")
    p.add_argument("--factors")
    p.add_argument("--links-dir")
    return p


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = parse_config_file(args.config) if args.config else {}
    for key in FLAG_KEYS:
        v = getattr(args, key)
        if v is not None:
            values[key] = v  # flags win over the file
    return RunConfig.from_mapping(values)


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("FGE_LOG", "WARNING").upper(),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.stage == "all":
            run_all(cfg)
        else:
            run_stage(args.stage, cfg)
    except FGEError as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
