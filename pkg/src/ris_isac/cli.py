"""Command-line entry point.

Exit codes: 0 success, 2 configuration problems (including bad flags,
argparse's own convention), 3 solver failure on a valid scenario.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .admm import InfeasibleStartError, SubproblemError
from .config import ConfigError, default_config, load_config
from . import experiments


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ris-isac",
        description="Joint beamformer / RIS phase design for a dual-function "
                    "radar-communication link, plus detection experiments.")
    p.add_argument("--config", type=Path, default=None,
                   help="scenario INI file (omit for built-in defaults)")
    p.add_argument("--seed", type=int, default=None,
                   help="override the scenario seed")
    p.add_argument("--seeds", type=int, default=1,
                   help="number of consecutive seeds to run")
    p.add_argument("--out", type=Path, default=Path("results"),
                   help="output directory for CSV tables and figures")
    p.add_argument("--trials", type=int, default=10000,
                   help="Monte Carlo trials for detection experiments")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("optimize", help="solve one design per seed")
    sub.add_parser("convergence", help="per-iteration SNR and consensus gap")
    sub.add_parser("sweep-rcs", help="RCS split sweep across methods")
    sub.add_parser("sweep-elements", help="RIS size sweep")
    sub.add_parser("roc", help="detection probability curves")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    try:
        cfg = load_config(args.config) if args.config else default_config()
    except (ConfigError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2

    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.seeds < 1:
        print("config error: --seeds must be >= 1", file=sys.stderr)
        return 2
    seeds = list(range(cfg.seed, cfg.seed + args.seeds))
    out_dir = args.out

    try:
        if args.command == "optimize":
            experiments.cmd_optimize(cfg, seeds, out_dir)
        elif args.command == "convergence":
            experiments.cmd_convergence(cfg, seeds, out_dir)
        elif args.command == "sweep-rcs":
            experiments.cmd_sweep_rcs(cfg, seeds, out_dir)
        elif args.command == "sweep-elements":
            experiments.cmd_sweep_elements(cfg, seeds, out_dir)
        elif args.command == "roc":
            experiments.cmd_roc(cfg, seeds, out_dir, n_trials=args.trials)
    except (InfeasibleStartError, SubproblemError) as e:
        print(f"solver failure: {e}", file=sys.stderr)
        return 3

    return 0


if __name__ == "__main__":
    sys.exit(main())
