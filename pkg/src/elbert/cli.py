"""Command line: ``elbert train | eval | plot``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from .harness.config import ENV_PREFIX, PRESETS, ConfigError, resolve
from .harness.evaluate import evaluate_policy
from .harness.plots import emit_plots
from .harness.run import load_checkpoint, run_experiment


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="elbert", description=__doc__,
                                epilog=f"Config values can be overridden with {ENV_PREFIX}<KEY>__<SUBKEY>=value, "
                                       f"e.g. {ENV_PREFIX}TRAINER__LEARNING_RATE=1e-4.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train every configured seed and write metrics and a summary")
    t.add_argument("--config", required=True, help="YAML or JSON experiment config")
    t.add_argument("--preset", choices=PRESETS, help="start from the full-budget (full) or 1/10-budget (desk) settings")
    t.add_argument("--seed", type=int, help="run only this seed")
    t.add_argument("--out", help="output directory")
    t.add_argument("--fresh", action="store_true", help="ignore existing checkpoints")

    e = sub.add_parser("eval", help="evaluate a checkpointed policy")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--episodes", type=int, default=5)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--greedy", action="store_true")

    pl = sub.add_parser("plot", help="learning curves and reward-vs-bias scatter")
    pl.add_argument("--runs", nargs="+", required=True, help="experiment output directories")
    pl.add_argument("--out", default="plots")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "train":
            cfg = resolve(args.config, preset=args.preset, seed=args.seed, out=args.out)
            summary = run_experiment(cfg, resume=not args.fresh)
            print(json.dumps(summary["metrics"], indent=2))
        elif args.command == "eval":
            cfg, trainer = load_checkpoint(args.checkpoint)
            r = evaluate_policy(trainer.policy, (cfg.environment, cfg.env_overrides), args.episodes, args.seed,
                                args.greedy)
            rates = np.where(np.isnan(r.rates), None, r.rates).tolist()
            print(json.dumps({"mean_reward": r.mean_reward, "bias": r.bias, "rates": rates,
                              "supply": r.supply.tolist(), "demand": r.demand.tolist()}, indent=2))
        else:
            summary = emit_plots(args.runs, args.out)
            print(json.dumps(summary, indent=2))
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
