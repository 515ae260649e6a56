#!/usr/bin/env python3
"""Train ELBERT-PO and the three baselines on one environment, then plot.

Writes ``<out>/<algorithm>/`` run directories (metrics, checkpoints, summary)
and ``<out>/plots/`` with learning curves and the reward-vs-bias scatter.

    python3 scripts/compare_algorithms.py --env lending --preset desk --out runs/lending_desk
"""
from __future__ import annotations

import argparse
import json
import logging
from pathlib import Path

from elbert.harness import emit_plots, from_dict, run_experiment
from elbert.harness.config import EXPERIMENT_ENVS, PRESETS
from elbert.trainers import ALGORITHMS


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--env", choices=EXPERIMENT_ENVS, default="lending")
    p.add_argument("--preset", choices=PRESETS, default="desk")
    p.add_argument("--algorithms", nargs="+", choices=ALGORITHMS, default=list(ALGORITHMS))
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--eval-interval", type=int, default=10_000)
    p.add_argument("--out", default=None)
    p.add_argument("-v", "--verbose", action="store_true")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)

    out = Path(args.out or f"runs/{args.env}_{args.preset}")
    run_dirs = []
    for alg in args.algorithms:
        cfg = from_dict({
            "environment": args.env, "preset": args.preset, "trainer": {"algorithm": alg},
            "eval": {"eval_interval_steps": args.eval_interval}, "checkpoint_interval_steps": 5 * args.eval_interval,
            "seeds": args.seeds, "output_dir": str(out / alg),
        })
        s = run_experiment(cfg)["metrics"]
        print(f"{alg:10s} reward {s['mean_episode_reward']['mean']:10.4g} +- {s['mean_episode_reward']['stderr']:.3g}"
              f"   bias {s['eval_bias']['mean']:.4f} +- {s['eval_bias']['stderr']:.4f}", flush=True)
        run_dirs.append(out / alg)
    print(json.dumps(emit_plots(run_dirs, out / "plots"), indent=2))


if __name__ == "__main__":
    main()
