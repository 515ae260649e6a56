#!/usr/bin/env python3
"""Run the four-algorithm comparison on every environment (original and harder).

At ``--preset full`` this is the full reference step budget (2e6 to 2e7
steps per run, days of CPU time); ``--preset desk`` runs a tenth of it.

    python3 scripts/reproduce_all.py --preset desk --out runs/desk
"""
from __future__ import annotations

import argparse
import subprocess
import sys
from pathlib import Path

from elbert.harness.config import EXPERIMENT_ENVS, PRESETS


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--preset", choices=PRESETS, default="desk")
    p.add_argument("--envs", nargs="+", choices=EXPERIMENT_ENVS, default=list(EXPERIMENT_ENVS))
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--out", default="runs/all")
    args = p.parse_args()
    here = Path(__file__).parent
    for env in args.envs:
        print(f"== {env}", flush=True)
        subprocess.run([sys.executable, str(here / "compare_algorithms.py"), "--env", env, "--preset", args.preset,
                        "--seeds", *map(str, args.seeds), "--out", str(Path(args.out) / env)], check=True)


if __name__ == "__main__":
    main()
