"""Reward/bias learning curves and the final reward-vs-bias scatter."""
from __future__ import annotations

import json
import logging
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .metrics import METRICS_FILE, read_csv  # noqa: E402

log = logging.getLogger(__name__)

LABELS = {"elbert_po": "ELBERT-PO", "g_ppo": "G-PPO", "r_ppo": "R-PPO", "a_ppo": "A-PPO"}
MARKERS = {"elbert_po": "*", "g_ppo": "o", "r_ppo": "s", "a_ppo": "^"}


def load_run(run_dir) -> dict:
    """Config plus per-seed metric rows of one experiment directory."""
    run_dir = Path(run_dir)
    cfg_path = run_dir / "config.json"
    seeds = sorted(run_dir.glob(f"seed_*/{METRICS_FILE}"))
    if not cfg_path.exists() or not seeds:
        raise FileNotFoundError(
            f"{run_dir}: expected config.json and seed_<n>/{METRICS_FILE} (found "
            f"{sorted(p.name for p in run_dir.iterdir()) if run_dir.is_dir() else 'no directory'})")
    cfg = json.loads(cfg_path.read_text())
    runs = {}
    for p in seeds:
        _, rows = read_csv(p)
        if not rows:
            log.warning("%s has no complete rows; skipped", p)
            continue
        runs[p.parent.name] = rows
    return {"dir": str(run_dir), "environment": cfg["environment"], "algorithm": cfg["trainer"]["algorithm"],
            "seeds": runs}


def aggregate(seeds: dict, key: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mean and standard error of ``key`` per env_steps value, over the seeds that logged it."""
    by_step = defaultdict(list)
    for rows in seeds.values():
        for r in rows:
            by_step[r["env_steps"]].append(r.get(key, np.nan))
    steps = np.array(sorted(by_step))
    mean = np.full(len(steps), np.nan)
    err = np.full(len(steps), np.nan)
    for i, s in enumerate(steps):
        x = np.array(by_step[s], dtype=np.float64)
        x = x[~np.isnan(x)]
        if len(x):
            mean[i] = x.mean()
            err[i] = x.std(ddof=1) / np.sqrt(len(x)) if len(x) > 1 else np.nan
    if np.isnan(mean).any():
        log.warning("series %r has missing values; plotted with gaps", key)
    return steps, mean, err


def final_point(seeds: dict) -> dict:
    rew = np.array([rows[-1]["mean_episode_reward"] for rows in seeds.values()])
    bias = np.array([rows[-1]["eval_bias"] for rows in seeds.values()])
    n = len(rew)
    se = (lambda x: float(np.nanstd(x, ddof=1) / np.sqrt(n)) if n > 1 else 0.0)
    return {"reward": float(np.nanmean(rew)), "reward_stderr": se(rew),
            "bias": float(np.nanmean(bias)), "bias_stderr": se(bias), "num_seeds": n}


def emit_plots(run_dirs, out_dir) -> dict:
    """Write ``<env>_curves.png`` and ``<env>_scatter.png`` per environment plus ``scatter_summary.json``."""
    runs = [load_run(d) for d in run_dirs]
    if not runs:
        raise FileNotFoundError("no run directories given")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    by_env = defaultdict(list)
    for r in runs:
        by_env[r["environment"]].append(r)
    summary = {}
    for env, rs in by_env.items():
        fig, axes = plt.subplots(1, 2, figsize=(10, 3.6))
        for r in rs:
            label = LABELS.get(r["algorithm"], r["algorithm"])
            for ax, key in zip(axes, ("mean_episode_reward", "eval_bias")):
                steps, mean, err = aggregate(r["seeds"], key)
                line, = ax.plot(steps, mean, label=label)
                if len(r["seeds"]) > 1:
                    ax.fill_between(steps, mean - err, mean + err, color=line.get_color(), alpha=0.2, linewidth=0)
        axes[0].set_ylabel("reward")
        axes[1].set_ylabel("bias")
        for ax in axes:
            ax.set_xlabel("env steps")
        axes[0].legend()
        fig.suptitle(f"{env} (shaded: standard error across seeds)")
        fig.tight_layout()
        fig.savefig(out_dir / f"{env}_curves.png", dpi=120)
        plt.close(fig)

        fig, ax = plt.subplots(figsize=(4.5, 4))
        summary[env] = {}
        for r in rs:
            p = final_point(r["seeds"])
            name = r["algorithm"]
            summary[env][name] = p
            ax.errorbar(p["bias"], p["reward"], xerr=p["bias_stderr"], yerr=p["reward_stderr"],
                        marker=MARKERS.get(name, "o"), markersize=10, linestyle="none",
                        label=LABELS.get(name, name))
        ax.set_xlabel("bias (lower is fairer)")
        ax.set_ylabel("reward")
        ax.set_title(env)
        ax.legend()
        fig.tight_layout()
        fig.savefig(out_dir / f"{env}_scatter.png", dpi=120)
        plt.close(fig)
    (out_dir / "scatter_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return summary
