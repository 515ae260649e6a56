"""Append-only CSV metric files and the across-seed summary.

``metrics.csv`` holds only deterministic quantities so that identical runs give
byte-identical files; wall-clock time goes to the ``timing.csv`` sidecar.
A torn final line (crash mid-write) is ignored by the reader.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

METRICS_FILE = "metrics.csv"
TIMING_FILE = "timing.csv"
TRAIN_FILE = "train.csv"
SUMMARY_FILE = "summary.json"
BASE_COLUMNS = ("env_steps", "mean_episode_reward", "eval_bias")
TRAIN_COLUMNS = ("iteration", "env_steps", "train_episode_reward", "batch_bias", "value_loss", "entropy",
                 "clip_fraction", "skipped", "floor_hits")


def group_columns(num_pairs: int, num_groups: int) -> list[str]:
    tags = [f"g{g}" for g in range(num_groups)] if num_pairs == 1 else \
        [f"p{p}_g{g}" for p in range(num_pairs) for g in range(num_groups)]
    return [f"{kind}_{t}" for kind in ("rate", "supply", "demand") for t in tags]


def metric_columns(num_pairs: int, num_groups: int) -> list[str]:
    return list(BASE_COLUMNS) + group_columns(num_pairs, num_groups)


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


@dataclass
class MetricRecord:
    env_steps: int
    mean_episode_reward: float
    eval_bias: float
    rates: np.ndarray
    supply: np.ndarray
    demand: np.ndarray
    wall_clock_seconds: float = float("nan")

    def row(self) -> list[str]:
        vals = [self.env_steps, self.mean_episode_reward, self.eval_bias]
        for a in (self.rates, self.supply, self.demand):
            vals.extend(float(v) for v in np.ravel(a))
        return [fmt(v) for v in vals]


class CsvAppender:
    """Writes a header once, then one flushed line per ``append``."""

    def __init__(self, path, columns):
        self.path = Path(path)
        self.columns = list(columns)
        if not self.path.exists() or self.path.stat().st_size == 0:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text(",".join(self.columns) + "\n")

    def append(self, values) -> None:
        values = [v if isinstance(v, str) else fmt(v) for v in values]
        if len(values) != len(self.columns):
            raise ValueError(f"{self.path.name}: expected {len(self.columns)} values, got {len(values)}")
        with self.path.open("a") as f:
            f.write(",".join(values) + "\n")
            f.flush()


def read_csv(path) -> tuple[list[str], list[dict]]:
    """Parse a metric file, keeping only complete rows (crash-truncation safe)."""
    text = Path(path).read_text()
    if not text:
        return [], []
    lines = text.split("\n")
    complete = lines[:-1]     # anything after the last newline is a torn write
    if not complete:
        return [], []
    reader = csv.reader(io.StringIO("\n".join(complete)))
    header = next(reader)
    rows = []
    for r in reader:
        if len(r) != len(header):
            break
        try:
            rows.append({k: (int(v) if k in ("env_steps", "iteration") else float(v)) for k, v in zip(header, r)})
        except ValueError:
            break
    return header, rows


def truncate_csv(path, keep_rows: int) -> None:
    """Keep the header and the first ``keep_rows`` complete data rows."""
    path = Path(path)
    if not path.exists():
        return
    lines = path.read_text().split("\n")[:-1]
    path.write_text("\n".join(lines[:1 + keep_rows]) + "\n")


def _stderr(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0


def summarize(seed_dirs) -> dict:
    """Final-evaluation mean and standard error across seeds, from the raw metric files."""
    finals = {}
    for d in seed_dirs:
        _, rows = read_csv(Path(d) / METRICS_FILE)
        if not rows:
            raise ValueError(f"{d}: no complete rows in {METRICS_FILE}")
        finals[Path(d).name] = rows[-1]
    keys = [k for k in next(iter(finals.values())) if k != "env_steps"]
    out = {"num_seeds": len(finals), "error_bars": "standard error of the mean across seeds",
           "final_env_steps": {s: r["env_steps"] for s, r in finals.items()}, "metrics": {}}
    for k in keys:
        x = np.array([r[k] for r in finals.values()], dtype=np.float64)
        ok = x[~np.isnan(x)]
        out["metrics"][k] = {
            "mean": float(ok.mean()) if len(ok) else None,
            "stderr": _stderr(ok) if len(ok) else None,
            "per_seed": [None if np.isnan(v) else float(v) for v in x],
        }
    return out


def write_summary(run_dir, seed_dirs) -> dict:
    s = summarize(seed_dirs)
    Path(run_dir, SUMMARY_FILE).write_text(json.dumps(s, indent=2, sort_keys=True))
    return s
