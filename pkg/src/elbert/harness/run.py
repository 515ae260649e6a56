"""Drive training for every seed: periodic evaluation, metric files, checkpoints, resume."""
from __future__ import annotations

import json
import logging
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..envs import make_env
from ..numerics.checkpoint import load_json, save_json
from ..trainers import Trainer
from .config import ExperimentConfig, from_dict
from .evaluate import evaluate_policy
from .metrics import (METRICS_FILE, TIMING_FILE, TRAIN_COLUMNS, TRAIN_FILE, CsvAppender, MetricRecord,
                      metric_columns, read_csv, truncate_csv, write_summary)

log = logging.getLogger(__name__)

CHECKPOINT_FILE = "checkpoint.json"
CONFIG_FILE = "config.json"


def env_seed(seed: int) -> int:
    return int(np.random.SeedSequence([seed, 1]).generate_state(1)[0])


def eval_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, 2, index]).generate_state(1)[0])


def build_trainer(cfg: ExperimentConfig, seed: int) -> Trainer:
    env = make_env(cfg.environment, cfg.env_overrides, seed=env_seed(seed))
    return Trainer(replace(cfg.trainer, seed=seed), env)


class SeedRun:
    """One seed's training run inside ``<output_dir>/seed_<n>``."""

    def __init__(self, cfg: ExperimentConfig, seed: int, resume: bool = True):
        self.cfg = cfg
        self.seed = seed
        self.dir = Path(cfg.output_dir) / f"seed_{seed}"
        self.dir.mkdir(parents=True, exist_ok=True)
        self.trainer = build_trainer(cfg, seed)
        self.eval_index = 0
        self.next_eval = 0
        self.next_checkpoint = cfg.checkpoint_interval_steps or None
        self.metric_rows = 0
        self.train_rows = 0
        self.started = time.perf_counter()
        ckpt = self.dir / CHECKPOINT_FILE
        if resume and ckpt.exists():
            self.restore(load_json(ckpt))
        else:
            for f in (METRICS_FILE, TRAIN_FILE, TIMING_FILE):
                (self.dir / f).unlink(missing_ok=True)
        env = self.trainer.env
        self.metrics = CsvAppender(self.dir / METRICS_FILE, metric_columns(env.num_pairs, env.num_groups))
        self.train_log = CsvAppender(self.dir / TRAIN_FILE, TRAIN_COLUMNS)
        self.timing = CsvAppender(self.dir / TIMING_FILE, ["env_steps", "wall_clock_seconds"])

    # persistence -------------------------------------------------------------
    def checkpoint_dict(self) -> dict:
        return {
            "experiment": self.cfg.to_dict(),
            "seed": self.seed,
            "trainer": self.trainer.state_dict(),
            "eval_index": self.eval_index,
            "next_eval": self.next_eval,
            "next_checkpoint": self.next_checkpoint,
            "metric_rows": self.metric_rows,
            "train_rows": self.train_rows,
        }

    def save(self) -> None:
        save_json(self.checkpoint_dict(), self.dir / CHECKPOINT_FILE)

    def restore(self, d: dict) -> None:
        self.trainer.load_state_dict(d["trainer"])
        self.eval_index = d["eval_index"]
        self.next_eval = d["next_eval"]
        self.next_checkpoint = d["next_checkpoint"]
        self.metric_rows = d["metric_rows"]
        self.train_rows = d["train_rows"]
        # rows written after the checkpoint are replayed by the resumed run
        truncate_csv(self.dir / METRICS_FILE, self.metric_rows)
        truncate_csv(self.dir / TRAIN_FILE, self.train_rows)
        _, timing = read_csv(self.dir / TIMING_FILE) if (self.dir / TIMING_FILE).exists() else ([], [])
        truncate_csv(self.dir / TIMING_FILE, min(len(timing), self.metric_rows))
        log.info("seed %d: resumed at %d env steps", self.seed, self.trainer.env_steps)

    # loop --------------------------------------------------------------------
    def evaluate(self) -> MetricRecord:
        ev = self.cfg.eval
        r = evaluate_policy(self.trainer.policy, (self.cfg.environment, self.cfg.env_overrides),
                            ev.episodes_per_eval, eval_seed(self.seed, self.eval_index), ev.greedy)
        rec = MetricRecord(self.trainer.env_steps, r.mean_reward, r.bias, r.rates, r.supply, r.demand,
                           time.perf_counter() - self.started)
        self.metrics.append(rec.row())
        self.timing.append([rec.env_steps, rec.wall_clock_seconds])
        self.metric_rows += 1
        self.eval_index += 1
        interval = ev.eval_interval_steps
        while self.next_eval <= self.trainer.env_steps:
            self.next_eval += interval
        log.info("seed %d step %d: reward %.4g bias %.4g", self.seed, rec.env_steps, rec.mean_episode_reward,
                 rec.eval_bias)
        return rec

    def run(self) -> None:
        total = self.cfg.trainer.total_steps
        if self.metric_rows == 0:
            self.evaluate()
        while self.trainer.env_steps < total:
            m = self.trainer.iterate()
            self.train_log.append([m[k] for k in TRAIN_COLUMNS])
            self.train_rows += 1
            steps = self.trainer.env_steps
            if steps >= self.next_eval or steps >= total:
                self.evaluate()
            if self.next_checkpoint is not None and steps >= self.next_checkpoint:
                while self.next_checkpoint <= steps:
                    self.next_checkpoint += self.cfg.checkpoint_interval_steps
                self.save()
        self.save()


def run_experiment(cfg: ExperimentConfig, resume: bool = True) -> dict:
    """Train every seed, then write ``summary.json`` (mean and standard error of the final evaluation)."""
    cfg.validate()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / CONFIG_FILE).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
    dirs = []
    for seed in cfg.seeds:
        run = SeedRun(cfg, seed, resume)
        run.run()
        dirs.append(run.dir)
    return write_summary(out, dirs)


def load_checkpoint(path) -> tuple[ExperimentConfig, Trainer]:
    d = load_json(path)
    exp = d["experiment"]
    cfg = from_dict({k: v for k, v in exp.items()})
    trainer = build_trainer(cfg, d["seed"])
    trainer.load_state_dict(d["trainer"])
    return cfg, trainer
