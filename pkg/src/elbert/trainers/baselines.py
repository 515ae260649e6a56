"""Running in-episode bias and the reward/advantage modifications of R-PPO and A-PPO."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class HistoricalBiasTracker:
    """Undiscounted supply/demand sums since the start of the current episode."""
    supply: np.ndarray = field(default_factory=lambda: np.zeros((1, 2)))
    demand: np.ndarray = field(default_factory=lambda: np.zeros((1, 2)))
    delta: float = 0.0

    @classmethod
    def for_shape(cls, num_pairs: int, num_groups: int) -> "HistoricalBiasTracker":
        return cls(np.zeros((num_pairs, num_groups)), np.zeros((num_pairs, num_groups)))

    def reset(self) -> None:
        self.supply = np.zeros_like(self.supply)
        self.demand = np.zeros_like(self.demand)
        self.delta = 0.0


def running_bias(supply: np.ndarray, demand: np.ndarray) -> float:
    """Max-min rate gap over groups with positive demand; 0 with fewer than two."""
    worst = 0.0
    for s, d in zip(np.atleast_2d(supply), np.atleast_2d(demand)):
        has = d > 0
        if has.sum() >= 2:
            r = s[has] / d[has]
            worst = max(worst, float(r.max() - r.min()))
    return worst


def historical_bias_delta(tracker: HistoricalBiasTracker, supply, demand) -> float:
    """Fold one step's signals into ``tracker`` and return the updated bias.

    With several supply/demand pairs the largest per-pair gap is reported.
    """
    tracker.supply = tracker.supply + np.asarray(supply, dtype=np.float64).reshape(tracker.supply.shape)
    tracker.demand = tracker.demand + np.asarray(demand, dtype=np.float64).reshape(tracker.demand.shape)
    tracker.delta = running_bias(tracker.supply, tracker.demand)
    return tracker.delta


def r_ppo_shaped_reward(r, delta, zeta1: float, omega: float, form: str = "hinge"):
    """``r - zeta1*max(0, delta - omega)``; ``form="additive"`` gives ``r + zeta1*delta``."""
    r = np.asarray(r, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    if form == "additive":
        out = r + zeta1 * delta
    else:
        out = r - zeta1 * np.maximum(0.0, delta - omega)
    return float(out) if out.ndim == 0 else out


def a_ppo_adjusted_advantage(a, delta_now, delta_next, beta1: float, beta2: float, omega: float):
    a = np.asarray(a, dtype=np.float64)
    now = np.asarray(delta_now, dtype=np.float64)
    nxt = np.asarray(delta_next, dtype=np.float64)
    out = a + beta1 * np.minimum(0.0, -now + omega)
    out = out + beta2 * np.where(now > omega, np.minimum(0.0, now - nxt), 0.0)
    return float(out) if out.ndim == 0 else out
