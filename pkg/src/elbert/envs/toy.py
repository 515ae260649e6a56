"""Two-action, single-state SD-MDP whose bias-minimising policy is the 50/50 mix.

Action 0 supplies group 0, action 1 supplies group 1; every step demands one
unit from each group and pays the same reward.  Long-term benefit rates are
therefore ``(P[a=0], P[a=1])``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..sdmdp import SupplyDemandSignals
from .base import ActionSpace, SDEnv


@dataclass(frozen=True)
class ToyConfig:
    episode_length: int = 10
    reward: float = 1.0


def toy_exact_bias(prob_action0: float) -> float:
    return abs(prob_action0 - (1.0 - prob_action0))


class ToyFairnessEnv(SDEnv):
    name = "toy"

    def __init__(self, cfg: ToyConfig | None = None, seed: int | None = None):
        super().__init__(seed)
        self.cfg = cfg or ToyConfig()
        self.num_groups = 2
        self.obs_dim = 1
        self.action_space = ActionSpace("discrete", 2)
        self.episode_length = self.cfg.episode_length
        self.t = 0

    def reset(self) -> np.ndarray:
        self.t = 0
        return self.observation()

    def observation(self) -> np.ndarray:
        return np.ones(1)

    def step(self, action):
        a = int(action)
        if a not in (0, 1):
            raise ValueError(f"toy action must be 0 or 1, got {action!r}")
        supply = np.array([1.0, 0.0]) if a == 0 else np.array([0.0, 1.0])
        self.t += 1
        sig = SupplyDemandSignals(self.cfg.reward, supply, np.ones(2))
        return self.observation(), sig, self.t >= self.episode_length

    def _get_state(self) -> dict:
        return {"t": self.t}

    def _set_state(self, d: dict) -> None:
        self.t = d["t"]
