"""Allocating attention units across sites whose incident rates react to the allocation."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..sdmdp import SupplyDemandSignals
from .base import ActionSpace, SDEnv, from_hex, hex_list


@dataclass(frozen=True)
class AttentionConfig:
    num_groups: int = 5
    total_units: int = 6
    initial_rates: tuple = (8.0, 6.0, 4.0, 3.0, 1.5)
    decay_rates: tuple = (0.1,) * 5
    growth_rates: tuple = (0.1,) * 5
    zeta: float = 0.25
    reward_form: str = "discovered_minus_missed"
    episode_length: int = 100

    def __post_init__(self):
        for name in ("initial_rates", "decay_rates", "growth_rates"):
            v = tuple(float(x) for x in getattr(self, name))
            if len(v) != self.num_groups or min(v) < 0:
                raise ValueError(f"{name} needs {self.num_groups} non-negative entries")
            object.__setattr__(self, name, v)
        if self.reward_form not in ("discovered_minus_missed", "negative_missed"):
            raise ValueError(f"unknown reward_form {self.reward_form!r}")

    @classmethod
    def original(cls, **kw) -> "AttentionConfig":
        return cls(**kw)

    @classmethod
    def harder(cls, **kw) -> "AttentionConfig":
        base = dict(total_units=30, initial_rates=(30.0, 25.0, 22.5, 17.5, 12.5),
                    decay_rates=(0.004, 0.01, 0.016, 0.02, 0.04),
                    growth_rates=(0.08, 0.2, 0.4, 0.8, 2.0), reward_form="negative_missed")
        base.update(kw)
        return cls(**base)


@dataclass
class AttentionState:
    incident_rates: np.ndarray
    last_allocation: np.ndarray
    last_discovered: np.ndarray
    last_incidents: np.ndarray
    step_index: int = 0


def attention_reset(cfg: AttentionConfig) -> AttentionState:
    z = np.zeros(cfg.num_groups)
    return AttentionState(np.array(cfg.initial_rates), z.copy(), z.copy(), z.copy())


def update_rates(rates: np.ndarray, allocation: np.ndarray, cfg: AttentionConfig) -> np.ndarray:
    decay = np.asarray(cfg.decay_rates)
    growth = np.asarray(cfg.growth_rates)
    new = np.where(allocation > 0, rates - decay * allocation, rates + growth)
    return np.maximum(new, 0.0)


def attention_reward(incidents: np.ndarray, discovered: np.ndarray, cfg: AttentionConfig) -> float:
    missed = float(np.sum(incidents - discovered))
    if cfg.reward_form == "negative_missed":
        return -cfg.zeta * missed
    return float(np.sum(discovered)) - cfg.zeta * missed


def attention_observation(state: AttentionState, cfg: AttentionConfig) -> np.ndarray:
    scale = max(max(cfg.initial_rates), 1.0)
    return np.concatenate([
        state.last_allocation / cfg.total_units,
        state.last_discovered / cfg.total_units,
        state.last_incidents / scale,
        [state.step_index / cfg.episode_length],
    ])


def attention_step(state: AttentionState, cfg: AttentionConfig, allocation, rng: np.random.Generator
                   ) -> tuple[AttentionState, np.ndarray, SupplyDemandSignals]:
    a = np.asarray(allocation)
    if a.shape != (cfg.num_groups,) or np.any(a < 0) or np.any(a != np.round(a)):
        raise ValueError(f"allocation must be {cfg.num_groups} non-negative integers, got {allocation!r}")
    if int(a.sum()) != cfg.total_units:
        raise ValueError(f"allocation sums to {int(a.sum())}, expected {cfg.total_units}")
    a = a.astype(np.float64)
    y = rng.poisson(state.incident_rates).astype(np.float64)
    y_hat = np.minimum(a, y)
    reward = attention_reward(y, y_hat, cfg)
    nxt = AttentionState(update_rates(state.incident_rates, a, cfg), a, y_hat, y, state.step_index + 1)
    return nxt, attention_observation(nxt, cfg), SupplyDemandSignals(reward, y_hat, y)


class AttentionEnv(SDEnv):
    def __init__(self, cfg: AttentionConfig | None = None, seed: int | None = None):
        super().__init__(seed)
        self.cfg = cfg or AttentionConfig.original()
        self.name = "attention_harder" if self.cfg.reward_form == "negative_missed" else "attention_original"
        self.num_groups = self.cfg.num_groups
        self.obs_dim = 3 * self.cfg.num_groups + 1
        self.action_space = ActionSpace("allocation", self.cfg.num_groups, self.cfg.total_units)
        self.episode_length = self.cfg.episode_length
        self.state = attention_reset(self.cfg)

    def reset(self) -> np.ndarray:
        self.state = attention_reset(self.cfg)
        return self.observation()

    def observation(self) -> np.ndarray:
        return attention_observation(self.state, self.cfg)

    def step(self, action):
        self.state, obs, sig = attention_step(self.state, self.cfg, action, self.rng)
        return obs, sig, self.state.step_index >= self.episode_length

    def _get_state(self) -> dict:
        s = self.state
        return {"rates": hex_list(s.incident_rates), "a": hex_list(s.last_allocation),
                "y_hat": hex_list(s.last_discovered), "y": hex_list(s.last_incidents),
                "step_index": s.step_index}

    def _set_state(self, d: dict) -> None:
        self.state = AttentionState(from_hex(d["rates"]), from_hex(d["a"]), from_hex(d["y_hat"]),
                                    from_hex(d["y"]), d["step_index"])
