"""Sequential credit approval with group-dependent, policy-driven credit dynamics."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..numerics.distributions import sample_index
from ..sdmdp import SupplyDemandSignals
from .base import ActionSpace, SDEnv, from_hex, hex_list, one_hot

APPROVE, REJECT = 1, 0


def _discretized_normal(num_bins: int, mean: float, std: float) -> np.ndarray:
    x = np.arange(num_bins)
    w = np.exp(-0.5 * ((x - mean) / std) ** 2)
    return w / w.sum()


def default_initial_distributions(num_bins: int = 7) -> tuple[tuple[float, ...], tuple[float, ...]]:
    # group 2 sits one bin lower than group 1
    center = (num_bins - 1) / 2
    g1 = _discretized_normal(num_bins, center + 0.5, 1.25)
    g2 = _discretized_normal(num_bins, center - 0.5, 1.25)
    return tuple(g1), tuple(g2)


@dataclass(frozen=True)
class LendingConfig:
    num_score_bins: int = 7
    initial_distributions: tuple | None = None
    repay_prob: tuple | None = None
    dynamic_rate: float = 0.002
    episode_length: int = 2048
    loan_gain: float = 1.0
    loan_loss: float = 1.0
    fairness_notion: str = "equal_opportunity"

    def __post_init__(self):
        C = self.num_score_bins
        if self.initial_distributions is None:
            object.__setattr__(self, "initial_distributions", default_initial_distributions(C))
        if self.repay_prob is None:
            object.__setattr__(self, "repay_prob", tuple(np.linspace(0.1, 0.9, C)))
        dists = np.asarray(self.initial_distributions, dtype=np.float64)
        p = np.asarray(self.repay_prob, dtype=np.float64)
        if dists.shape != (2, C):
            raise ValueError(f"initial_distributions must be 2 x {C}")
        if np.any(dists < 0) or np.any(np.abs(dists.sum(axis=1) - 1) > 1e-12):
            raise ValueError("initial distributions must be probability vectors")
        if p.shape != (C,) or np.any(p < 0) or np.any(p > 1) or np.any(np.diff(p) < 0):
            raise ValueError("repay_prob must be non-decreasing values in [0, 1], one per bin")
        if self.dynamic_rate < 0:
            raise ValueError("dynamic_rate must be >= 0")
        if self.fairness_notion not in ("equal_opportunity", "equalized_odds"):
            raise ValueError(f"unknown fairness notion {self.fairness_notion!r}")


@dataclass
class LendingState:
    distributions: np.ndarray          # [2, C]
    group: int = 0
    score: int = 0
    step_index: int = 0

    def copy(self) -> "LendingState":
        return replace(self, distributions=self.distributions.copy())


def lending_observation(state: LendingState, cfg: LendingConfig) -> np.ndarray:
    return np.concatenate([one_hot(state.group, 2), one_hot(state.score, cfg.num_score_bins)])


def _draw_applicant(state: LendingState, rng: np.random.Generator) -> None:
    state.group = int(rng.integers(2))
    mu = state.distributions[state.group]
    state.score = sample_index(mu, rng)


def lending_reset(cfg: LendingConfig, rng: np.random.Generator) -> LendingState:
    state = LendingState(np.array(cfg.initial_distributions, dtype=np.float64))
    _draw_applicant(state, rng)
    return state


def shift_mass(mu: np.ndarray, src: int, dst: int, eps: float) -> None:
    """Move ``eps`` probability from bin ``src`` to ``dst`` in place, truncated to
    the mass available at ``src``."""
    if src == dst:
        return
    amount = min(eps, mu[src])
    mu[src] -= amount
    mu[dst] += amount


def lending_step(state: LendingState, cfg: LendingConfig, action: int, rng: np.random.Generator
                 ) -> tuple[LendingState, np.ndarray, SupplyDemandSignals]:
    if action not in (APPROVE, REJECT):
        raise ValueError(f"lending action must be 0 (reject) or 1 (approve), got {action!r}")
    nxt = state.copy()
    g, c = state.group, state.score
    repaid = bool(rng.random() < cfg.repay_prob[c])
    approved = action == APPROVE

    if approved:
        reward = cfg.loan_gain if repaid else -cfg.loan_loss
        C = cfg.num_score_bins
        dst = min(c + 1, C - 1) if repaid else max(c - 1, 0)
        shift_mass(nxt.distributions[g], c, dst, cfg.dynamic_rate)
    else:
        reward = 0.0

    supply = np.zeros(2)
    demand = np.zeros(2)
    supply[g] = float(approved and repaid)
    demand[g] = float(repaid)
    if cfg.fairness_notion == "equalized_odds":
        fp_supply = np.zeros(2)
        fp_demand = np.zeros(2)
        fp_supply[g] = float(approved and not repaid)
        fp_demand[g] = float(not repaid)
        supply, demand = np.stack([supply, fp_supply]), np.stack([demand, fp_demand])

    nxt.step_index += 1
    _draw_applicant(nxt, rng)
    return nxt, lending_observation(nxt, cfg), SupplyDemandSignals(reward, supply, demand)


class LendingEnv(SDEnv):
    name = "lending"

    def __init__(self, cfg: LendingConfig | None = None, seed: int | None = None):
        super().__init__(seed)
        self.cfg = cfg or LendingConfig()
        self.num_groups = 2
        self.num_pairs = 2 if self.cfg.fairness_notion == "equalized_odds" else 1
        self.obs_dim = 2 + self.cfg.num_score_bins
        self.action_space = ActionSpace("discrete", 2)
        self.episode_length = self.cfg.episode_length
        self.state = lending_reset(self.cfg, self.rng)

    def reset(self) -> np.ndarray:
        self.state = lending_reset(self.cfg, self.rng)
        return self.observation()

    def observation(self) -> np.ndarray:
        return lending_observation(self.state, self.cfg)

    def step(self, action):
        self.state, obs, sig = lending_step(self.state, self.cfg, int(action), self.rng)
        return obs, sig, self.state.step_index >= self.episode_length

    def _get_state(self) -> dict:
        s = self.state
        return {"distributions": hex_list(s.distributions), "group": s.group, "score": s.score,
                "step_index": s.step_index}

    def _set_state(self, d: dict) -> None:
        self.state = LendingState(from_hex(d["distributions"], (2, self.cfg.num_score_bins)),
                                  d["group"], d["score"], d["step_index"])
