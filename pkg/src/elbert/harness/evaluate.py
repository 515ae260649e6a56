"""Undiscounted evaluation of a policy's reward and long-term benefit rates."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from ..envs import make_env
from ..envs.base import SDEnv

log = logging.getLogger(__name__)

EnvSpec = Union[str, tuple, Callable[[int], SDEnv]]


@dataclass
class EvalResult:
    mean_reward: float
    bias: float
    rates: np.ndarray     # [P, M]; nan where a group had no demand
    supply: np.ndarray    # [P, M] summed over all evaluation episodes
    demand: np.ndarray

    def as_tuple(self):
        return self.mean_reward, self.bias, self.rates


def build_env(spec: EnvSpec, seed: int) -> SDEnv:
    if callable(spec):
        return spec(seed)
    if isinstance(spec, str):
        return make_env(spec, {}, seed=seed)
    name, overrides = spec
    return make_env(name, overrides or {}, seed=seed)


def rates_from_totals(supply: np.ndarray, demand: np.ndarray) -> tuple[np.ndarray, float]:
    """Per-group supply/demand ratios and the worst max-min gap across pairs.

    Groups without demand get a nan rate and are left out of the gap.
    """
    supply = np.atleast_2d(supply)
    demand = np.atleast_2d(demand)
    with np.errstate(divide="ignore", invalid="ignore"):
        rates = np.where(demand > 0, supply / np.where(demand > 0, demand, 1.0), np.nan)
    bias = 0.0
    for p, r in enumerate(rates):
        seen = r[~np.isnan(r)]
        if len(seen) < len(r):
            log.warning("evaluation: group(s) %s of pair %d had zero demand; rate missing",
                        np.flatnonzero(np.isnan(r)).tolist(), p)
        if len(seen) >= 2:
            bias = max(bias, float(seen.max() - seen.min()))
    return rates, bias


def evaluate_policy(policy, env: EnvSpec, episodes: int = 5, seed: int = 0, greedy: bool = False) -> EvalResult:
    """Roll out ``episodes`` full episodes without training.

    The result depends only on the policy parameters, the environment spec and
    ``seed``: a fresh environment and action RNG are derived from the seed.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    env_seed, act_seed = np.random.SeedSequence(seed).spawn(2)
    e = build_env(env, int(env_seed.generate_state(1)[0]))
    rng = np.random.default_rng(act_seed)
    P, M = e.num_pairs, e.num_groups
    supply = np.zeros((P, M))
    demand = np.zeros((P, M))
    total = 0.0
    for _ in range(episodes):
        obs = e.reset()
        done = False
        while not done:
            a, _ = policy.act(obs, rng, greedy=greedy)
            obs, sig, done = e.step(a)
            total += sig.reward
            supply += np.reshape(sig.supply, (P, M))
            demand += np.reshape(sig.demand, (P, M))
    rates, bias = rates_from_totals(supply, demand)
    return EvalResult(total / episodes, bias, rates, supply, demand)
