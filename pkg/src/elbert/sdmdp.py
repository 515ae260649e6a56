"""Supply-demand MDP signals and the bias mathematics built on them.

Supply and demand arrays carry a trailing group axis of length ``M``.  Fairness
notions with several supply/demand pairs (equalized odds: one pair for true
positives, one for false positives) add a leading pair axis, so a single step's
signals are ``[P, M]``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class DegenerateDemand(ValueError):
    """A group's cumulative demand is not positive, so its rate is undefined."""

    def __init__(self, group: int, value: float, pair: int = 0, context: str = ""):
        self.group, self.value, self.pair = group, value, pair
        where = f" (pair {pair})" if pair else ""
        msg = f"group {group}{where} has non-positive cumulative demand {value!r}"
        super().__init__(f"{context}: {msg}" if context else msg)


@dataclass(frozen=True)
class SupplyDemandSignals:
    """What an SD-MDP emits after one action besides the next observation."""
    reward: float
    supply: np.ndarray
    demand: np.ndarray
    pair_id: int = 0

    def __post_init__(self):
        s = np.asarray(self.supply, dtype=np.float64)
        d = np.asarray(self.demand, dtype=np.float64)
        if s.shape != d.shape:
            raise ValueError(f"supply shape {s.shape} != demand shape {d.shape}")
        object.__setattr__(self, "supply", s)
        object.__setattr__(self, "demand", d)

    @property
    def num_groups(self) -> int:
        return self.supply.shape[-1]


@dataclass
class Trajectory:
    """Per-step arrays for one stretch of interaction.

    ``supply``/``demand`` are ``[T, P, M]``.  ``dones[t]`` marks that step ``t``
    ended an episode; a stretch whose last step is not done is a partial episode.
    """
    rewards: np.ndarray
    supply: np.ndarray
    demand: np.ndarray
    dones: np.ndarray
    observations: np.ndarray | None = None
    actions: np.ndarray | None = None
    log_probs: np.ndarray | None = None

    def __post_init__(self):
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        T = self.rewards.shape[0]
        self.supply = _as_tpm(self.supply, T)
        self.demand = _as_tpm(self.demand, T)
        if self.supply.shape != self.demand.shape:
            raise ValueError("supply and demand shapes differ")
        self.dones = np.asarray(self.dones, dtype=bool)
        if self.dones.shape != (T,):
            raise ValueError(f"dones must have shape ({T},), got {self.dones.shape}")
        if self.log_probs is not None:
            self.log_probs = np.asarray(self.log_probs, dtype=np.float64)
            if self.log_probs.shape != (T,) or not np.all(np.isfinite(self.log_probs)):
                raise ValueError("log_probs must be finite with one entry per step")

    @classmethod
    def episode(cls, rewards, supply, demand, **kw) -> "Trajectory":
        """A single complete episode (done on the last step)."""
        dones = np.zeros(len(rewards), dtype=bool)
        if len(rewards):
            dones[-1] = True
        return cls(rewards, supply, demand, dones, **kw)

    def __len__(self) -> int:
        return self.rewards.shape[0]

    @property
    def num_pairs(self) -> int:
        return self.supply.shape[1]

    @property
    def num_groups(self) -> int:
        return self.supply.shape[2]

    def episode_slices(self) -> list[tuple[slice, bool]]:
        """(slice, complete) for each episode segment in order."""
        out, start = [], 0
        for end in np.flatnonzero(self.dones):
            out.append((slice(start, end + 1), True))
            start = end + 1
        if start < len(self):
            out.append((slice(start, len(self)), False))
        return out


def _as_tpm(x, T: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(T, 1, 1) if T else x.reshape(0, 1, 1)
    elif x.ndim == 2:
        x = x[:, None, :]
    if x.ndim != 3 or x.shape[0] != T:
        raise ValueError(f"expected supply/demand of shape [T, M] or [T, P, M] with T={T}, got {x.shape}")
    return x


@dataclass(frozen=True)
class CumulativeSignals:
    eta_r: float
    eta_s: np.ndarray
    eta_d: np.ndarray
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "eta_s", np.asarray(self.eta_s, dtype=np.float64))
        object.__setattr__(self, "eta_d", np.asarray(self.eta_d, dtype=np.float64))

    @property
    def num_groups(self) -> int:
        return self.eta_s.shape[0]

    def to_json(self) -> str:
        return json.dumps({"eta_r": self.eta_r, "eta_s": self.eta_s.tolist(),
                           "eta_d": self.eta_d.tolist(), "gamma": self.gamma})

    @classmethod
    def from_json(cls, text: str) -> "CumulativeSignals":
        d = json.loads(text)
        return cls(d["eta_r"], d["eta_s"], d["eta_d"], d["gamma"])


def discounted_cumulate_pairs(trajectories: Trajectory | Sequence[Trajectory], gamma: float,
                              include_partial: bool = False) -> list[CumulativeSignals]:
    """Monte Carlo estimates of the discounted totals, one per supply/demand pair.

    Averages over complete episodes only; partial episodes are used only when
    ``include_partial`` is set.
    """
    if not 0 < gamma <= 1:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    if isinstance(trajectories, Trajectory):
        trajectories = [trajectories]
    if not trajectories:
        raise ValueError("empty trajectory batch")
    P, M = trajectories[0].num_pairs, trajectories[0].num_groups
    tot_r, tot_s, tot_d, n = 0.0, np.zeros((P, M)), np.zeros((P, M)), 0
    for traj in trajectories:
        for sl, complete in traj.episode_slices():
            if not (complete or include_partial):
                continue
            w = gamma ** np.arange(sl.stop - sl.start)
            tot_r += float(w @ traj.rewards[sl])
            tot_s += np.einsum("t,tpm->pm", w, traj.supply[sl])
            tot_d += np.einsum("t,tpm->pm", w, traj.demand[sl])
            n += 1
    if n == 0:
        raise ValueError("no complete episodes in batch")
    return [CumulativeSignals(tot_r / n, tot_s[p] / n, tot_d[p] / n, gamma) for p in range(P)]


def discounted_cumulate(trajectories: Trajectory | Sequence[Trajectory], gamma: float,
                        pair: int = 0, include_partial: bool = False) -> CumulativeSignals:
    return discounted_cumulate_pairs(trajectories, gamma, include_partial)[pair]


def benefit_rates_and_bias(c: CumulativeSignals, pair: int = 0) -> tuple[np.ndarray, float]:
    """Long-term benefit rate per group and the max-min gap between them."""
    for g, d in enumerate(c.eta_d):
        if not d > 0:
            raise DegenerateDemand(g, float(d), pair)
    rates = c.eta_s / c.eta_d
    return rates, float(rates.max() - rates.min())


def _logsumexp(x: np.ndarray) -> float:
    m = x.max()
    return float(m + np.log(np.exp(x - m).sum()))


def soft_bias(rates, beta_temp: float) -> float:
    """Smooth max minus smooth min of the rates at temperature ``beta_temp``."""
    z = np.asarray(rates, dtype=np.float64).ravel()
    if beta_temp <= 0:
        raise ValueError("beta_temp must be positive")
    if z.size == 0 or not np.all(np.isfinite(z)):
        raise ValueError("rates must be a non-empty finite array")
    if z.size == 1:
        return 0.0
    return (_logsumexp(beta_temp * z) + _logsumexp(-beta_temp * z)) / beta_temp


def _softmax(x: np.ndarray) -> np.ndarray:
    e = np.exp(x - x.max())
    return e / e.sum()


@dataclass(frozen=True)
class BiasSpec:
    mode: str
    alpha: float
    num_groups: int
    beta_temp: float = 20.0

    def __post_init__(self):
        if self.mode not in ("hard_two_group", "soft_multi_group"):
            raise ValueError(f"unknown bias mode {self.mode!r}")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.num_groups < 2:
            raise ValueError("need at least two groups")
        if self.mode == "hard_two_group" and self.num_groups != 2:
            raise ValueError("hard_two_group mode requires exactly 2 groups")
        if self.mode == "soft_multi_group" and not self.beta_temp > 0:
            raise ValueError("beta_temp must be positive")

    @classmethod
    def for_groups(cls, num_groups: int, alpha: float, beta_temp: float = 20.0) -> "BiasSpec":
        """Squared gap for two groups, squared soft bias beyond that."""
        mode = "hard_two_group" if num_groups == 2 else "soft_multi_group"
        return cls(mode, alpha, num_groups, beta_temp)


def _check_arity(z: np.ndarray, spec: BiasSpec):
    if z.shape != (spec.num_groups,):
        raise ValueError(f"expected {spec.num_groups} rates for {spec.mode}, got shape {z.shape}")


def bias_h(rates, spec: BiasSpec) -> float:
    """The penalised quantity: (z1 - z2)^2, or the squared soft bias."""
    z = np.asarray(rates, dtype=np.float64)
    _check_arity(z, spec)
    if spec.mode == "hard_two_group":
        return float((z[0] - z[1]) ** 2)
    return soft_bias(z, spec.beta_temp) ** 2


def bias_grad_h(rates, spec: BiasSpec) -> np.ndarray:
    """Partial derivatives of :func:`bias_h` with respect to each rate."""
    z = np.asarray(rates, dtype=np.float64)
    _check_arity(z, spec)
    if spec.mode == "hard_two_group":
        d = 2.0 * (z[0] - z[1])
        return np.array([d, -d])
    p = _softmax(spec.beta_temp * z)
    q = _softmax(-spec.beta_temp * z)
    return 2.0 * soft_bias(z, spec.beta_temp) * (p - q)


def multi_pair_bias(pairs: Sequence[CumulativeSignals]) -> list[tuple[np.ndarray, float]]:
    return [benefit_rates_and_bias(c, pair=i) for i, c in enumerate(pairs)]


def multi_pair_penalty(pairs: Sequence[CumulativeSignals], alpha: float) -> float:
    """alpha times the sum of squared per-pair biases."""
    return alpha * sum(b * b for _, b in multi_pair_bias(pairs))
