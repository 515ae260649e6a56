"""Advantage estimation for reward, supply and demand, and the fairness-aware advantage.

Signals are packed column-wise into one ``[T, K]`` matrix with
``K = 1 + 2 * P * M``: column 0 is the reward, then the ``P * M`` supply
signals (pair-major), then the ``P * M`` demand signals.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.signal import lfilter

from .numerics import Mlp, MlpSpec
from .sdmdp import CumulativeSignals, DegenerateDemand, Trajectory

log = logging.getLogger(__name__)


def pack_signals(rewards: np.ndarray, supply: np.ndarray, demand: np.ndarray) -> np.ndarray:
    T = rewards.shape[0]
    return np.concatenate([rewards.reshape(T, 1), supply.reshape(T, -1), demand.reshape(T, -1)], axis=1)


def unpack_signals(x: np.ndarray, num_pairs: int, num_groups: int):
    """Inverse of :func:`pack_signals`: (reward [T], supply [T,P,M], demand [T,P,M])."""
    T, PM = x.shape[0], num_pairs * num_groups
    return (x[:, 0], x[:, 1:1 + PM].reshape(T, num_pairs, num_groups),
            x[:, 1 + PM:1 + 2 * PM].reshape(T, num_pairs, num_groups))


class ValueHeads:
    """One value network per signal: reward, each group's supply, each group's demand."""

    def __init__(self, nets: Sequence[Mlp], num_pairs: int, num_groups: int):
        if len(nets) != 1 + 2 * num_pairs * num_groups:
            raise ValueError("need 1 + 2*P*M value networks")
        dims = {n.spec.input_dim for n in nets}
        if len(dims) != 1:
            raise ValueError(f"value heads disagree on observation size: {sorted(dims)}")
        self.nets = list(nets)
        self.num_pairs, self.num_groups = num_pairs, num_groups

    @classmethod
    def init(cls, obs_dim: int, num_pairs: int, num_groups: int, rng: np.random.Generator,
             hidden_dims=(64, 64), activation: str = "tanh") -> "ValueHeads":
        spec = MlpSpec(obs_dim, tuple(hidden_dims), 1, activation)
        k = 1 + 2 * num_pairs * num_groups
        return cls([Mlp.init(spec, rng, output_gain=1.0) for _ in range(k)], num_pairs, num_groups)

    @property
    def reward_head(self) -> Mlp:
        return self.nets[0]

    def supply_head(self, group: int, pair: int = 0) -> Mlp:
        return self.nets[1 + pair * self.num_groups + group]

    def demand_head(self, group: int, pair: int = 0) -> Mlp:
        return self.nets[1 + (self.num_pairs + pair) * self.num_groups + group]

    def __len__(self) -> int:
        return len(self.nets)

    def values(self, obs: np.ndarray) -> np.ndarray:
        """``[T, K]`` value predictions for a ``[T, obs_dim]`` batch."""
        obs = np.atleast_2d(obs)
        return np.concatenate([net(obs) for net in self.nets], axis=1)


def gae(signals: np.ndarray, values: np.ndarray, dones: np.ndarray, gamma: float, lambda_gae: float,
        last_values: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimates, column by column.

    ``values[t]`` is V(s_t); ``last_values`` is V of the state after the final
    step, used only when that step is not terminal.  Returns (advantages,
    regression targets = advantages + values).
    """
    x = np.asarray(signals, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x, values = x[:, None], np.asarray(values, dtype=np.float64)[:, None]
        if last_values is not None:
            last_values = np.atleast_1d(last_values)
    if x.shape != values.shape or dones.shape != (x.shape[0],):
        raise ValueError(f"length mismatch: signals {x.shape}, values {values.shape}, dones {dones.shape}")
    if not (0 < gamma <= 1 and 0 <= lambda_gae <= 1):
        raise ValueError("gamma must be in (0, 1] and lambda in [0, 1]")
    T = x.shape[0]
    nxt = np.zeros_like(values)
    nxt[:-1] = values[1:]
    if T and last_values is not None:
        nxt[-1] = last_values
    not_done = (~dones.astype(bool)).astype(np.float64)[:, None]
    delta = x + gamma * nxt * not_done - values

    adv = np.empty_like(delta)
    start = 0
    # within an episode, A_t = delta_t + gamma*lambda*A_{t+1}
    for end in list(np.flatnonzero(dones) + 1) + [T]:
        if end > start:
            seg = delta[start:end][::-1]
            adv[start:end] = lfilter([1.0], [1.0, -gamma * lambda_gae], seg, axis=0)[::-1]
        start = end
    targets = adv + values
    if squeeze:
        return adv[:, 0], targets[:, 0]
    return adv, targets


@dataclass
class AdvantageEstimate:
    a_r: np.ndarray        # [T]
    a_s: np.ndarray        # [T, P, M]
    a_d: np.ndarray        # [T, P, M]
    targets: np.ndarray    # [T, K]


def estimate_advantages(traj: Trajectory, heads: ValueHeads, gamma: float, lambda_gae: float,
                        bootstrap_obs: np.ndarray | None = None,
                        rewards: np.ndarray | None = None) -> AdvantageEstimate:
    """GAE for every signal of ``traj`` using the current value heads.

    ``rewards`` optionally replaces the trajectory's rewards (shaped rewards).
    """
    if traj.observations is None or len(traj.observations) != len(traj):
        raise ValueError("trajectory observations must be present, one per step")
    r = traj.rewards if rewards is None else np.asarray(rewards, dtype=np.float64)
    if r.shape != traj.rewards.shape:
        raise ValueError("rewards length mismatch")
    x = pack_signals(r, traj.supply, traj.demand)
    values = heads.values(traj.observations)
    last = heads.values(bootstrap_obs)[0] if bootstrap_obs is not None else None
    adv, targets = gae(x, values, traj.dones, gamma, lambda_gae, last)
    a_r, a_s, a_d = unpack_signals(adv, traj.num_pairs, traj.num_groups)
    return AdvantageEstimate(a_r, a_s, a_d, targets)


def fairness_correction(a_s: np.ndarray, a_d: np.ndarray, c: CumulativeSignals, grads_h: np.ndarray,
                        demand_floor: float | None = None, pair: int = 0) -> np.ndarray:
    """sum_g dh/dz_g * (A^S_g / eta^D_g - eta^S_g * A^D_g / (eta^D_g)^2), per step."""
    a_s = np.asarray(a_s, dtype=np.float64)
    a_d = np.asarray(a_d, dtype=np.float64)
    eta_d = c.eta_d.copy()
    low = ~(eta_d > (demand_floor or 0.0))
    if np.any(low):
        g = int(np.flatnonzero(low)[0])
        if demand_floor is None:
            raise DegenerateDemand(g, float(eta_d[g]), pair)
        log.warning("cumulative demand of group %d (pair %d) is %g; clamping to %g",
                    g, pair, eta_d[g], demand_floor)
        eta_d = np.maximum(eta_d, demand_floor)
    coef_s = grads_h / eta_d
    coef_d = grads_h * c.eta_s / eta_d ** 2
    return a_s @ coef_s - a_d @ coef_d


def fairness_aware_advantage(a_r, a_s, a_d, c: CumulativeSignals | Sequence[CumulativeSignals],
                             grads_h, alpha: float, demand_floor: float | None = None) -> np.ndarray:
    """A_t - alpha * sum over groups (and supply/demand pairs) of the rate-gradient terms.

    Single pair: ``a_s``/``a_d`` are ``[T, M]``, ``c`` one :class:`CumulativeSignals`
    and ``grads_h`` ``[M]``.  Several pairs: ``[T, P, M]``, a list of ``P``
    cumulants and ``[P, M]`` gradients.
    """
    a_r = np.asarray(a_r, dtype=np.float64)
    a_s = np.asarray(a_s, dtype=np.float64)
    if isinstance(c, CumulativeSignals):
        corr = fairness_correction(a_s, a_d, c, np.asarray(grads_h, dtype=np.float64), demand_floor)
    else:
        a_d = np.asarray(a_d, dtype=np.float64)
        corr = sum(fairness_correction(a_s[:, p], a_d[:, p], cp, np.asarray(grads_h[p]), demand_floor, p)
                   for p, cp in enumerate(c))
    out = a_r - alpha * corr
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("fairness-aware advantage is not finite")
    return out


def demand_regularized_advantage(a_fair, a_d_target, zeta_reg: float) -> np.ndarray:
    """Add ``zeta_reg`` times the designated group's demand advantage."""
    a_fair = np.asarray(a_fair, dtype=np.float64)
    a_d_target = np.asarray(a_d_target, dtype=np.float64)
    if a_fair.shape != a_d_target.shape:
        raise ValueError(f"shape mismatch {a_fair.shape} vs {a_d_target.shape}")
    return a_fair + zeta_reg * a_d_target


def normalize(a: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    if a.size < 2:
        return a - a.mean()
    return (a - a.mean()) / (a.std() + eps)


@dataclass
class FairnessAdvantageBatch:
    a_r: np.ndarray
    a_s: np.ndarray
    a_d: np.ndarray
    a_fair: np.ndarray
    mean: float
    std: float

    @classmethod
    def assemble(cls, a_r, a_s, a_d, a_fair) -> "FairnessAdvantageBatch":
        return cls(a_r, a_s, a_d, a_fair, float(np.mean(a_fair)), float(np.std(a_fair)))

    def normalized(self) -> np.ndarray:
        return normalize(self.a_fair)
