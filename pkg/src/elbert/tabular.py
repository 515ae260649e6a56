"""Small finite-horizon SD-MDPs solved exactly by dynamic programming.

Used to check the fairness-aware policy gradient against the true gradient of
the objective: advantages here are exact (no sampling, no value networks).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .advantage import demand_regularized_advantage, fairness_aware_advantage
from .sdmdp import BiasSpec, CumulativeSignals, bias_grad_h, bias_h


@dataclass
class TabularSDMDP:
    transitions: np.ndarray   # [S, A, S]
    rewards: np.ndarray       # [S, A]
    supply: np.ndarray        # [S, A, M]
    demand: np.ndarray        # [S, A, M]
    initial: np.ndarray       # [S]
    horizon: int
    gamma: float = 1.0

    @classmethod
    def random(cls, rng: np.random.Generator, num_states: int = 4, num_actions: int = 2,
               num_groups: int = 2, horizon: int = 4, gamma: float = 0.9) -> "TabularSDMDP":
        P = rng.dirichlet(np.ones(num_states), size=(num_states, num_actions))
        R = rng.normal(size=(num_states, num_actions))
        demand = rng.uniform(0.2, 1.0, size=(num_states, num_actions, num_groups))
        supply = demand * rng.uniform(0.0, 1.0, size=demand.shape)
        mu = rng.dirichlet(np.ones(num_states))
        return cls(P, R, supply, demand, mu, horizon, gamma)

    @property
    def num_states(self) -> int:
        return self.rewards.shape[0]

    @property
    def num_actions(self) -> int:
        return self.rewards.shape[1]

    @property
    def num_groups(self) -> int:
        return self.supply.shape[2]

    def signal_table(self) -> np.ndarray:
        """``[S, A, K]`` with reward, supply per group, demand per group."""
        return np.concatenate([self.rewards[..., None], self.supply, self.demand], axis=2)


def softmax_policy(theta: np.ndarray) -> np.ndarray:
    z = theta - theta.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def exact_q_values(mdp: TabularSDMDP, pi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Backward recursion; Q is ``[H, S, A, K]`` and V is ``[H + 1, S, K]``."""
    x = mdp.signal_table()
    H, S, A, K = mdp.horizon, mdp.num_states, mdp.num_actions, x.shape[2]
    Q = np.zeros((H, S, A, K))
    V = np.zeros((H + 1, S, K))
    for t in range(H - 1, -1, -1):
        Q[t] = x + mdp.gamma * np.einsum("sap,pk->sak", mdp.transitions, V[t + 1])
        V[t] = np.einsum("sa,sak->sk", pi, Q[t])
    return Q, V


def state_occupancy(mdp: TabularSDMDP, pi: np.ndarray) -> np.ndarray:
    """``d[t, s]`` = P(s_t = s), undiscounted."""
    d = np.zeros((mdp.horizon, mdp.num_states))
    d[0] = mdp.initial
    for t in range(1, mdp.horizon):
        d[t] = np.einsum("s,sa,sap->p", d[t - 1], pi, mdp.transitions)
    return d


def cumulants(mdp: TabularSDMDP, theta: np.ndarray) -> CumulativeSignals:
    _, V = exact_q_values(mdp, softmax_policy(theta))
    eta = mdp.initial @ V[0]
    M = mdp.num_groups
    return CumulativeSignals(float(eta[0]), eta[1:1 + M], eta[1 + M:], mdp.gamma)


def objective(mdp: TabularSDMDP, theta: np.ndarray, spec: BiasSpec, zeta_reg: float = 0.0,
              reg_group: int = 0) -> float:
    """eta - alpha * h(rates) + zeta_reg * eta^D_{reg_group}."""
    c = cumulants(mdp, theta)
    return c.eta_r - spec.alpha * bias_h(c.eta_s / c.eta_d, spec) + zeta_reg * float(c.eta_d[reg_group])


def fairness_policy_gradient(mdp: TabularSDMDP, theta: np.ndarray, spec: BiasSpec, zeta_reg: float = 0.0,
                             reg_group: int = 0) -> np.ndarray:
    """E[sum_t gamma^t grad log pi(a_t|s_t) * A^fair_t] with exact advantages."""
    pi = softmax_policy(theta)
    Q, V = exact_q_values(mdp, pi)
    d = state_occupancy(mdp, pi)
    H, S, A = mdp.horizon, mdp.num_states, mdp.num_actions
    M = mdp.num_groups
    eta = mdp.initial @ V[0]
    c = CumulativeSignals(float(eta[0]), eta[1:1 + M], eta[1 + M:], mdp.gamma)
    dh = bias_grad_h(c.eta_s / c.eta_d, spec)

    adv = (Q - V[:H, :, None, :]).reshape(H * S * A, -1)
    a_fair = fairness_aware_advantage(adv[:, 0], adv[:, 1:1 + M], adv[:, 1 + M:], c, dh, spec.alpha)
    if zeta_reg:
        a_fair = demand_regularized_advantage(a_fair, adv[:, 1 + M + reg_group], zeta_reg)
    a_fair = a_fair.reshape(H, S, A)

    # d log pi(a|s) / d theta[s, b] = 1[a == b] - pi(b|s)
    weight = (mdp.gamma ** np.arange(H))[:, None] * d                      # [H, S]
    baseline = np.einsum("sa,hsa->hs", pi, a_fair)
    per_step = pi[None] * (a_fair - baseline[..., None])                    # [H, S, A]
    return np.einsum("hs,hsa->sa", weight, per_step)
