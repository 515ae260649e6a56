from __future__ import annotations

import numpy as np

from ..envs.base import ActionSpace
from ..numerics import (Mlp, MlpSpec, Tensor, categorical_policy, forward, largest_remainder,
                        multinomial_policy)
from ..numerics import tensor as T
from ..numerics.distributions import log_softmax, multinomial_log_prob


class Policy:
    """Categorical or unit-allocation policy with an MLP producing the logits."""

    def __init__(self, net: Mlp, action_space: ActionSpace):
        if net.spec.output_dim != action_space.n:
            raise ValueError(f"policy outputs {net.spec.output_dim} logits, action space needs {action_space.n}")
        self.net = net
        self.action_space = action_space

    @classmethod
    def init(cls, obs_dim: int, action_space: ActionSpace, rng: np.random.Generator,
             hidden_dims=(64, 64), activation: str = "tanh") -> "Policy":
        spec = MlpSpec(obs_dim, tuple(hidden_dims), action_space.n, activation)
        return cls(Mlp.init(spec, rng, output_gain=0.01), action_space)

    def logits(self, obs: np.ndarray) -> np.ndarray:
        return self.net(np.atleast_2d(obs))

    def act(self, obs: np.ndarray, rng: np.random.Generator, greedy: bool = False):
        """Return (action, log-prob) for a single observation."""
        logits = self.logits(obs)[0]
        if self.action_space.kind == "allocation":
            if greedy:
                logp = log_softmax(logits)
                alloc = largest_remainder(self.action_space.total, np.exp(logp))
                return alloc, float(multinomial_log_prob(logp, alloc))
            alloc, lp, _ = multinomial_policy(logits, self.action_space.total, rng)
            return alloc, lp
        if greedy:
            a = int(np.argmax(logits))
            return a, float(log_softmax(logits)[a])
        a, lp, _ = categorical_policy(logits, rng)
        return a, lp

    def log_prob(self, obs: np.ndarray, actions: np.ndarray) -> np.ndarray:
        logp = log_softmax(self.logits(obs))
        if self.action_space.kind == "allocation":
            return multinomial_log_prob(logp, actions)
        return logp[np.arange(len(actions)), np.asarray(actions, dtype=np.int64)]

    def graph(self, leaves: dict[str, Tensor], obs: np.ndarray, actions: np.ndarray) -> tuple[Tensor, Tensor]:
        """Graph-recorded (log-prob per sample, entropy per sample)."""
        logits = forward(self.net.spec, leaves, Tensor(obs))
        logp_all = T.log_softmax(logits)
        if self.action_space.kind == "allocation":
            alloc = np.asarray(actions, dtype=np.float64)
            const = multinomial_log_prob(np.zeros_like(alloc), alloc)
            logp = T.add(T.tsum(T.mul(logp_all, alloc), axis=1), const)
        else:
            logp = T.gather(logp_all, actions)
        entropy = T.neg(T.tsum(T.mul(T.exp(logp_all), logp_all), axis=1))
        return logp, entropy
