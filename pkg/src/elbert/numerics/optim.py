"""Adam and plain gradient ascent/descent over named parameter arrays."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import NonFiniteError, ShapeError


@dataclass
class AdamState:
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon_stab: float = 1e-8
    step_count: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def zeros_like(cls, params: dict[str, np.ndarray], learning_rate: float, **kw) -> "AdamState":
        return cls(learning_rate, first_moment={k: np.zeros_like(v) for k, v in params.items()},
                   second_moment={k: np.zeros_like(v) for k, v in params.items()}, **kw)


def _check(params, grads):
    if params.keys() != grads.keys():
        raise ShapeError(f"parameter/gradient names differ: {sorted(params)} vs {sorted(grads)}")
    for k in params:
        if params[k].shape != grads[k].shape:
            raise ShapeError(f"{k}: parameter shape {params[k].shape} vs gradient {grads[k].shape}")
        if not np.all(np.isfinite(grads[k])):
            raise NonFiniteError(f"non-finite gradient for {k}")


def adam_step(state: AdamState, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]
              ) -> tuple[dict[str, np.ndarray], AdamState]:
    """One bias-corrected Adam descent step. Inputs are not mutated."""
    _check(params, grads)
    t = state.step_count + 1
    b1, b2 = state.beta1, state.beta2
    m_new, v_new, p_new = {}, {}, {}
    for k, g in grads.items():
        m = state.first_moment.get(k, np.zeros_like(g))
        v = state.second_moment.get(k, np.zeros_like(g))
        if m.shape != g.shape:
            raise ShapeError(f"{k}: moment shape {m.shape} vs gradient {g.shape}")
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1 ** t)
        v_hat = v / (1 - b2 ** t)
        p_new[k] = params[k] - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon_stab)
        m_new[k], v_new[k] = m, v
    return p_new, AdamState(state.learning_rate, b1, b2, state.epsilon_stab, t, m_new, v_new)


def sgd_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], learning_rate: float
             ) -> dict[str, np.ndarray]:
    _check(params, grads)
    return {k: params[k] - learning_rate * grads[k] for k in params}


def clip_by_global_norm(grads: dict[str, np.ndarray], max_norm: float | None) -> dict[str, np.ndarray]:
    if max_norm is None or max_norm <= 0:
        return grads
    norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if norm <= max_norm:
        return grads
    scale = max_norm / (norm + 1e-12)
    return {k: g * scale for k, g in grads.items()}
