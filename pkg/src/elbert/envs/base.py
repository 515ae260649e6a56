from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..sdmdp import SupplyDemandSignals


@dataclass(frozen=True)
class ActionSpace:
    """``discrete``: pick one of ``n`` actions.  ``allocation``: split ``total``
    units over ``n`` groups."""
    kind: str
    n: int
    total: int = 1


class SDEnv:
    """Base class for supply-demand environments.

    Subclasses own their RNG and implement ``reset`` / ``step`` plus
    ``state_dict`` / ``load_state_dict`` for checkpointing.
    """
    name = "base"
    num_groups: int
    num_pairs: int = 1
    obs_dim: int
    action_space: ActionSpace
    episode_length: int

    def __init__(self, seed: int | None = None):
        self.rng = np.random.default_rng(seed)

    def reset(self) -> np.ndarray:
        raise NotImplementedError

    def step(self, action) -> tuple[np.ndarray, SupplyDemandSignals, bool]:
        raise NotImplementedError

    def observation(self) -> np.ndarray:
        raise NotImplementedError

    def state_dict(self) -> dict:
        return {"rng": self.rng.bit_generator.state, "env": self._get_state()}

    def load_state_dict(self, d: dict) -> None:
        self.rng.bit_generator.state = d["rng"]
        self._set_state(d["env"])

    def _get_state(self) -> dict:
        raise NotImplementedError

    def _set_state(self, d: dict) -> None:
        raise NotImplementedError


def one_hot(i: int, n: int) -> np.ndarray:
    v = np.zeros(n)
    v[i] = 1.0
    return v


def hex_list(a) -> list[str]:
    return [float(x).hex() for x in np.asarray(a, dtype=np.float64).ravel()]


def from_hex(h: list[str], shape=None) -> np.ndarray:
    a = np.array([float.fromhex(x) for x in h])
    return a.reshape(shape) if shape is not None else a
