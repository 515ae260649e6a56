"""Vaccination on a two-group contact network (SIR dynamics, optional loss of immunity)."""
from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..sdmdp import SupplyDemandSignals
from .base import ActionSpace, SDEnv

SUSCEPTIBLE, INFECTED, RECOVERED = 0, 1, 2


def two_community_graph(sizes=(25, 25), p_in: float = 0.3, p_out: float = 0.05, seed: int = 0
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Random graph with dense communities; returns (adjacency, node groups)."""
    rng = np.random.default_rng(seed)
    groups = np.repeat(np.arange(len(sizes)), sizes)
    n = groups.size
    prob = np.where(groups[:, None] == groups[None, :], p_in, p_out)
    upper = np.triu(rng.random((n, n)) < prob, k=1)
    adj = (upper | upper.T).astype(np.int64)
    return adj, groups


def load_edge_list(path) -> tuple[np.ndarray, np.ndarray]:
    """Read ``#groups g0 g1 ...`` followed by one ``u v`` edge per line."""
    groups = None
    edges = []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            head = line.lstrip("#").split()
            if head and head[0].rstrip(":") == "groups":
                groups = np.array([int(x) for x in head[1:]], dtype=np.int64)
            continue
        u, v = line.split()[:2]
        edges.append((int(u), int(v)))
    if groups is None:
        raise ValueError(f"{path}: missing '#groups' header")
    n = groups.size
    adj = np.zeros((n, n), dtype=np.int64)
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"{path}: edge ({u}, {v}) references unknown node")
        if u != v:
            adj[u, v] = adj[v, u] = 1
    return adj, groups


@dataclass(frozen=True)
class InfectiousConfig:
    adjacency: np.ndarray | None = None
    groups: np.ndarray | None = None
    infection_rate: float = 0.1
    recovery_prob: float = 0.005
    resusceptible_prob: float = 0.0
    episode_length: int = 20
    community_sizes: tuple = (25, 25)
    p_in: float = 0.3
    p_out: float = 0.05
    graph_seed: int = 0
    edge_list: str | None = None

    def __post_init__(self):
        if self.adjacency is None:
            if self.edge_list:
                adj, groups = load_edge_list(self.edge_list)
            else:
                adj, groups = two_community_graph(self.community_sizes, self.p_in, self.p_out, self.graph_seed)
            object.__setattr__(self, "adjacency", adj)
            object.__setattr__(self, "groups", groups)
        groups = np.asarray(self.groups, dtype=np.int64)
        object.__setattr__(self, "groups", groups)
        if set(np.unique(groups)) != {0, 1}:
            raise ValueError("both groups must be non-empty and labelled 0/1")
        if not 0 < self.infection_rate <= 1:
            raise ValueError("infection_rate must lie in (0, 1]")

    @property
    def num_nodes(self) -> int:
        return int(self.groups.size)


def infection_probability(infected_neighbors, tau: float):
    return 1.0 - (1.0 - tau) ** np.asarray(infected_neighbors)


@dataclass
class InfectiousState:
    health: np.ndarray
    step_index: int = 0

    def copy(self) -> "InfectiousState":
        return replace(self, health=self.health.copy())


def infectious_reset(cfg: InfectiousConfig, rng: np.random.Generator) -> InfectiousState:
    health = np.full(cfg.num_nodes, SUSCEPTIBLE, dtype=np.int64)
    health[rng.integers(cfg.num_nodes)] = INFECTED
    return InfectiousState(health)


def infectious_observation(state: InfectiousState) -> np.ndarray:
    obs = np.zeros((state.health.size, 3))
    obs[np.arange(state.health.size), state.health] = 1.0
    return obs.ravel()


def infectious_step(state: InfectiousState, cfg: InfectiousConfig, action: int | None,
                    rng: np.random.Generator) -> tuple[InfectiousState, np.ndarray, SupplyDemandSignals]:
    """``action`` is a node index, or ``None`` / ``num_nodes`` for no vaccination."""
    n = cfg.num_nodes
    if action is not None and action == n:
        action = None
    if action is not None and not 0 <= action < n:
        raise ValueError(f"vaccination target {action} is not a node")
    h = state.health
    vaccinated = np.zeros(n, dtype=bool)
    if action is not None:
        vaccinated[action] = True

    # all transitions use the health state at the start of the step
    k = cfg.adjacency @ (h == INFECTED)
    u_infect, u_recover, u_resus = rng.random(n), rng.random(n), rng.random(n)
    new_inf = (h == SUSCEPTIBLE) & ~vaccinated & (u_infect < infection_probability(k, cfg.infection_rate))
    recover = (h == INFECTED) & ~vaccinated & (u_recover < cfg.recovery_prob)
    resus = (h == RECOVERED) & ~vaccinated & (u_resus < cfg.resusceptible_prob)

    nh = h.copy()
    nh[vaccinated & (h == SUSCEPTIBLE)] = RECOVERED
    nh[new_inf] = INFECTED
    nh[recover] = RECOVERED
    nh[resus] = SUSCEPTIBLE

    supply = np.zeros(2)
    if action is not None:
        supply[cfg.groups[action]] = 1.0
    demand = np.bincount(cfg.groups[new_inf], minlength=2).astype(np.float64)
    reward = float(np.mean(nh != INFECTED))
    nxt = InfectiousState(nh, state.step_index + 1)
    return nxt, infectious_observation(nxt), SupplyDemandSignals(reward, supply, demand)


class InfectiousEnv(SDEnv):
    def __init__(self, cfg: InfectiousConfig | None = None, seed: int | None = None):
        super().__init__(seed)
        self.cfg = cfg or InfectiousConfig()
        self.name = "infectious_harder" if self.cfg.resusceptible_prob > 0 else "infectious_original"
        self.num_groups = 2
        self.obs_dim = 3 * self.cfg.num_nodes
        # last action index means "vaccinate no one"
        self.action_space = ActionSpace("discrete", self.cfg.num_nodes + 1)
        self.episode_length = self.cfg.episode_length
        self.state = infectious_reset(self.cfg, self.rng)

    def reset(self) -> np.ndarray:
        self.state = infectious_reset(self.cfg, self.rng)
        return self.observation()

    def observation(self) -> np.ndarray:
        return infectious_observation(self.state)

    def step(self, action):
        self.state, obs, sig = infectious_step(self.state, self.cfg, int(action), self.rng)
        return obs, sig, self.state.step_index >= self.episode_length

    def _get_state(self) -> dict:
        return {"health": self.state.health.tolist(), "step_index": self.state.step_index}

    def _set_state(self, d: dict) -> None:
        self.state = InfectiousState(np.array(d["health"], dtype=np.int64), d["step_index"])
