from __future__ import annotations

from .attention import AttentionConfig, AttentionEnv, AttentionState, attention_step
from .base import ActionSpace, SDEnv
from .infectious import InfectiousConfig, InfectiousEnv, InfectiousState, infectious_step
from .lending import LendingConfig, LendingEnv, LendingState, lending_step
from .toy import ToyConfig, ToyFairnessEnv

ENV_NAMES = ("lending", "infectious_original", "infectious_harder",
             "attention_original", "attention_harder", "toy")


def make_config(name: str, overrides: dict | None = None):
    """Environment config for ``name`` with keyword overrides applied."""
    kw = dict(overrides or {})
    for key in ("initial_distributions", "repay_prob", "community_sizes",
                "initial_rates", "decay_rates", "growth_rates"):
        if key in kw and kw[key] is not None:
            kw[key] = tuple(tuple(x) if isinstance(x, list) else x for x in kw[key])
    if name == "lending":
        return LendingConfig(**kw)
    if name == "infectious_original":
        return InfectiousConfig(**kw)
    if name == "infectious_harder":
        kw.setdefault("resusceptible_prob", 0.2)
        return InfectiousConfig(**kw)
    if name == "attention_original":
        return AttentionConfig.original(**kw)
    if name == "attention_harder":
        return AttentionConfig.harder(**kw)
    if name == "toy":
        return ToyConfig(**kw)
    raise ValueError(f"unknown environment {name!r}; choose from {', '.join(ENV_NAMES)}")


def make_env(name: str, overrides: dict | None = None, seed: int | None = None) -> SDEnv:
    cfg = make_config(name, overrides)
    if name == "lending":
        return LendingEnv(cfg, seed)
    if name.startswith("infectious"):
        return InfectiousEnv(cfg, seed)
    if name.startswith("attention"):
        return AttentionEnv(cfg, seed)
    return ToyFairnessEnv(cfg, seed)


__all__ = [
    "ENV_NAMES", "ActionSpace", "AttentionConfig", "AttentionEnv", "AttentionState", "InfectiousConfig",
    "InfectiousEnv", "InfectiousState", "LendingConfig", "LendingEnv", "LendingState", "SDEnv", "ToyConfig",
    "ToyFairnessEnv", "attention_step", "infectious_step", "lending_step", "make_config", "make_env",
]
