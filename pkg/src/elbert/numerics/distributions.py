"""Action distributions: categorical, and a multinomial over attention units."""
from __future__ import annotations

import numpy as np
from scipy.special import gammaln

from .tensor import NonFiniteError


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def sample_index(p: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw from unnormalised non-negative weights ``p``."""
    cdf = np.cumsum(p)
    i = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(i, len(cdf) - 1)


def categorical_policy(logits, rng: np.random.Generator) -> tuple[int, float, float]:
    """Sample from ``softmax(logits)``; return (action, log-prob, entropy)."""
    logits = np.asarray(logits, dtype=np.float64).ravel()
    if logits.size == 0:
        raise ValueError("categorical_policy needs at least one logit")
    if not np.all(np.isfinite(logits)):
        raise NonFiniteError("non-finite logits")
    logp = log_softmax(logits)
    p = np.exp(logp)
    action = sample_index(p, rng)
    entropy = float(-np.sum(p * logp))
    return action, float(logp[action]), entropy


def categorical_entropy(logits: np.ndarray) -> np.ndarray:
    logp = log_softmax(logits)
    return -np.sum(np.exp(logp) * logp, axis=-1)


def largest_remainder(total: int, probs: np.ndarray) -> np.ndarray:
    """Round ``total * probs`` to integers summing exactly to ``total``."""
    raw = total * np.asarray(probs, dtype=np.float64)
    base = np.floor(raw).astype(np.int64)
    short = total - int(base.sum())
    if short > 0:
        # stable sort keeps lower group index first on ties
        order = np.argsort(-(raw - base), kind="stable")
        base[order[:short]] += 1
    return base


def multinomial_policy(logits, total: int, rng: np.random.Generator) -> tuple[np.ndarray, float, float]:
    """Distribute ``total`` units over groups, each unit i.i.d. ~ softmax(logits).

    Returns (allocation, log-prob of the allocation, per-unit categorical entropy).
    """
    logits = np.asarray(logits, dtype=np.float64).ravel()
    if not np.all(np.isfinite(logits)):
        raise NonFiniteError("non-finite logits")
    logp = log_softmax(logits)
    p = np.exp(logp)
    alloc = rng.multinomial(total, p / p.sum())
    return alloc, float(multinomial_log_prob(logp, alloc)), float(-np.sum(p * logp))


def multinomial_log_prob(logp: np.ndarray, alloc: np.ndarray) -> np.ndarray:
    alloc = np.asarray(alloc, dtype=np.float64)
    n = alloc.sum(axis=-1)
    coef = gammaln(n + 1) - gammaln(alloc + 1).sum(axis=-1)
    return coef + np.sum(alloc * logp, axis=-1)
