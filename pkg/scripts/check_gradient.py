#!/usr/bin/env python3
"""Compare the fairness-aware policy gradient with finite differences on random tabular SD-MDPs.

    python3 scripts/check_gradient.py --trials 20 --alpha 0 1 10
"""
from __future__ import annotations

import argparse

import numpy as np

from elbert.sdmdp import BiasSpec
from elbert.tabular import TabularSDMDP, fairness_policy_gradient, objective


def finite_difference(f, x, h=1e-6):
    g = np.zeros_like(x)
    for i in np.ndindex(x.shape):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--alpha", type=float, nargs="+", default=[0.0, 1.0, 10.0])
    p.add_argument("--zeta-reg", type=float, default=0.0)
    p.add_argument("--states", type=int, default=4)
    p.add_argument("--horizon", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    rng = np.random.default_rng(args.seed)
    for alpha in args.alpha:
        spec = BiasSpec.for_groups(2, alpha)
        worst = 0.0
        for _ in range(args.trials):
            mdp = TabularSDMDP.random(rng, num_states=args.states, horizon=args.horizon)
            theta = rng.normal(size=(args.states, 2))
            g = fairness_policy_gradient(mdp, theta, spec, args.zeta_reg)
            fd = finite_difference(lambda th: objective(mdp, th, spec, args.zeta_reg), theta)
            worst = max(worst, float(np.max(np.abs(g - fd) / np.maximum(np.abs(fd), 1e-8))))
        print(f"alpha {alpha:g}: worst relative error over {args.trials} MDPs = {worst:.2e}")


if __name__ == "__main__":
    main()
