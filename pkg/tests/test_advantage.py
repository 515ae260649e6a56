import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elbert.advantage import (FairnessAdvantageBatch, ValueHeads, demand_regularized_advantage,
                              estimate_advantages, fairness_aware_advantage, gae, normalize, pack_signals,
                              unpack_signals)
from elbert.numerics import Mlp, MlpSpec
from elbert.sdmdp import BiasSpec, CumulativeSignals, DegenerateDemand, Trajectory, bias_grad_h
from elbert.tabular import TabularSDMDP, fairness_policy_gradient, objective
from oracles import central_difference, gae_quadratic

seeds = st.integers(0, 10**6)


def test_gae_lambda_one_is_monte_carlo_return():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    adv, tgt = gae(x, np.zeros(4), np.array([0, 0, 0, 1], bool), 1.0, 1.0)
    np.testing.assert_array_equal(adv, [10, 9, 7, 4])
    np.testing.assert_array_equal(tgt, adv)


def test_gae_lambda_zero_is_td_residual():
    x, v = np.array([1.0, 0.5, 2.0]), np.array([0.3, -0.2, 0.7])
    adv, _ = gae(x, v, np.array([0, 0, 1], bool), 0.9, 0.0)
    np.testing.assert_allclose(adv, [1 + 0.9 * -0.2 - 0.3, 0.5 + 0.9 * 0.7 + 0.2, 2.0 - 0.7], rtol=1e-15)


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(1, 30), st.floats(0.5, 1.0), st.floats(0.0, 1.0), st.booleans())
def test_gae_matches_quadratic_oracle(seed, T, gamma, lam, bootstrap):
    rng = np.random.default_rng(seed)
    x, v = rng.normal(size=T), rng.normal(size=T)
    dones = rng.uniform(size=T) < 0.2
    last = float(rng.normal()) if bootstrap else None
    adv, tgt = gae(x, v, dones, gamma, lam, last)
    ref = gae_quadratic(x, v, dones, gamma, lam, last or 0.0)
    np.testing.assert_allclose(adv, ref, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(tgt, ref + v, rtol=1e-12, atol=1e-12)


def test_gae_columns_are_independent():
    rng = np.random.default_rng(0)
    x, v = rng.normal(size=(7, 3)), rng.normal(size=(7, 3))
    dones = np.array([0, 0, 1, 0, 0, 0, 0], bool)
    adv, _ = gae(x, v, dones, 0.9, 0.95, v[0])
    for k in range(3):
        np.testing.assert_allclose(adv[:, k], gae(x[:, k], v[:, k], dones, 0.9, 0.95, v[0, k])[0], rtol=1e-14)


def test_gae_rejects_bad_inputs():
    with pytest.raises(ValueError, match="length"):
        gae(np.zeros(3), np.zeros(4), np.zeros(3, bool), 0.9, 0.9)
    with pytest.raises(ValueError):
        gae(np.zeros(3), np.zeros(3), np.zeros(3, bool), 0.0, 0.9)


def test_pack_unpack_round_trip():
    rng = np.random.default_rng(1)
    r, s, d = rng.normal(size=5), rng.normal(size=(5, 2, 3)), rng.normal(size=(5, 2, 3))
    r2, s2, d2 = unpack_signals(pack_signals(r, s, d), 2, 3)
    np.testing.assert_array_equal(r2, r)
    np.testing.assert_array_equal(s2, s)
    np.testing.assert_array_equal(d2, d)


def test_value_heads_layout_and_estimate():
    rng = np.random.default_rng(0)
    heads = ValueHeads.init(3, 1, 2, rng, hidden_dims=(8,))
    assert len(heads) == 5
    assert heads.demand_head(1) is heads.nets[4] and heads.supply_head(0) is heads.nets[1]
    with pytest.raises(ValueError, match="observation"):
        ValueHeads([Mlp.init(MlpSpec(3, (4,), 1), rng), Mlp.init(MlpSpec(2, (4,), 1), rng),
                    *[Mlp.init(MlpSpec(3, (4,), 1), rng) for _ in range(3)]], 1, 2)
    obs = rng.normal(size=(6, 3))
    traj = Trajectory(rng.normal(size=6), rng.uniform(size=(6, 2)), np.ones((6, 2)),
                      [0, 0, 1, 0, 0, 0], observations=obs)
    est = estimate_advantages(traj, heads, 0.9, 0.95, bootstrap_obs=rng.normal(size=3))
    assert est.a_r.shape == (6,) and est.a_s.shape == (6, 1, 2) and est.targets.shape == (6, 5)
    v = heads.values(obs)
    ref = gae_quadratic(traj.supply[:, 0, 1], v[:, 2], traj.dones, 0.9, 0.95, 0.0)
    # the last step is non-terminal and bootstraps, so compare the first (complete) episode
    np.testing.assert_allclose(est.a_s[:3, 0, 1], ref[:3], rtol=1e-12, atol=1e-12)
    with pytest.raises(ValueError, match="observations"):
        estimate_advantages(Trajectory.episode([1.0], [[0, 0]], [[1, 1]]), heads, 0.9, 0.9)


def test_fairness_advantage_hand_example():
    c = CumulativeSignals(0.0, np.array([1.0, 1.0]), np.array([2.0, 2.0]), 1.0)
    out = fairness_aware_advantage([1.0], [[0.5, 0.0]], [[0.2, 0.0]], c, np.array([0.4, 0.0]), 1.0)
    assert out[0] == pytest.approx(0.92, rel=1e-15)


def test_alpha_zero_or_zero_side_advantages_collapse():
    rng = np.random.default_rng(0)
    a_r = rng.normal(size=8)
    c = CumulativeSignals(0.0, np.array([0.3, 0.8]), np.array([1.0, 2.0]), 0.9)
    g = np.array([0.7, -0.7])
    np.testing.assert_array_equal(fairness_aware_advantage(a_r, rng.normal(size=(8, 2)),
                                                           rng.normal(size=(8, 2)), c, g, 0.0), a_r)
    np.testing.assert_array_equal(fairness_aware_advantage(a_r, np.zeros((8, 2)), np.zeros((8, 2)), c, g, 1e5),
                                  a_r)


@settings(max_examples=50)
@given(seeds, st.floats(-5, 5), st.floats(-5, 5))
def test_fairness_advantage_is_linear(seed, a, b):
    rng = np.random.default_rng(seed)
    c = CumulativeSignals(0.0, rng.uniform(0.1, 1, 2), rng.uniform(1, 2, 2), 0.9)
    g = rng.normal(size=2)
    x = [rng.normal(size=5), rng.normal(size=(5, 2)), rng.normal(size=(5, 2))]
    y = [rng.normal(size=5), rng.normal(size=(5, 2)), rng.normal(size=(5, 2))]
    mix = [a * u + b * v for u, v in zip(x, y)]
    lhs = fairness_aware_advantage(*mix, c, g, 3.0)
    rhs = a * fairness_aware_advantage(*x, c, g, 3.0) + b * fairness_aware_advantage(*y, c, g, 3.0)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-9)


@settings(max_examples=50)
@given(seeds)
def test_group_swap_leaves_advantage_invariant(seed):
    rng = np.random.default_rng(seed)
    spec = BiasSpec.for_groups(2, 1.0)
    s, d = rng.uniform(0.1, 1, 2), rng.uniform(1, 2, 2)
    a_r, a_s, a_d = rng.normal(size=6), rng.normal(size=(6, 2)), rng.normal(size=(6, 2))
    c = CumulativeSignals(0.0, s, d, 0.9)
    c_sw = CumulativeSignals(0.0, s[::-1].copy(), d[::-1].copy(), 0.9)
    g, g_sw = bias_grad_h(s / d, spec), bias_grad_h(s[::-1] / d[::-1], spec)
    np.testing.assert_allclose(g_sw, g[::-1])
    out = fairness_aware_advantage(a_r, a_s, a_d, c, g, 7.0)
    out_sw = fairness_aware_advantage(a_r, a_s[:, ::-1], a_d[:, ::-1], c_sw, g_sw, 7.0)
    np.testing.assert_allclose(out_sw, out, rtol=1e-12, atol=1e-12)


def test_multi_pair_sums_pairs():
    rng = np.random.default_rng(2)
    a_r, a_s, a_d = rng.normal(size=4), rng.normal(size=(4, 2, 2)), rng.normal(size=(4, 2, 2))
    cs = [CumulativeSignals(0.0, rng.uniform(0.1, 1, 2), rng.uniform(1, 2, 2), 0.9) for _ in range(2)]
    g = rng.normal(size=(2, 2))
    both = fairness_aware_advantage(a_r, a_s, a_d, cs, g, 2.0)
    p0 = fairness_aware_advantage(a_r, a_s[:, 0], a_d[:, 0], cs[0], g[0], 2.0)
    p1 = fairness_aware_advantage(np.zeros(4), a_s[:, 1], a_d[:, 1], cs[1], g[1], 2.0)
    np.testing.assert_allclose(both, p0 + p1, rtol=1e-12)


def test_degenerate_demand_and_floor(caplog):
    c = CumulativeSignals(0.0, np.array([0.0, 0.5]), np.array([0.0, 1.0]), 0.9)
    args = ([1.0], [[1.0, 0.0]], [[1.0, 0.0]], c, np.array([1.0, -1.0]), 1.0)
    with pytest.raises(DegenerateDemand):
        fairness_aware_advantage(*args)
    with caplog.at_level(logging.WARNING):
        out = fairness_aware_advantage(*args, demand_floor=1e-8)
    assert "clamping" in caplog.text
    assert out[0] == pytest.approx(1.0 - 1.0 / 1e-8)


def test_demand_regularization_examples():
    a = np.array([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(demand_regularized_advantage(a, [0.0, 0.3, 0.0], 0.0), a)
    np.testing.assert_allclose(demand_regularized_advantage(a, [0.0, 0.3, 0.0], 2.0), [1.0, 2.6, 3.0])
    np.testing.assert_array_equal(demand_regularized_advantage(a, np.zeros(3), 5.0), a)
    with pytest.raises(ValueError):
        demand_regularized_advantage(a, np.zeros(2), 1.0)


def test_normalize_and_batch_metadata():
    x = np.array([1.0, 2.0, 3.0, 6.0])
    n = normalize(x)
    assert abs(n.mean()) < 1e-15 and n.std() == pytest.approx(1.0, rel=1e-6)
    assert normalize(np.array([5.0]))[0] == 0.0
    b = FairnessAdvantageBatch.assemble(x, x[:, None], x[:, None], x)
    assert b.mean == 3.0 and b.std == pytest.approx(x.std())
    np.testing.assert_array_equal(b.normalized(), n)


@settings(max_examples=15, deadline=None)
@given(seeds, st.sampled_from([0.0, 1.0, 10.0]), st.sampled_from([0.0, 0.5]))
def test_exact_fairness_gradient_matches_finite_differences(seed, alpha, zeta_reg):
    rng = np.random.default_rng(seed)
    mdp = TabularSDMDP.random(rng, num_states=3, horizon=3)
    theta = rng.normal(size=(3, 2))
    spec = BiasSpec.for_groups(2, alpha)
    fd = central_difference(lambda th: objective(mdp, th, spec, zeta_reg), theta, 1e-6)
    g = fairness_policy_gradient(mdp, theta, spec, zeta_reg)
    assert np.all(np.abs(g - fd) <= 1e-4 * np.maximum(np.abs(fd), 1e-2))
