"""PPO-clip training loop shared by ELBERT-PO and the three baselines.

The algorithms differ only in which advantage drives the clipped surrogate:

* ``elbert_po`` -- the fairness-aware advantage built from reward, supply and
  demand advantages and the current long-term benefit rates;
* ``g_ppo`` -- the plain reward advantage;
* ``r_ppo`` -- the reward advantage of a bias-shaped reward;
* ``a_ppo`` -- the reward advantage plus the running-bias adjustment.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..advantage import (ValueHeads, demand_regularized_advantage, fairness_aware_advantage, gae, normalize,
                         pack_signals, unpack_signals)
from ..envs.base import SDEnv
from ..numerics import AdamState, Tensor, adam_step, backward, clip_by_global_norm, forward
from ..numerics import tensor as T
from ..numerics.checkpoint import decode_adam, decode_array, decode_mlp, encode_adam, encode_array, encode_mlp
from ..sdmdp import BiasSpec, CumulativeSignals, DegenerateDemand, Trajectory, bias_grad_h, discounted_cumulate_pairs
from .baselines import HistoricalBiasTracker, a_ppo_adjusted_advantage, historical_bias_delta, r_ppo_shaped_reward
from .config import TrainerConfig
from .policy import Policy

log = logging.getLogger(__name__)


@dataclass
class Batch:
    traj: Trajectory
    last_obs: np.ndarray
    delta_before: np.ndarray   # running bias before step t
    delta_after: np.ndarray    # running bias including step t
    episode_returns: list


def ppo_clip_objective(logp: Tensor, entropy: Tensor, logp_old: np.ndarray, adv: np.ndarray,
                       clip_epsilon: float, entropy_coef: float) -> tuple[Tensor, dict]:
    """Mean clipped surrogate plus entropy bonus (to be maximised)."""
    ratio = T.exp(T.sub(logp, logp_old))
    surr = T.minimum(T.mul(ratio, adv), T.mul(T.clip(ratio, 1 - clip_epsilon, 1 + clip_epsilon), adv))
    obj = T.add(T.mean(surr), T.mul(T.mean(entropy), entropy_coef))
    stats = {"clip_fraction": float(np.mean(np.abs(ratio.data - 1) > clip_epsilon)),
             "entropy": float(entropy.data.mean())}
    return obj, stats


class Trainer:
    def __init__(self, cfg: TrainerConfig, env: SDEnv):
        cfg.validate()
        self.cfg = cfg
        self.env = env
        init_seed, act_seed = np.random.SeedSequence(cfg.seed).spawn(2)
        init_rng = np.random.default_rng(init_seed)
        self.rng = np.random.default_rng(act_seed)
        self.policy = Policy.init(env.obs_dim, env.action_space, init_rng, cfg.hidden_dims, cfg.activation)
        self.heads = ValueHeads.init(env.obs_dim, env.num_pairs, env.num_groups, init_rng,
                                     cfg.hidden_dims, cfg.activation)
        vlr = cfg.value_learning_rate or cfg.learning_rate
        self.policy_opt = AdamState.zeros_like(self.policy.net.params, cfg.learning_rate)
        self.head_opts = [AdamState.zeros_like(n.params, vlr) for n in self.heads.nets]
        self.bias_spec = BiasSpec.for_groups(env.num_groups, cfg.alpha, cfg.beta_temp)
        self.tracker = HistoricalBiasTracker.for_shape(env.num_pairs, env.num_groups)
        self.obs = env.reset()
        self.episode_return = 0.0
        self.env_steps = 0
        self.iteration = 0

    # rollout -----------------------------------------------------------------
    def collect(self) -> Batch:
        env, n = self.env, self.cfg.steps_per_iteration
        P, M = env.num_pairs, env.num_groups
        alloc = env.action_space.kind == "allocation"
        obs = np.empty((n, env.obs_dim))
        actions = np.empty((n, env.action_space.n) if alloc else n, dtype=np.int64)
        logp = np.empty(n)
        rewards = np.empty(n)
        supply = np.empty((n, P, M))
        demand = np.empty((n, P, M))
        dones = np.zeros(n, dtype=bool)
        before = np.empty(n)
        after = np.empty(n)
        returns = []
        for t in range(n):
            a, lp = self.policy.act(self.obs, self.rng)
            obs[t], actions[t], logp[t] = self.obs, a, lp
            next_obs, sig, done = env.step(a)
            rewards[t] = sig.reward
            supply[t] = sig.supply.reshape(P, M)
            demand[t] = sig.demand.reshape(P, M)
            before[t] = self.tracker.delta
            after[t] = historical_bias_delta(self.tracker, supply[t], demand[t])
            self.episode_return += sig.reward
            if done:
                dones[t] = True
                returns.append(self.episode_return)
                self.episode_return = 0.0
                self.tracker.reset()
                next_obs = env.reset()
            self.obs = next_obs
        self.env_steps += n
        traj = Trajectory(rewards, supply, demand, dones, observations=obs, actions=actions, log_probs=logp)
        return Batch(traj, self.obs.copy(), before, after, returns)

    # advantage assembly --------------------------------------------------------
    def cumulants(self, batch: Batch) -> list[CumulativeSignals]:
        try:
            return discounted_cumulate_pairs(batch.traj, self.cfg.gamma)
        except ValueError:
            log.warning("no complete episode in batch; estimating cumulants from partial episodes")
            return discounted_cumulate_pairs(batch.traj, self.cfg.gamma, include_partial=True)

    def floored(self, cums: list[CumulativeSignals]) -> tuple[list[CumulativeSignals], int]:
        out, hits = [], 0
        for p, c in enumerate(cums):
            low = ~(c.eta_d > self.cfg.demand_floor)
            if np.any(low):
                hits += int(low.sum())
                log.warning("iteration %d: cumulative demand %s (pair %d) below floor %g",
                            self.iteration, c.eta_d.tolist(), p, self.cfg.demand_floor)
                c = CumulativeSignals(c.eta_r, c.eta_s, np.maximum(c.eta_d, self.cfg.demand_floor), c.gamma)
            out.append(c)
        return out, hits

    def training_rewards(self, batch: Batch) -> np.ndarray:
        if self.cfg.algorithm == "r_ppo":
            rc = self.cfg.r_ppo
            return r_ppo_shaped_reward(batch.traj.rewards, batch.delta_after, rc.zeta1, rc.omega, rc.form)
        return batch.traj.rewards

    def assemble(self, a_r, a_s, a_d, cums, grads_h, batch: Batch) -> np.ndarray:
        cfg = self.cfg
        if cfg.algorithm == "elbert_po":
            a = fairness_aware_advantage(a_r, a_s, a_d, cums, grads_h, cfg.alpha)
            if cfg.demand_reg_zeta:
                a = demand_regularized_advantage(a, a_d[:, 0, cfg.demand_reg_group], cfg.demand_reg_zeta)
            return a
        if cfg.algorithm == "a_ppo":
            ac = cfg.a_ppo
            # no successor state at an episode end: treat the bias as unchanged
            nxt = np.where(batch.traj.dones, batch.delta_before, batch.delta_after)
            return a_ppo_adjusted_advantage(a_r, batch.delta_before, nxt, ac.beta1, ac.beta2, ac.omega)
        return a_r

    # updates -------------------------------------------------------------------
    def ppo_clip_update(self, obs, actions, logp_old, adv) -> dict:
        cfg = self.cfg
        with np.errstate(over="ignore"):
            ok = np.isfinite(np.exp(self.policy.log_prob(obs, actions) - logp_old))
        skipped = int((~ok).sum())
        if skipped:
            obs, actions, logp_old, adv = obs[ok], actions[ok], logp_old[ok], adv[ok]
        if len(adv) == 0:
            return {"skipped": skipped}
        leaves = self.policy.net.leaves()
        logp, ent = self.policy.graph(leaves, obs, actions)
        obj, stats = ppo_clip_objective(logp, ent, logp_old, adv, cfg.clip_epsilon, cfg.entropy_coef)
        names = list(leaves)
        grads = backward(T.neg(obj), [leaves[k] for k in names])
        grads = clip_by_global_norm(dict(zip(names, grads)), cfg.max_grad_norm)
        self.policy.net.params, self.policy_opt = adam_step(self.policy_opt, self.policy.net.params, grads)
        return {"policy_objective": float(obj.data), "skipped": skipped, **stats}

    def value_regression(self, obs, targets) -> float:
        total = 0.0
        x = Tensor(obs)
        for k, net in enumerate(self.heads.nets):
            leaves = net.leaves()
            pred = forward(net.spec, leaves, x)
            loss = T.mean(T.square(T.sub(pred, targets[:, k:k + 1])))
            names = list(leaves)
            grads = backward(loss, [leaves[n] for n in names])
            grads = clip_by_global_norm(dict(zip(names, grads)), self.cfg.max_grad_norm)
            net.params, self.head_opts[k] = adam_step(self.head_opts[k], net.params, grads)
            total += float(loss.data)
        return total

    def iterate(self) -> dict:
        """Collect one batch and run the epochs of minibatch updates on it."""
        cfg = self.cfg
        batch = self.collect()
        traj = batch.traj
        P, M = traj.num_pairs, traj.num_groups
        raw = self.cumulants(batch)
        cums, floor_hits = self.floored(raw)
        for p, c in enumerate(cums):
            if not np.all(c.eta_d > 0):
                g = int(np.flatnonzero(~(c.eta_d > 0))[0])
                raise DegenerateDemand(g, float(c.eta_d[g]), p)
        rates = np.stack([c.eta_s / c.eta_d for c in cums])
        grads_h = np.stack([bias_grad_h(r, self.bias_spec) for r in rates])

        x = pack_signals(self.training_rewards(batch), traj.supply, traj.demand)
        bootstrap = None if traj.dones[-1] else batch.last_obs
        n = len(traj)
        stats = {"skipped": 0, "value_loss": 0.0, "clip_fraction": 0.0, "entropy": 0.0}
        updates = 0
        for _ in range(cfg.epochs_per_iteration):
            perm = self.rng.permutation(n)
            for start in range(0, n, cfg.minibatch_size):
                idx = perm[start:start + cfg.minibatch_size]
                # advantages from the current value networks at every gradient step
                values = self.heads.values(traj.observations)
                last = self.heads.values(bootstrap)[0] if bootstrap is not None else None
                adv, targets = gae(x, values, traj.dones, cfg.gamma, cfg.lambda_gae, last)
                a_r, a_s, a_d = unpack_signals(adv, P, M)
                a = self.assemble(a_r, a_s, a_d, cums, grads_h, batch)[idx]
                if cfg.normalize_advantage:
                    a = normalize(a)
                s = self.ppo_clip_update(traj.observations[idx], traj.actions[idx], traj.log_probs[idx], a)
                stats["skipped"] += s["skipped"]
                stats["clip_fraction"] += s.get("clip_fraction", 0.0)
                stats["entropy"] += s.get("entropy", 0.0)
                stats["value_loss"] += self.value_regression(traj.observations[idx], targets[idx])
                updates += 1
        self.iteration += 1
        if stats["skipped"]:
            log.warning("iteration %d: skipped %d samples with non-finite ratio", self.iteration, stats["skipped"])
        return {
            "iteration": self.iteration,
            "env_steps": self.env_steps,
            "train_episode_reward": float(np.mean(batch.episode_returns)) if batch.episode_returns else float("nan"),
            "eta_r": raw[0].eta_r,
            "rates": rates.tolist(),
            "batch_bias": float(np.max(rates.max(axis=1) - rates.min(axis=1))),
            "value_loss": stats["value_loss"] / updates,
            "clip_fraction": stats["clip_fraction"] / updates,
            "entropy": stats["entropy"] / updates,
            "skipped": stats["skipped"],
            "floor_hits": floor_hits,
        }

    # checkpointing ---------------------------------------------------------------
    def state_dict(self) -> dict:
        return {
            "trainer_config": self.cfg.to_dict(),
            "policy": encode_mlp(self.policy.net),
            "heads": [encode_mlp(n) for n in self.heads.nets],
            "policy_opt": encode_adam(self.policy_opt),
            "head_opts": [encode_adam(o) for o in self.head_opts],
            "rng": self.rng.bit_generator.state,
            "env": self.env.state_dict(),
            "obs": encode_array(self.obs),
            "tracker": {"supply": encode_array(self.tracker.supply), "demand": encode_array(self.tracker.demand),
                        "delta": float(self.tracker.delta).hex()},
            "episode_return": float(self.episode_return).hex(),
            "env_steps": self.env_steps,
            "iteration": self.iteration,
        }

    def load_state_dict(self, d: dict) -> None:
        self.policy.net = decode_mlp(d["policy"])
        for k, nd in enumerate(d["heads"]):
            self.heads.nets[k] = decode_mlp(nd)
        self.policy_opt = decode_adam(d["policy_opt"])
        self.head_opts = [decode_adam(o) for o in d["head_opts"]]
        self.rng.bit_generator.state = d["rng"]
        self.env.load_state_dict(d["env"])
        self.obs = decode_array(d["obs"])
        self.tracker.supply = decode_array(d["tracker"]["supply"])
        self.tracker.demand = decode_array(d["tracker"]["demand"])
        self.tracker.delta = float.fromhex(d["tracker"]["delta"])
        self.episode_return = float.fromhex(d["episode_return"])
        self.env_steps = d["env_steps"]
        self.iteration = d["iteration"]


def elbert_po_iteration(trainer: Trainer) -> dict:
    """One pass of collect / cumulants / fairness-aware PPO update / value fit."""
    if trainer.cfg.algorithm != "elbert_po":
        raise ValueError("elbert_po_iteration needs a trainer configured for elbert_po")
    try:
        return trainer.iterate()
    except DegenerateDemand as e:
        raise DegenerateDemand(e.group, e.value, e.pair, context=f"iteration {trainer.iteration + 1}") from e
