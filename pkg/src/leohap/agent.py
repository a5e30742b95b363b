"""Deep Q-learning over the joint (satellite, acceleration) action space."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .env import RelayEnv, ScenarioConfig, trace_row
from .neural import (
    AdamState,
    MlpParams,
    adam_step,
    forward,
    init_params,
    loss_and_grad,
    td_targets,
)

log = logging.getLogger(__name__)

TRAIN_LOG_HEADER = ["iteration", "loss", "epsilon", "episode", "episode_mean_reward"]


@dataclass
class DqnConfig:
    gamma: float = 0.95
    batch_size: int = 500
    target_sync_period: int = 500
    total_iterations: int = 500_000
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_fraction: float = 0.2
    replay_capacity: int = 100_000
    update_every: int = 1
    hidden: List[int] = field(default_factory=lambda: [300, 300, 200])
    lr: float = 1e-4
    loss_reduction: str = "sum"
    clip_norm: Optional[float] = None
    # greedy-evaluate every k-th target sync and return the best snapshot; 0 = last params
    keep_best_every: int = 0

    def __post_init__(self):
        if self.batch_size > self.replay_capacity:
            raise ValueError("batch_size must not exceed replay_capacity")
        for name in ("batch_size", "target_sync_period", "update_every", "replay_capacity"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be > 0")
        if self.keep_best_every < 0:
            raise ValueError("keep_best_every must be >= 0")
        if self.total_iterations < 0:
            raise ValueError("total_iterations must be >= 0")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if not (0.0 <= self.eps_end <= 1.0 and 0.0 <= self.eps_start <= 1.0):
            raise ValueError("epsilon bounds must lie in [0, 1]")
        if self.loss_reduction not in ("sum", "mean"):
            raise ValueError(f"loss_reduction must be 'sum' or 'mean', got {self.loss_reduction!r}")
        self.hidden = [int(h) for h in self.hidden]

    def epsilon(self, iteration: int) -> float:
        """Linear decay over the first ``eps_decay_fraction`` of training, then flat."""
        horizon = self.eps_decay_fraction * self.total_iterations
        if horizon <= 0 or iteration >= horizon:
            return self.eps_end
        return self.eps_start + (self.eps_end - self.eps_start) * iteration / horizon


class ReplayBuffer:
    """Fixed-size ring of transitions; the oldest entry is overwritten first."""

    def __init__(self, capacity: int, obs_dim: int):
        self.capacity = int(capacity)
        self.s = np.zeros((capacity, obs_dim))
        self.a = np.zeros(capacity, dtype=int)
        self.r = np.zeros(capacity)
        self.s2 = np.zeros((capacity, obs_dim))
        self.done = np.zeros(capacity, dtype=bool)
        self._next = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def push(self, s, a, r, s2, done) -> None:
        i = self._next
        self.s[i], self.a[i], self.r[i], self.s2[i], self.done[i] = s, a, r, s2, done
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch: int, rng: np.random.Generator):
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self.size, size=batch)
        return self.s[idx], self.a[idx], self.r[idx], self.s2[idx], self.done[idx]

    def ordered(self):
        """Stored rewards from oldest to newest (mainly for inspection)."""
        if self.size < self.capacity:
            return self.r[: self.size].copy()
        return np.roll(self.r, -self._next)


def select_action(p: MlpParams, obs, eps: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy; ``argmax`` ties resolve to the lowest index."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {eps}")
    if rng.random() < eps:
        return int(rng.integers(p.output_dim))
    return int(np.argmax(forward(p, obs)))


@dataclass
class TrainingLog:
    rows: List[list] = field(default_factory=list)
    losses: List[float] = field(default_factory=list)
    episode_rewards: List[float] = field(default_factory=list)
    episode_rates: List[float] = field(default_factory=list)
    sync_iterations: List[int] = field(default_factory=list)
    greedy_evals: List[tuple] = field(default_factory=list)
    best_iteration: Optional[int] = None

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRAIN_LOG_HEADER)
            for it, loss, eps, ep, mr in self.rows:
                w.writerow([it, repr(loss), repr(eps), ep, "" if mr is None else repr(mr)])


class TrainingDiverged(RuntimeError):
    def __init__(self, iteration: int, loss: float):
        super().__init__(f"non-finite loss {loss!r} at iteration {iteration}")
        self.iteration = iteration
        self.loss = loss


def train(
    env_cfg: ScenarioConfig,
    dqn_cfg: DqnConfig,
    seed: int,
    init: Optional[MlpParams] = None,
    adam: Optional[AdamState] = None,
    on_sync=None,
):
    """Train a Q-network; returns ``(params, log, adam_state)``.

    Deterministic for a given ``seed``: every random draw comes from one
    generator seeded here. ``init``/``adam`` warm-start from a checkpoint
    (the replay memory is not restored). ``on_sync(iteration, online,
    target)`` is called right after each target-network copy.

    With ``keep_best_every = k > 0`` the online network is rolled out
    greedily at every k-th sync and once at the end; the snapshot with the
    highest mean E2E rate is returned (earliest wins ties) and the returned
    Adam state is the final one.
    """
    env = RelayEnv(env_cfg)
    rng = np.random.default_rng(seed)
    dims = [env.obs_dim, *dqn_cfg.hidden, env.num_actions]
    params = init if init is not None else init_params(dims, seed)
    if params.layer_dims != dims:
        raise ValueError(f"network dims {params.layer_dims} do not match env {dims}")
    if adam is None:
        adam = AdamState.zeros_like(params, lr=dqn_cfg.lr)
    target = params.copy()
    buf = ReplayBuffer(dqn_cfg.replay_capacity, env.obs_dim)
    tlog = TrainingLog()

    obs = env.reset(seed)
    ep, ep_reward, ep_rate, ep_len = 0, 0.0, 0.0, 0
    last_ep_mean: Optional[float] = None
    updates = 0
    best = None

    def consider(it, p):
        nonlocal best
        rate = evaluate(p, env.cfg)["mean_rate"]
        tlog.greedy_evals.append((it, rate))
        if best is None or rate > best[0]:
            best = (rate, it, p.copy())

    for it in range(dqn_cfg.total_iterations):
        eps = dqn_cfg.epsilon(it)
        a = select_action(params, obs, eps, rng)
        out = env.step(a)
        buf.push(obs, a, out.reward, out.next_obs, out.done)
        obs = out.next_obs
        ep_reward += out.reward
        ep_rate += out.info["rates"][3]
        ep_len += 1
        if out.done:
            last_ep_mean = ep_reward / ep_len
            tlog.episode_rewards.append(last_ep_mean)
            tlog.episode_rates.append(ep_rate / ep_len)
            ep += 1
            ep_reward, ep_rate, ep_len = 0.0, 0.0, 0
            obs = env.reset(seed)

        if len(buf) >= dqn_cfg.batch_size and it % dqn_cfg.update_every == 0:
            s, act, r, s2, done = buf.sample(dqn_cfg.batch_size, rng)
            y = td_targets(r, s2, done, target, dqn_cfg.gamma)
            loss, grads = loss_and_grad(params, s, act, y, dqn_cfg.loss_reduction)
            if not np.isfinite(loss):
                raise TrainingDiverged(it, loss)
            params, adam = adam_step(params, grads, adam, dqn_cfg.clip_norm)
            updates += 1
            tlog.losses.append(loss)
            tlog.rows.append([it, loss, eps, ep, last_ep_mean])
            if updates % dqn_cfg.target_sync_period == 0:
                target = params.copy()
                tlog.sync_iterations.append(it)
                if on_sync is not None:
                    on_sync(it, params, target)
                k = dqn_cfg.keep_best_every
                if k and len(tlog.sync_iterations) % k == 0:
                    consider(it, params)
        if ep and out.done and ep % 10 == 0:
            log.info("iter %d episode %d mean reward %.4f eps %.3f", it, ep, last_ep_mean, eps)
    if dqn_cfg.keep_best_every and dqn_cfg.total_iterations > 0:
        consider(dqn_cfg.total_iterations - 1, params)
        _, tlog.best_iteration, params = best
    return params, tlog, adam


def evaluate(p: MlpParams, env_cfg: ScenarioConfig, episodes: int = 1) -> dict:
    """Greedy roll-outs.

    Returns mean E2E rate, mean spectral efficiency, mean reward, the per-slot
    E2E rates and trace rows of the first episode.
    """
    env = RelayEnv(env_cfg)
    if p.input_dim != env.obs_dim or p.output_dim != env.num_actions:
        raise ValueError(
            f"network maps {p.input_dim}->{p.output_dim}, env needs {env.obs_dim}->{env.num_actions}"
        )
    all_rates, all_rewards, trace = [], [], []
    for k in range(episodes):
        obs = env.reset(k)
        rates = []
        while True:
            a = int(np.argmax(forward(p, obs)))
            out = env.step(a)
            rates.append(out.info["rates"][3])
            all_rewards.append(out.reward)
            if k == 0:
                trace.append(trace_row(out))
            obs = out.next_obs
            if out.done:
                break
        all_rates.append(rates)
    rates = np.asarray(all_rates)
    mean_rate = float(rates.mean())
    return {
        "mean_rate": mean_rate,
        "mean_spectral_efficiency": mean_rate / env.cfg.radio.bandwidth,
        "mean_reward": float(np.mean(all_rewards)),
        "rates": rates[0],
        "trace": trace,
        "cfg": env.cfg,
    }
