"""Transfer-then-online-RL experiment driver on the corridor environment.

Phase 1 trains every layer in the meta environment; phase 2 reuses those
weights in the test environment and fine-tunes under the chosen policy analog
(all layers for the E2E baseline, only the trailing FC layers otherwise).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import EpisodeLog, epsilon_greedy
from .corridor import CorridorWorld, make_env_pair
from .net import ReplayBuffer, ToyNet, train_step


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 7
    meta_steps: int = 3000
    finetune_steps: int = 3000
    gamma: float = 0.9
    learning_rate: float = 0.02
    batch_size: int = 16
    replay_capacity: int = 2000
    warmup: int = 64
    target_refresh: int = 200
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_fraction: float = 0.6   # fraction of the run spent decaying
    max_episode_steps: int = 400
    smoothing_fraction: float = 0.05      # moving-average window as a share of steps
    conv_specs: tuple = ((6, 3, 2), (8, 3, 1))
    fc_dims: tuple = (24,)
    depth_resolution: int = 12


@dataclass
class ExperimentResult:
    policy_label: str
    log: EpisodeLog
    cumulative_reward: np.ndarray
    returns: np.ndarray
    sfd: float
    final_net: ToyNet = field(repr=False, default=None)


def _epsilon(step: int, total: int, cfg: ExperimentConfig) -> float:
    decay_steps = max(1, int(total * cfg.epsilon_decay_fraction))
    frac = min(1.0, step / decay_steps)
    return cfg.epsilon_start + frac * (cfg.epsilon_end - cfg.epsilon_start)


def _train_loop(net: ToyNet, env: CorridorWorld, steps: int, cfg: ExperimentConfig,
                rng: np.random.Generator, label: str) -> ExperimentResult:
    window = max(1, int(steps * cfg.smoothing_fraction))
    log = EpisodeLog(gamma=cfg.gamma, smoothing_window=window)
    if steps <= 0:
        return ExperimentResult(label, log, np.empty(0), np.empty(0), 0.0, net)

    buffer = ReplayBuffer(cfg.replay_capacity)
    target = net.copy()
    env.reset()
    episode_steps = 0
    for step in range(steps):
        state = env.depth_map()
        action = epsilon_greedy(net.forward(state), _epsilon(step, steps, cfg), rng)
        transition = env.step(action)
        buffer.push(transition)
        episode_steps += 1

        done = transition.crash or env.at_goal or episode_steps >= cfg.max_episode_steps
        log.record(transition.reward, transition.crash, done, env.distance)
        if done:
            env.reset()
            episode_steps = 0

        if len(buffer) >= cfg.warmup:
            train_step(net, buffer.sample(cfg.batch_size, rng), cfg.gamma,
                       cfg.learning_rate, target)
        if (step + 1) % cfg.target_refresh == 0:
            target = net.copy()

    cum = log.cumulative_reward()
    rets = log.returns(smoothing=max(1, len(log.episode_rewards) // 20))
    sfd = log.sfd() if log.episode_distances else 0.0
    return ExperimentResult(label, log, cum, rets, sfd, net)


def build_net(cfg: ExperimentConfig, rng: np.random.Generator,
              freeze_cutoff: int = 0) -> ToyNet:
    return ToyNet(cfg.depth_resolution, 1, cfg.conv_specs, cfg.fc_dims, 5, rng,
                  freeze_cutoff)


def freeze_cutoff_for(policy_label: str, net: ToyNet) -> int:
    """E2E trains everything; Lk trains the last k parameterized layers."""
    if policy_label.upper() == "E2E":
        return 0
    k = int(policy_label[1:])
    return max(0, len(net.layers) - k)


def run_experiment(policy_label: str, cfg: ExperimentConfig,
                   meta_net: ToyNet | None = None) -> ExperimentResult:
    """Meta-train (or reuse `meta_net`), then fine-tune under the policy analog."""
    if meta_net is None:
        meta_net = meta_train(cfg)
    net = meta_net.copy()
    net.freeze_cutoff = freeze_cutoff_for(policy_label, net)
    _, test_env = make_env_pair(cfg.seed)
    finetune_rng = np.random.default_rng(cfg.seed + 1)
    return _train_loop(net, test_env, cfg.finetune_steps, cfg, finetune_rng, policy_label)


def meta_train(cfg: ExperimentConfig) -> ToyNet:
    """Phase 1: end-to-end training on the meta environment."""
    rng = np.random.default_rng(cfg.seed)
    net = build_net(cfg, rng, freeze_cutoff=0)
    meta_env, _ = make_env_pair(cfg.seed)
    _train_loop(net, meta_env, cfg.meta_steps, cfg, rng, "meta")
    return net
