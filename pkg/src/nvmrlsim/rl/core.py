"""Q-learning primitives, the depth-window reward, and evaluation metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, MetricError

# action index -> (label, heading change in degrees)
ACTIONS = (
    ("forward", 0.0),
    ("left_25", +25.0),
    ("right_25", -25.0),
    ("left_55", +55.0),
    ("right_55", -55.0),
)


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    crash: bool

    def __post_init__(self):
        if not 0 <= self.action < len(ACTIONS):
            raise DomainError(f"action {self.action} outside the {len(ACTIONS)}-action space")
        if not math.isfinite(self.reward):
            raise DomainError("reward must be finite")


def q_update(reward: float, gamma: float, max_next_q: float, crash: bool = False) -> float:
    """Bellman target: reward plus discounted best next-state value (zero on crash)."""
    if not 0.0 <= gamma < 1.0:
        raise DomainError(f"gamma must lie in [0, 1), got {gamma}")
    if crash:
        return reward
    return reward + gamma * max_next_q


def select_action(q_values) -> int:
    """Greedy action with lowest-index tie-break."""
    q = np.asarray(q_values, dtype=float)
    if q.size == 0:
        raise DomainError("empty q_values")
    return int(np.argmax(q))


def epsilon_greedy(q_values, epsilon: float, rng: np.random.Generator) -> int:
    if not 0.0 <= epsilon <= 1.0:
        raise DomainError(f"epsilon must lie in [0, 1], got {epsilon}")
    q = np.asarray(q_values, dtype=float)
    if q.size == 0:
        raise DomainError("empty q_values")
    if rng.random() < epsilon:
        return int(rng.integers(q.size))
    return select_action(q)


def depth_reward(depth_map, window_fraction: float = 0.25) -> float:
    """Mean depth over the centered window (closer obstacles -> smaller reward)."""
    d = np.asarray(depth_map, dtype=float)
    if d.size == 0:
        raise DomainError("empty depth map")
    n_rows, n_cols = d.shape
    side_r = max(1, round(window_fraction * n_rows))
    side_c = max(1, round(window_fraction * n_cols))
    r0 = (n_rows - side_r) // 2
    c0 = (n_cols - side_c) // 2
    return float(d[r0:r0 + side_r, c0:c0 + side_c].mean())


def discounted_return(rewards, gamma: float) -> float:
    if not 0.0 <= gamma < 1.0:
        raise DomainError(f"gamma must lie in [0, 1), got {gamma}")
    total = 0.0
    for i, r in enumerate(rewards):
        total += (gamma ** i) * r
    return total


def cumulative_reward_series(rewards, window: int) -> np.ndarray:
    """Moving average of the trailing `window` rewards; starts once full."""
    if window < 1:
        raise DomainError(f"window must be >= 1, got {window}")
    r = np.asarray(rewards, dtype=float)
    if r.size < window:
        return np.empty(0)
    kernel = np.ones(window) / window
    return np.convolve(r, kernel, mode="valid")


def episode_return_series(episode_rewards, smoothing: int = 1) -> np.ndarray:
    """Per-episode mean reward (total / actions taken), optionally smoothed."""
    means = np.array([np.mean(ep) if len(ep) else 0.0 for ep in episode_rewards])
    if smoothing <= 1 or means.size == 0:
        return means
    return cumulative_reward_series(means, min(smoothing, means.size))


def safe_flight_distance(episode_distances, baseline: float | None = None) -> float:
    """Mean distance per episode before a crash; optionally normalized."""
    d = list(episode_distances)
    if not d:
        raise MetricError("safe flight distance is undefined with zero completed episodes")
    sfd = float(np.mean(d))
    if baseline is not None:
        if baseline <= 0:
            raise MetricError("baseline safe flight distance must be > 0")
        return sfd / baseline
    return sfd


@dataclass
class EpisodeLog:
    """Step rewards and episode boundaries collected during training."""

    gamma: float
    smoothing_window: int
    rewards: list = field(default_factory=list)
    crashes: list = field(default_factory=list)
    episode_rewards: list = field(default_factory=list)
    episode_distances: list = field(default_factory=list)
    _current: list = field(default_factory=list)

    def record(self, reward: float, crash: bool, episode_done: bool, distance: float = 0.0):
        self.rewards.append(reward)
        self.crashes.append(crash)
        self._current.append(reward)
        if episode_done:
            self.episode_rewards.append(self._current)
            self.episode_distances.append(distance)
            self._current = []

    @property
    def actions_per_episode(self):
        return [len(ep) for ep in self.episode_rewards]

    def cumulative_reward(self) -> np.ndarray:
        return cumulative_reward_series(self.rewards, self.smoothing_window)

    def returns(self, smoothing: int = 1) -> np.ndarray:
        return episode_return_series(self.episode_rewards, smoothing)

    def sfd(self) -> float:
        return safe_flight_distance(self.episode_distances)
