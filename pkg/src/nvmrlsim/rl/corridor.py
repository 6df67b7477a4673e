"""Deterministic grid corridor with ray-cast depth maps.

A desk-scale stand-in for the photorealistic simulators: the agent flies down
an obstacle-strewn corridor, sees an n-by-n depth map rendered by casting
rays across its field of view, and crashes on entering an occupied cell.
Meta and test environments differ by obstacle layout distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ACTIONS, Transition, depth_reward


@dataclass(frozen=True)
class CorridorConfig:
    length: int = 48
    height: int = 11
    obstacle_density: float = 0.10
    obstacle_columns_start: int = 6   # entry region kept clear
    depth_resolution: int = 12
    fov_degrees: float = 90.0
    max_range: float = 10.0
    step_length: float = 0.5
    crash_penalty: float = -1.0
    reward_window_fraction: float = 0.25


class CorridorWorld:
    """step(action) -> Transition; same seed gives an identical trace."""

    def __init__(self, seed: int, config: CorridorConfig = CorridorConfig()):
        self.config = config
        self.seed = seed
        self._layout_rng = np.random.default_rng(seed)
        self.grid = None
        self.x = self.y = 0.0
        self.heading = 0.0
        self.distance = 0.0
        self.reset()

    def _build_grid(self):
        cfg = self.config
        grid = np.zeros((cfg.length, cfg.height), dtype=bool)
        grid[:, 0] = True
        grid[:, -1] = True
        interior = cfg.height - 2
        for col in range(cfg.obstacle_columns_start, cfg.length - 2):
            for row in range(1, cfg.height - 1):
                if self._layout_rng.random() < cfg.obstacle_density:
                    grid[col, row] = True
            # guarantee a navigable gap in every column
            free = [r for r in range(1, cfg.height - 1) if not grid[col, r]]
            if len(free) < 2:
                keep = 1 + int(self._layout_rng.integers(interior - 1))
                grid[col, keep] = False
                grid[col, min(cfg.height - 2, keep + 1)] = False
        return grid

    def reset(self):
        cfg = self.config
        self.grid = self._build_grid()
        self.x = 1.5
        self.y = cfg.height / 2.0
        self.heading = 0.0
        self.distance = 0.0
        return self.depth_map()

    def _occupied(self, x: float, y: float) -> bool:
        cfg = self.config
        if x < 0 or y < 0 or x >= cfg.length or y >= cfg.height:
            return True
        return bool(self.grid[int(x), int(y)])

    def _ray(self, angle_deg: float) -> float:
        cfg = self.config
        rad = math.radians(angle_deg)
        dx, dy = math.cos(rad), math.sin(rad)
        step = 0.1
        dist = 0.0
        while dist < cfg.max_range:
            dist += step
            if self._occupied(self.x + dx * dist, self.y + dy * dist):
                return dist
        return cfg.max_range

    def depth_map(self) -> np.ndarray:
        cfg = self.config
        n = cfg.depth_resolution
        angles = np.linspace(self.heading + cfg.fov_degrees / 2,
                             self.heading - cfg.fov_degrees / 2, n)
        row = np.array([self._ray(a) for a in angles]) / cfg.max_range
        return np.tile(row, (n, 1))

    def step(self, action: int) -> Transition:
        cfg = self.config
        state = self.depth_map()
        self.heading += ACTIONS[action][1]
        rad = math.radians(self.heading)
        self.x += cfg.step_length * math.cos(rad)
        self.y += cfg.step_length * math.sin(rad)
        self.distance += cfg.step_length

        crash = self._occupied(self.x, self.y)
        next_state = self.depth_map() if not crash else np.zeros_like(state)
        if crash:
            reward = cfg.crash_penalty
        else:
            reward = depth_reward(next_state, cfg.reward_window_fraction)
        return Transition(state, action, reward, next_state, crash)

    @property
    def at_goal(self) -> bool:
        return self.x >= self.config.length - 2


def make_env_pair(seed: int, meta_density: float = 0.08,
                  test_density: float = 0.12) -> tuple[CorridorWorld, CorridorWorld]:
    """Meta-training and test environments with distinct obstacle distributions."""
    meta = CorridorWorld(seed, CorridorConfig(obstacle_density=meta_density))
    test = CorridorWorld(seed + 10_000, CorridorConfig(obstacle_density=test_density))
    return meta, test
