import numpy as np
import pytest

from nvmrlsim.rl import CorridorWorld, depth_reward, make_env_pair
from nvmrlsim.rl.corridor import CorridorConfig


def test_same_seed_gives_identical_traces():
    actions = [0, 1, 0, 2, 0, 4, 0, 3, 0, 0]
    a, b = CorridorWorld(21), CorridorWorld(21)
    for act in actions:
        ta, tb = a.step(act), b.step(act)
        assert ta.reward == tb.reward
        assert ta.crash == tb.crash
        np.testing.assert_array_equal(ta.next_state, tb.next_state)


def test_empty_corridor_forward_never_crashes():
    cfg = CorridorConfig(obstacle_density=0.0)
    env = CorridorWorld(1, cfg)
    dist = 0.0
    while not env.at_goal:
        t = env.step(0)
        assert not t.crash
        dist += cfg.step_length
        assert env.distance == pytest.approx(dist)


def test_wall_ahead_reward_decreases_while_approaching():
    cfg = CorridorConfig(obstacle_density=0.0, length=24)
    env = CorridorWorld(2, cfg)
    # a wall of obstacles directly ahead
    env.grid[12, :] = True
    rewards = []
    for _ in range(12):
        t = env.step(0)
        if t.crash:
            break
        rewards.append(t.reward)
    assert len(rewards) >= 3
    assert all(a >= b - 1e-12 for a, b in zip(rewards, rewards[1:]))


def test_crash_on_entering_occupied_cell():
    cfg = CorridorConfig(obstacle_density=0.0, length=24)
    env = CorridorWorld(3, cfg)
    env.grid[2, :] = True  # wall right in front
    t = env.step(0)
    assert t.crash
    assert t.reward == cfg.crash_penalty


def test_depth_map_shape_and_range():
    env = CorridorWorld(4)
    m = env.depth_map()
    n = env.config.depth_resolution
    assert m.shape == (n, n)
    assert (m >= 0).all() and (m <= 1).all()


def test_env_pair_has_distinct_layouts():
    meta, test = make_env_pair(5)
    assert meta.config.obstacle_density < test.config.obstacle_density
    assert not np.array_equal(meta.grid, test.grid)


def test_turning_actions_change_heading():
    env = CorridorWorld(6, CorridorConfig(obstacle_density=0.0))
    env.step(1)
    assert env.heading == pytest.approx(25.0)
    env.step(4)
    assert env.heading == pytest.approx(-30.0)
