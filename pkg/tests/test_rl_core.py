import numpy as np
import pytest

from nvmrlsim.errors import DomainError, MetricError
from nvmrlsim.rl import (cumulative_reward_series, depth_reward, discounted_return,
                         epsilon_greedy, episode_return_series, q_update,
                         safe_flight_distance, select_action)


def test_q_update_direct_substitution():
    assert q_update(1.0, 0.9, 2.0) == pytest.approx(2.8)


def test_q_update_gamma_zero():
    assert q_update(0.7, 0.0, 123.0) == pytest.approx(0.7)


def test_q_update_crash_ignores_next_state():
    assert q_update(-1.0, 0.9, 999.0, crash=True) == -1.0


def test_q_update_rejects_bad_gamma():
    with pytest.raises(DomainError):
        q_update(1.0, 1.0, 0.0)
    with pytest.raises(DomainError):
        q_update(1.0, -0.1, 0.0)


def test_greedy_tie_breaks_to_lowest_index():
    assert select_action([0.1, 0.5, 0.2, 0.5, 0.0]) == 1


def test_greedy_rejects_empty():
    with pytest.raises(DomainError):
        select_action([])


def test_greedy_affine_invariance():
    rng = np.random.default_rng(5)
    for _ in range(100):
        q = rng.normal(size=5)
        a, b = float(rng.uniform(0.1, 10)), float(rng.normal())
        assert select_action(q) == select_action(a * q + b)


def test_epsilon_one_is_uniform_chi_square():
    rng = np.random.default_rng(11)
    counts = np.zeros(5)
    n = 10_000
    for _ in range(n):
        counts[epsilon_greedy([1.0, 0.0, 0.0, 0.0, 0.0], 1.0, rng)] += 1
    expected = n / 5
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    assert chi2 < 18.47  # 99.9th percentile of chi^2 with 4 dof


def test_epsilon_zero_is_greedy():
    rng = np.random.default_rng(0)
    q = [0.0, 0.3, 0.9, 0.1, 0.2]
    assert all(epsilon_greedy(q, 0.0, rng) == 2 for _ in range(50))


def test_depth_reward_uniform_map():
    for frac in (0.1, 0.25, 0.9):
        assert depth_reward(np.full((9, 9), 0.37), frac) == pytest.approx(0.37)


def test_depth_reward_hand_enumerated_window():
    m = np.arange(1, 17, dtype=float).reshape(4, 4)
    # 2x2 center window covers {6, 7, 10, 11}
    assert depth_reward(m, 0.5) == pytest.approx(8.5)


def test_depth_reward_monotone_under_pointwise_order():
    rng = np.random.default_rng(3)
    for _ in range(50):
        b = rng.random((8, 8))
        a = b - rng.random((8, 8)) * 0.5  # a <= b pointwise
        assert depth_reward(a) <= depth_reward(b) + 1e-12


def test_depth_reward_rejects_empty():
    with pytest.raises(DomainError):
        depth_reward(np.empty((0, 0)))


def test_discounted_return_values():
    assert discounted_return([1, 1, 1], 0.5) == pytest.approx(1.75)
    assert discounted_return([4.2], 0.9) == pytest.approx(4.2)
    assert discounted_return([3.0, 100.0], 0.0) == pytest.approx(3.0)


def test_cumulative_reward_series():
    np.testing.assert_allclose(cumulative_reward_series([1, 2, 3], 3), [2.0])
    np.testing.assert_allclose(cumulative_reward_series([5, 5, 5, 5], 2), [5, 5, 5])
    np.testing.assert_allclose(cumulative_reward_series([1, 2, 3], 1), [1, 2, 3])
    assert cumulative_reward_series([1, 2], 5).size == 0  # window longer than data


def test_constant_rewards_give_constant_series():
    series = cumulative_reward_series([0.7] * 50, 10)
    np.testing.assert_allclose(series, 0.7)


def test_episode_return_series():
    np.testing.assert_allclose(episode_return_series([[1, 1]]), [1.0])
    np.testing.assert_allclose(episode_return_series([[0, 0, 0]]), [0.0])
    np.testing.assert_allclose(episode_return_series([[2], [4]]), [2.0, 4.0])


def test_safe_flight_distance():
    assert safe_flight_distance([10.0, 20.0]) == pytest.approx(15.0)
    assert safe_flight_distance([7.5]) == pytest.approx(7.5)
    assert safe_flight_distance([10.0, 20.0], baseline=15.0) == pytest.approx(1.0)
    with pytest.raises(MetricError):
        safe_flight_distance([])


# ---------------------------------------------------------------------------
# Tabular oracle: a 5-state deterministic chain. Iterating the Bellman update
# must converge to the fixed point that exhaustive value iteration finds.
# ---------------------------------------------------------------------------

N_STATES = 5
ACTIONS = (0, 1)  # 0 = stay (reward 0), 1 = advance (reward 1, terminal at the end)


def chain_step(state, action):
    if action == 0:
        return state, 0.0, False
    nxt = state + 1
    if nxt >= N_STATES - 1:
        return N_STATES - 1, 1.0, True
    return nxt, 1.0, False


def brute_force_value_iteration(gamma, sweeps=10_000):
    v = np.zeros(N_STATES)
    for _ in range(sweeps):
        new = np.zeros(N_STATES)
        for s in range(N_STATES - 1):
            vals = []
            for a in ACTIONS:
                nxt, r, done = chain_step(s, a)
                vals.append(r if done else r + gamma * v[nxt])
            new[s] = max(vals)
        if np.max(np.abs(new - v)) < 1e-14:
            v = new
            break
        v = new
    return v


def test_tabular_q_learning_converges_to_value_iteration_fixed_point():
    gamma = 0.9
    oracle_v = brute_force_value_iteration(gamma)
    q = np.zeros((N_STATES, len(ACTIONS)))
    for _ in range(3000):
        for s in range(N_STATES - 1):
            for a in ACTIONS:
                nxt, r, done = chain_step(s, a)
                q[s, a] = q_update(r, gamma, float(q[nxt].max()), crash=done)
    np.testing.assert_allclose(q.max(axis=1)[:-1], oracle_v[:-1], atol=1e-6)
