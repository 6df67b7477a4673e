import numpy as np
import pytest

from nvmrlsim.rl import ExperimentConfig, meta_train, run_experiment

# Reduced-scale run shared by the module's tests (the acceptance suite runs
# the default scale).
CFG = ExperimentConfig(seed=7, meta_steps=1500, finetune_steps=1500)


@pytest.fixture(scope="module")
def meta_net():
    return meta_train(CFG)


@pytest.fixture(scope="module")
def results(meta_net):
    return {label: run_experiment(label, CFG, meta_net)
            for label in ("E2E", "L2", "L3", "L4")}


def drift_and_gain(series):
    third = series.size // 3
    final = series[-third:]
    slope = np.polyfit(np.arange(final.size), final, 1)[0]
    drift = slope * final.size / max(final.mean(), 1e-9)
    gain = final.mean() - series[:third].mean()
    return drift, gain


def test_all_policies_converge(results):
    for label, r in results.items():
        drift, gain = drift_and_gain(r.cumulative_reward)
        assert gain > 0, f"{label} never improved"
        assert drift > -0.2, f"{label} collapsed in the final third (drift {drift:.2f})"


def test_lastk_sfd_close_to_e2e(results):
    e2e = results["E2E"].sfd
    for label in ("L2", "L3", "L4"):
        assert abs(results[label].sfd / e2e - 1.0) <= 0.25


def test_zero_budget_produces_empty_metrics():
    cfg = ExperimentConfig(seed=1, meta_steps=0, finetune_steps=0)
    result = run_experiment("L2", cfg)
    assert result.cumulative_reward.size == 0
    assert result.returns.size == 0
    assert result.sfd == 0.0


def test_same_seed_reproduces_series(meta_net):
    a = run_experiment("L2", CFG, meta_net)
    b = run_experiment("L2", CFG, meta_net)
    np.testing.assert_array_equal(a.cumulative_reward, b.cumulative_reward)


def test_finetune_respects_freeze(results, meta_net):
    frozen = results["L2"].final_net
    # conv layers kept the meta-trained weights bit for bit
    for i in range(2):
        assert frozen.layers[i].weight.tobytes() == meta_net.layers[i].weight.tobytes()
    e2e = results["E2E"].final_net
    assert e2e.layers[0].weight.tobytes() != meta_net.layers[0].weight.tobytes()
