import pytest

from nvmrlsim.costmodel import (ComputeEnergyParams, MemoryTechParams, compare_policies,
                                fps_sweep, iteration_cost, layer_cost, phase_costs)
from nvmrlsim.errors import ConfigError, ParameterError
from nvmrlsim.mapper import PEArrayConfig, plan_conv_forward, plan_fc_forward
from nvmrlsim.netspec import (CONV, FC, LayerSpec, NetworkSpec, TrainingPolicy,
                              assign_placement, default_network,
                              default_sram_weight_budget, infer_shapes)

PE = PEArrayConfig()
MEM = MemoryTechParams()
COMP = ComputeEnergyParams()


@pytest.fixture(scope="module")
def net():
    return default_network()


@pytest.fixture(scope="module")
def shapes(net):
    return {s.name: s for s in infer_shapes(net)}


@pytest.fixture(scope="module")
def placements(net):
    budget = default_sram_weight_budget(net)
    pols = [TrainingPolicy.e2e(), TrainingPolicy.last_k(2), TrainingPolicy.last_k(3),
            TrainingPolicy.last_k(4)]
    return {p.label: assign_placement(net, p, budget) for p in pols}


def test_power_equals_energy_over_latency(net, shapes):
    layer = net.layers[0]
    plan = plan_conv_forward(layer, shapes["CONV1"], PE)
    rep = layer_cost(plan, shapes["CONV1"], layer, MEM, COMP, PE)
    assert rep.avg_power_w == pytest.approx(rep.energy_j / rep.latency_s)
    assert rep.latency_s > 0 and rep.energy_j > 0


def test_every_layer_with_macs_has_positive_cost(net, placements):
    for phase in ("forward", "backward"):
        for rep in phase_costs(net, TrainingPolicy.e2e(), phase, placements["E2E"],
                               MEM, COMP, PE):
            assert rep.latency_s > 0
            assert rep.energy_j > 0


def test_doubling_clock_halves_cycle_latency(net, shapes):
    layer = net.layer("FC3")  # SRAM-resident: pure cycle-limited path
    plan = plan_fc_forward(layer, shapes["FC3"], PE, nvm_resident=False)
    fast = MemoryTechParams(clock_hz=MEM.clock_hz * 2)
    slow_rep = layer_cost(plan, shapes["FC3"], layer, MEM, COMP, PE)
    fast_rep = layer_cost(plan, shapes["FC3"], layer, fast, COMP, PE)
    assert fast_rep.latency_s == pytest.approx(slow_rep.latency_s / 2)
    assert fast_rep.traffic == slow_rep.traffic


def test_zero_weight_pool_layer_costs_time_not_nvm():
    from nvmrlsim.netspec import Pool
    conv = LayerSpec("C", CONV, filter_h=1, filter_w=1, in_channels=1, out_channels=1,
                     pool=Pool(2, 2))
    fc = LayerSpec("F", FC, in_dim=4 * 4, out_dim=5, activation=None)
    net = NetworkSpec(input_h=8, input_w=8, input_channels=1, layers=(conv, fc))
    sh = infer_shapes(net)[0]
    plan = plan_conv_forward(conv, sh, PE, nvm_resident=False)
    rep = layer_cost(plan, sh, conv, MEM, COMP, PE)
    assert rep.latency_s > 0
    assert rep.traffic.nvm_read_bits == 0
    assert rep.comparator_ops > 0


def test_lastk_iterations_write_no_nvm(net, placements):
    for label in ("L2", "L3"):
        k = int(label[1])
        cost = iteration_cost(net, TrainingPolicy.last_k(k), 4, placements[label],
                              MEM, COMP, PE)
        assert cost.nvm_write_bits == 0


def test_e2e_iteration_writes_all_nvm_resident_weights(net, placements):
    cost = iteration_cost(net, TrainingPolicy.e2e(), 1, placements["E2E"], MEM, COMP, PE)
    assert cost.nvm_write_bits >= 8 * placements["E2E"].nvm_weight_bytes


def test_batch_size_zero_rejected(net, placements):
    with pytest.raises(ConfigError):
        iteration_cost(net, TrainingPolicy.e2e(), 0, placements["E2E"], MEM, COMP, PE)


def test_iteration_latency_identity(net, placements):
    n = 6
    cost = iteration_cost(net, TrainingPolicy.last_k(3), n, placements["L3"], MEM, COMP, PE)
    expect = n * (cost.per_image_forward.latency_s + cost.per_image_backward.latency_s) \
        + cost.weight_update.latency_s
    assert cost.iteration_latency_s == pytest.approx(expect)
    assert cost.fps == pytest.approx(n / expect)


def test_per_image_cost_monotone_in_k(net, placements):
    pols = [TrainingPolicy.last_k(2), TrainingPolicy.last_k(3), TrainingPolicy.last_k(4),
            TrainingPolicy.e2e()]
    lats, energies = [], []
    for p in pols:
        c = iteration_cost(net, p, 4, placements[p.label], MEM, COMP, PE)
        lats.append(c.per_image_train_latency_s)
        energies.append(c.per_image_train_energy_j)
    assert lats == sorted(lats)
    assert energies == sorted(energies)


def test_compare_requires_e2e(net, placements):
    with pytest.raises(ConfigError):
        compare_policies(net, [TrainingPolicy.last_k(2), TrainingPolicy.last_k(3)],
                         4, placements, MEM, COMP, PE)


def test_compare_e2e_vs_itself_is_zero(net, placements):
    comps = compare_policies(net, [TrainingPolicy.e2e(), TrainingPolicy.e2e()],
                             4, placements, MEM, COMP, PE)
    for c in comps:
        assert c.latency_reduction == pytest.approx(0.0)
        assert c.energy_reduction == pytest.approx(0.0)


def test_fps_ordering_and_ratio(net, placements):
    pols = [TrainingPolicy.e2e(), TrainingPolicy.last_k(2), TrainingPolicy.last_k(3),
            TrainingPolicy.last_k(4)]
    for n in (1, 4, 16, 32):
        fps = {p.label: iteration_cost(net, p, n, placements[p.label], MEM, COMP, PE).fps
               for p in pols}
        assert fps["L2"] >= fps["L3"] >= fps["L4"] > fps["E2E"]
    at4 = {p.label: iteration_cost(net, p, 4, placements[p.label], MEM, COMP, PE).fps
           for p in pols}
    assert 4.5 <= at4["L4"] / at4["E2E"] <= 6.5


def test_fps_sweep_covers_grid(net, placements):
    pols = [TrainingPolicy.e2e(), TrainingPolicy.last_k(2)]
    records = fps_sweep(net, pols, [1, 2, 4], placements, MEM, COMP, PE)
    assert len(records) == 6
    assert all(r["fps"] > 0 for r in records)
    with pytest.raises(ConfigError):
        fps_sweep(net, pols, [], placements, MEM, COMP, PE)


def test_totals_invariant_under_report_order(net, placements):
    reports = phase_costs(net, TrainingPolicy.e2e(), "forward", placements["E2E"],
                          MEM, COMP, PE)
    fwd = sum(r.latency_s for r in reports)
    rev = sum(r.latency_s for r in reversed(reports))
    assert fwd == pytest.approx(rev)


def test_memory_param_validation():
    with pytest.raises(ParameterError):
        MemoryTechParams(nvm_write_energy_j_per_bit=0.1e-12)  # below read energy
    with pytest.raises(ParameterError):
        MemoryTechParams(nvm_write_latency_s=5e-9)  # below read latency
    with pytest.raises(ParameterError):
        ComputeEnergyParams(mac_energy_j=-1.0)
