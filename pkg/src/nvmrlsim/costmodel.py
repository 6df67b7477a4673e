"""Latency/energy/traffic costing of mapping plans and training iterations.

Cycle accounting per plan: streams (weight fill, input rows, partial-sum
drains) ride the global-buffer links, compute is charged at full-pass width
(a final partial pass still pays a whole pass of latency), and each pass adds
a pipeline fill/drain bubble. NVM fetches overlap the on-array streaming, so
a layer's latency is the slower of the two paths.

Energy charges every traffic class at its per-bit cost, MACs and comparator
ops at their per-op costs, and leakage as latency * active PEs * static power.
NVM-resident weights stream directly into the array, so they pay NVM read
energy but no SRAM energy; everything else transits the global buffer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError, ParameterError
from .mapper import (FORWARD_CONV, FORWARD_FC, MappingPlan, PEArrayConfig,
                     plan_conv_backward_gemm, plan_conv_forward,
                     plan_fc_backward, plan_fc_forward)
from .netspec import (CONV, FC, NetworkSpec, PlacementMap, ShapeInfo, TrainingPolicy,
                      infer_shapes, layer_footprint_bytes, trainable_layers)


@dataclass(frozen=True)
class MemoryTechParams:
    """Memory-technology costs. NVM values are published; the rest are calibrated."""

    nvm_write_latency_s: float = 30e-9
    nvm_read_latency_s: float = 10e-9
    nvm_write_energy_j_per_bit: float = 4.5e-12
    nvm_read_energy_j_per_bit: float = 0.7e-12
    sram_read_energy_j_per_bit: float = 1.40e-16   # fitted; leakage dominates this design
    sram_write_energy_j_per_bit: float = 1.40e-16
    rf_access_energy_j_per_bit: float = 0.08e-12
    dram_link_energy_j_per_bit: float = 0.0
    clock_hz: float = 102.645e6                    # fitted on the CONV1-forward anchor

    def __post_init__(self):
        if min(self.nvm_write_latency_s, self.nvm_read_latency_s,
               self.nvm_write_energy_j_per_bit, self.nvm_read_energy_j_per_bit,
               self.clock_hz) <= 0:
            raise ParameterError("NVM parameters and clock must be positive")
        if min(self.sram_read_energy_j_per_bit, self.sram_write_energy_j_per_bit,
               self.rf_access_energy_j_per_bit, self.dram_link_energy_j_per_bit) < 0:
            raise ParameterError("per-bit energies must be >= 0")
        if self.nvm_write_energy_j_per_bit <= self.nvm_read_energy_j_per_bit:
            raise ParameterError("NVM write energy must exceed read energy")
        if self.nvm_write_latency_s <= self.nvm_read_latency_s:
            raise ParameterError("NVM write latency must exceed read latency")


@dataclass(frozen=True)
class ComputeEnergyParams:
    mac_energy_j: float = 5.06e-14      # fitted
    comparator_energy_j: float = 0.05e-12
    pe_static_power_w: float = 5.814e-3  # fitted; matches the ~6 mW/PE the table implies

    def __post_init__(self):
        if min(self.mac_energy_j, self.comparator_energy_j, self.pe_static_power_w) < 0:
            raise ParameterError("compute energy parameters must be >= 0")


@dataclass(frozen=True)
class TrafficReport:
    nvm_read_bits: int = 0
    nvm_write_bits: int = 0
    sram_read_bits: int = 0
    sram_write_bits: int = 0
    offchip_bits: int = 0

    def __add__(self, other: "TrafficReport") -> "TrafficReport":
        return TrafficReport(*(a + b for a, b in zip(self._tuple(), other._tuple())))

    def _tuple(self):
        return (self.nvm_read_bits, self.nvm_write_bits, self.sram_read_bits,
                self.sram_write_bits, self.offchip_bits)


@dataclass(frozen=True)
class CostReport:
    layer: str
    phase: str
    latency_s: float
    energy_j: float
    active_pes: int
    traffic: TrafficReport
    cycles: int = 0
    nvm_seconds: float = 0.0
    utilization: float = 1.0
    macs: int = 0
    comparator_ops: int = 0

    @property
    def avg_power_w(self) -> float:
        return self.energy_j / self.latency_s if self.latency_s > 0 else 0.0


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def _comparator_ops(shape: ShapeInfo, layer) -> int:
    ops = 0
    if layer.activation:
        ops += shape.out_h * shape.out_w * shape.out_channels
    if getattr(layer, "pool", None) is not None:
        window = layer.pool.size * layer.pool.size
        ops += shape.pooled_h * shape.pooled_w * shape.out_channels * (window - 1)
    return ops


def layer_cost(plan: MappingPlan, shape: ShapeInfo, layer, mem: MemoryTechParams,
               comp: ComputeEnergyParams, pe: PEArrayConfig) -> CostReport:
    """Cost one layer+phase given its mapping plan."""
    if mem is None or comp is None:
        raise ParameterError("memory and compute parameters are required")

    bus = plan.stream_link_bits
    width_frac = (plan.sets * plan.segment_cols) / pe.cols if plan.phase == FORWARD_CONV \
        else plan.segment_cols / pe.cols
    bubble = pe.pass_overhead_cycles * min(1.0, width_frac)

    load = _ceil_div(plan.traffic.gbuf_to_rf, bus)
    drain = _ceil_div(plan.traffic.rf_to_gbuf, bus)
    per_pass_macs = plan.full_pass_macs * plan.vectors_per_pass
    compute = plan.passes * _ceil_div(per_pass_macs, plan.active_pes * pe.macs_per_pe)

    cmp_ops = 0
    if plan.phase in (FORWARD_CONV, FORWARD_FC):
        cmp_ops = _comparator_ops(shape, layer)
    cmp_cycles = _ceil_div(cmp_ops, plan.active_pes * pe.comparators_per_pe) if cmp_ops else 0

    cycles = load + drain + compute + cmp_cycles + int(round(plan.passes * bubble))

    wg_macs = 0
    if plan.weight_grad is not None:
        wg = plan.weight_grad
        cycles += _ceil_div(wg.traffic.gbuf_to_rf, bus)
        cycles += _ceil_div(wg.traffic.rf_to_gbuf, bus)
        cycles += wg.passes + int(round(wg.passes * bubble))
        wg_macs = wg.traffic.rf_to_gbuf // 16  # one multiply per gradient element

    nvm_seconds = plan.traffic.nvm_to_gbuf / pe.nvm_bandwidth_bits_per_s \
        + plan.nvm_weight_passes * mem.nvm_read_latency_s
    latency = max(cycles / mem.clock_hz, nvm_seconds)

    wg_traffic = plan.weight_grad.traffic if plan.weight_grad is not None else None
    internal = plan.traffic.gbuf_internal
    sram_read = plan.traffic.gbuf_to_rf - plan.traffic.nvm_to_gbuf + internal
    sram_write = plan.traffic.rf_to_gbuf + internal
    if wg_traffic is not None:
        sram_read += wg_traffic.gbuf_to_rf + wg_traffic.gbuf_internal
        sram_write += wg_traffic.rf_to_gbuf + wg_traffic.gbuf_internal

    traffic = TrafficReport(
        nvm_read_bits=plan.traffic.nvm_to_gbuf,
        sram_read_bits=sram_read,
        sram_write_bits=sram_write,
    )
    macs = plan.actual_macs + wg_macs
    util = min(1.0, plan.actual_macs / (plan.passes * max(1, per_pass_macs)))

    energy = (traffic.nvm_read_bits * mem.nvm_read_energy_j_per_bit
              + traffic.sram_read_bits * mem.sram_read_energy_j_per_bit
              + traffic.sram_write_bits * mem.sram_write_energy_j_per_bit
              + plan.traffic.inter_pe * mem.rf_access_energy_j_per_bit
              + macs * comp.mac_energy_j
              + cmp_ops * comp.comparator_energy_j
              + latency * plan.active_pes * comp.pe_static_power_w)

    return CostReport(plan.layer, plan.phase, latency, energy, plan.active_pes,
                      traffic, cycles, nvm_seconds, util, macs, cmp_ops)


@dataclass(frozen=True)
class PhaseTotals:
    latency_s: float = 0.0
    energy_j: float = 0.0
    traffic: TrafficReport = field(default_factory=TrafficReport)

    def __add__(self, other: "PhaseTotals") -> "PhaseTotals":
        return PhaseTotals(self.latency_s + other.latency_s,
                           self.energy_j + other.energy_j,
                           self.traffic + other.traffic)


def sum_reports(reports) -> PhaseTotals:
    total = PhaseTotals()
    for r in reports:
        total = total + PhaseTotals(r.latency_s, r.energy_j, r.traffic)
    return total


@dataclass(frozen=True)
class TrainingCost:
    policy: TrainingPolicy
    batch_size: int
    per_image_forward: PhaseTotals
    per_image_backward: PhaseTotals
    weight_update: PhaseTotals
    forward_reports: tuple[CostReport, ...]
    backward_reports: tuple[CostReport, ...]

    @property
    def iteration_latency_s(self) -> float:
        return self.batch_size * (self.per_image_forward.latency_s
                                  + self.per_image_backward.latency_s) \
            + self.weight_update.latency_s

    @property
    def iteration_energy_j(self) -> float:
        return self.batch_size * (self.per_image_forward.energy_j
                                  + self.per_image_backward.energy_j) \
            + self.weight_update.energy_j

    @property
    def fps(self) -> float:
        return self.batch_size / self.iteration_latency_s

    @property
    def nvm_write_bits(self) -> int:
        return self.weight_update.traffic.nvm_write_bits

    @property
    def per_image_train_latency_s(self) -> float:
        return self.iteration_latency_s / self.batch_size

    @property
    def per_image_train_energy_j(self) -> float:
        return self.iteration_energy_j / self.batch_size


def phase_costs(net: NetworkSpec, policy: TrainingPolicy, phase: str,
                placement: PlacementMap, mem: MemoryTechParams,
                comp: ComputeEnergyParams, pe: PEArrayConfig) -> list[CostReport]:
    """Per-layer cost reports for one forward or backward pass."""
    shapes = {s.name: s for s in infer_shapes(net)}
    pb = net.weight_precision_bits
    reports = []
    if phase == "forward":
        layers = net.layers
    else:
        layers = tuple(reversed(trainable_layers(net, policy)))
    for layer in layers:
        nvm = placement.is_nvm(layer.name)
        if phase == "forward":
            if layer.kind == CONV:
                plan = plan_conv_forward(layer, shapes[layer.name], pe, pb, nvm)
            else:
                plan = plan_fc_forward(layer, shapes[layer.name], pe, pb, nvm)
        else:
            if layer.kind == FC:
                plan = plan_fc_backward(layer, shapes[layer.name], pe, pb, nvm)
            else:
                plan = plan_conv_backward_gemm(layer, shapes[layer.name], pe, policy,
                                               pb, placement.scratch_bytes)
        reports.append(layer_cost(plan, shapes[layer.name], layer, mem, comp, pe))
    return reports


def _gradient_accumulation_cost(net, policy, mem, comp, pe) -> PhaseTotals:
    """One read-modify-write of every trainable layer's gradient accumulator.

    The accumulator lives in the global buffer, so the pass costs SRAM energy
    and traffic but no array-bus cycles (it overlaps the gradient streams).
    """
    bits = sum(layer_footprint_bytes(l, net.weight_precision_bits) * 8
               for l in trainable_layers(net, policy))
    energy = bits * (mem.sram_read_energy_j_per_bit + mem.sram_write_energy_j_per_bit)
    return PhaseTotals(0.0, energy, TrafficReport(sram_read_bits=bits, sram_write_bits=bits))


def _weight_update_cost(net, policy, placement, mem, comp, pe) -> PhaseTotals:
    """Write each trainable layer's weights once to its placement target."""
    total = PhaseTotals()
    for layer in trainable_layers(net, policy):
        bits = layer_footprint_bytes(layer, net.weight_precision_bits) * 8
        # gradients are read back from the accumulator either way
        grad_read = PhaseTotals(_ceil_div(bits, pe.gbuf_row_links) / mem.clock_hz,
                                bits * mem.sram_read_energy_j_per_bit,
                                TrafficReport(sram_read_bits=bits))
        if placement.is_nvm(layer.name):
            latency = bits / pe.nvm_bandwidth_bits_per_s + mem.nvm_write_latency_s
            write = PhaseTotals(latency, bits * mem.nvm_write_energy_j_per_bit,
                                TrafficReport(nvm_write_bits=bits))
        else:
            latency = _ceil_div(bits, pe.gbuf_row_links) / mem.clock_hz
            write = PhaseTotals(latency, bits * mem.sram_write_energy_j_per_bit,
                                TrafficReport(sram_write_bits=bits))
        total = total + grad_read + write
    return total


def iteration_cost(net: NetworkSpec, policy: TrainingPolicy, batch_size: int,
                   placement: PlacementMap, mem: MemoryTechParams,
                   comp: ComputeEnergyParams, pe: PEArrayConfig) -> TrainingCost:
    """Cost of one training iteration: N serial images then one weight update."""
    if batch_size < 1:
        raise ConfigError(f"batch size must be >= 1, got {batch_size}")
    fwd = phase_costs(net, policy, "forward", placement, mem, comp, pe)
    bwd = phase_costs(net, policy, "backward", placement, mem, comp, pe)
    per_image_backward = sum_reports(bwd) + _gradient_accumulation_cost(net, policy, mem, comp, pe)
    return TrainingCost(
        policy=policy, batch_size=batch_size,
        per_image_forward=sum_reports(fwd),
        per_image_backward=per_image_backward,
        weight_update=_weight_update_cost(net, policy, placement, mem, comp, pe),
        forward_reports=tuple(fwd), backward_reports=tuple(bwd),
    )


@dataclass(frozen=True)
class PolicyComparison:
    policy: TrainingPolicy
    latency_reduction: float   # 1 - policy / e2e, per-image training cost
    energy_reduction: float
    per_image_latency_s: float
    per_image_energy_j: float


def compare_policies(net: NetworkSpec, policies, batch_size: int,
                     placements: dict[str, PlacementMap], mem: MemoryTechParams,
                     comp: ComputeEnergyParams, pe: PEArrayConfig) -> list[PolicyComparison]:
    """Per-image training latency/energy reductions of each policy vs the E2E baseline."""
    policies = list(policies)
    if len(policies) < 2 or not any(p.variant == "e2e" for p in policies):
        raise ConfigError("comparison needs at least two policies including e2e")
    costs = {p.label: iteration_cost(net, p, batch_size, placements[p.label], mem, comp, pe)
             for p in policies}
    base = next(c for c in costs.values() if c.policy.variant == "e2e")
    out = []
    for p in policies:
        c = costs[p.label]
        out.append(PolicyComparison(
            policy=p,
            latency_reduction=1.0 - c.per_image_train_latency_s / base.per_image_train_latency_s,
            energy_reduction=1.0 - c.per_image_train_energy_j / base.per_image_train_energy_j,
            per_image_latency_s=c.per_image_train_latency_s,
            per_image_energy_j=c.per_image_train_energy_j,
        ))
    return out


def fps_sweep(net: NetworkSpec, policies, batch_sizes,
              placements: dict[str, PlacementMap], mem: MemoryTechParams,
              comp: ComputeEnergyParams, pe: PEArrayConfig) -> list[dict]:
    """Maximum supported frame rate per (policy, batch size)."""
    batch_sizes = list(batch_sizes)
    if not batch_sizes:
        raise ConfigError("batch range is empty")
    records = []
    for policy in policies:
        for n in batch_sizes:
            cost = iteration_cost(net, policy, n, placements[policy.label], mem, comp, pe)
            records.append({
                "policy": policy.label,
                "batch": n,
                "fps": cost.fps,
                "iteration_latency_ms": cost.iteration_latency_s * 1e3,
                "iteration_energy_mj": cost.iteration_energy_j * 1e3,
            })
    return records
