"""Maps layers onto the PE array: segments, sets, passes and data movement.

Conv forward uses a row-stationary scheme: each filter row is pinned to one
PE row, so a segment is filter_h rows tall, and each PE column produces one
output row per pass. The mapping type falls out of two questions:

  * do one filter row and one input row fit a register file with all input
    channels resident (no split -> Type I)?
  * if channels must be split, does more than one column-group of segments
    fit side by side so the splits can run concurrently (Type III) or must
    the splits take turns on a single group (Type II)?

Column groups ("sets") sit next to each other horizontally; a Type III merge
forwards set 2's partial results to set 1 to finish the accumulation.

Traffic accounting assumes each input row is loaded once per segment and
reused diagonally inside it, weights stay resident across row passes, and
global-buffer streams ride the 128-bit column links (so a mapping using only
26 of the 32 columns moves 26*128 bits per cycle). FC tile fills stripe the
full row bus instead.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import PolicyViolationError, UnmappableError
from .netspec import (CONV, FC, LayerSpec, NetworkSpec, ShapeInfo, TrainingPolicy,
                      infer_shapes, trainable_layers)

FORWARD_CONV = "forward_conv"
FORWARD_FC = "forward_fc"
BACKWARD_FC = "backward_fc"
BACKWARD_CONV_GEMM = "backward_conv_gemm"

TYPE_I = "type_i"
TYPE_II = "type_ii"
TYPE_III = "type_iii"
FC_GRID = "fc_grid"
FC_TRANSPOSED_GRID = "fc_transposed_grid"


@dataclass(frozen=True)
class PEArrayConfig:
    rows: int = 32
    cols: int = 32
    macs_per_pe: int = 8
    comparators_per_pe: int = 8
    rf_bytes: int = 4608            # 4.5 KB register file per PE
    link_bits: int = 128            # per-PE link width
    gbuf_row_links: int = 4096      # wires from global buffer into the first PE row
    nvm_io_lanes: int = 1024
    nvm_io_bandwidth_bits_per_s: float = 2e9   # per lane
    rf_weight_fraction: float = 0.50           # RF share reserved for filter rows
    rf_input_fraction: float = 0.35
    pass_overhead_cycles: float = 5.25         # pipeline fill/drain bubble per full-width pass
    type3_segment_cols: int | None = None      # None = widest that fits; set 10 for narrow variant

    def __post_init__(self):
        for name in ("rows", "cols", "macs_per_pe", "comparators_per_pe", "rf_bytes",
                     "link_bits", "gbuf_row_links", "nvm_io_lanes"):
            if getattr(self, name) < 1:
                raise UnmappableError(f"PE array config field {name} must be >= 1")

    @property
    def total_pes(self) -> int:
        return self.rows * self.cols

    @property
    def nvm_bandwidth_bits_per_s(self) -> float:
        return self.nvm_io_lanes * self.nvm_io_bandwidth_bits_per_s


@dataclass(frozen=True)
class Traffic:
    """Whole-layer traffic totals in bits for one phase.

    `gbuf_internal` covers read-modify-write accumulation that happens at the
    buffer's own ports (gradient sums); it costs SRAM energy but never crosses
    the array bus, so it contributes no stream cycles.
    """

    gbuf_to_rf: int = 0
    rf_to_gbuf: int = 0
    inter_pe: int = 0
    nvm_to_gbuf: int = 0
    gbuf_internal: int = 0

    def scaled(self, factor: float) -> "Traffic":
        return Traffic(*(int(round(v * factor)) for v in
                         (self.gbuf_to_rf, self.rf_to_gbuf, self.inter_pe,
                          self.nvm_to_gbuf, self.gbuf_internal)))


@dataclass(frozen=True)
class OuterProductPlan:
    """Weight-gradient outer product: one multiply per PE, results stream out."""

    passes: int
    active_pes: int
    traffic: Traffic
    nvm_writeback_bits: int  # weight bits written back to NVM at update time, if NVM-resident


@dataclass(frozen=True)
class MappingPlan:
    layer: str
    phase: str
    mapping_type: str
    sets: int
    segments_per_set: int
    segment_rows: int
    segment_cols: int
    active_pes: int
    passes: int
    input_rows_per_pass: int
    channel_splits: int
    traffic: Traffic
    full_pass_macs: int          # nominal MACs of one full-width pass (latency accounting)
    actual_macs: int             # exact layer MACs (energy accounting)
    stream_link_bits: int        # gbuf stream width available to this mapping
    nvm_weight_passes: int       # passes that fetch weights from NVM (0 if SRAM-resident)
    weight_grad: OuterProductPlan | None = None
    vectors_per_pass: int = 1    # GEMM backprop streams one vector per spatial position

    @property
    def per_pass_traffic(self) -> Traffic:
        return self.traffic.scaled(1.0 / self.passes)


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def _conv_channel_splits(layer: LayerSpec, shape: ShapeInfo, pe: PEArrayConfig,
                         precision_bytes: int) -> int:
    """Smallest channel split whose single-filter working set fits one RF."""
    psum_row = shape.out_w * precision_bytes
    for splits in range(1, layer.in_channels + 1):
        ch = _ceil_div(layer.in_channels, splits)
        weight_row = layer.filter_w * ch * precision_bytes
        input_row = shape.in_w * ch * precision_bytes
        if weight_row + input_row + psum_row <= pe.rf_bytes:
            return splits
    raise UnmappableError(f"{layer.name}: one channel of one filter row exceeds the RF")


def plan_conv_forward(layer: LayerSpec, shape: ShapeInfo, pe: PEArrayConfig,
                      precision_bits: int = 16, nvm_resident: bool = True) -> MappingPlan:
    if layer.kind != CONV:
        raise UnmappableError(f"{layer.name} is not a conv layer")
    if layer.filter_h > pe.rows:
        raise UnmappableError(
            f"{layer.name}: filter height {layer.filter_h} exceeds the {pe.rows}-row array"
        )
    pb = precision_bits // 8

    splits = _conv_channel_splits(layer, shape, pe, pb)
    ch_per_split = _ceil_div(layer.in_channels, splits)

    segment_rows = layer.filter_h
    segment_cols = min(pe.cols, shape.out_h)
    segments = min(pe.rows // segment_rows, layer.out_channels)
    sets = max(1, min(pe.cols // segment_cols, splits))
    if sets > 1 and pe.type3_segment_cols:
        segment_cols = min(pe.type3_segment_cols, segment_cols)
        sets = max(1, min(pe.cols // segment_cols, splits))

    if splits == 1:
        mapping_type = TYPE_I
    elif sets == 1:
        mapping_type = TYPE_II
    else:
        mapping_type = TYPE_III

    # Output channels staged per segment: bounded by the RF weight share, then
    # shrunk so filter passes divide the channels evenly.
    weight_budget = int(pe.rf_weight_fraction * pe.rf_bytes)
    row_bytes = layer.filter_w * ch_per_split * pb
    cps_max = max(1, weight_budget // row_bytes)
    filter_passes = _ceil_div(layer.out_channels, segments * cps_max)
    cps = _ceil_div(layer.out_channels, segments * filter_passes)

    row_passes = _ceil_div(shape.out_h, segment_cols)
    rounds = _ceil_div(splits, sets)
    passes = row_passes * filter_passes * rounds

    active = sets * segments * segment_rows * segment_cols
    irpp = (segment_cols - 1) * layer.stride + layer.filter_h

    # Padded rows are streamed as explicit zeros; the final row pass clips to
    # the padded input extent.
    padded_rows = shape.in_h + 2 * layer.padding
    streamed_rows = 0
    for rp in range(row_passes):
        start = rp * segment_cols * layer.stride
        streamed_rows += min(irpp, max(0, padded_rows - start))
    in_width = shape.in_w + 2 * layer.padding

    input_bits = (streamed_rows * in_width * ch_per_split * precision_bits
                  * segments * sets * filter_passes * rounds)
    weight_bits_per_visit = segments * cps * layer.filter_h * layer.filter_w \
        * ch_per_split * sets * precision_bits
    weight_visits = filter_passes * rounds  # row passes reuse RF-resident weights
    weight_bits = weight_bits_per_visit * weight_visits

    out_bits = shape.out_h * shape.out_w * layer.out_channels * precision_bits
    drain_bits = out_bits * rounds                      # partials drain every round
    merge_reload_bits = out_bits * (rounds - 1)         # partials reload to merge
    inter_pe = (out_bits * (segment_rows - 1)           # vertical psum hops
                + out_bits * (sets - 1))                # cross-set merge (Type III)

    traffic = Traffic(
        gbuf_to_rf=input_bits + weight_bits + merge_reload_bits,
        rf_to_gbuf=drain_bits,
        inter_pe=inter_pe,
        nvm_to_gbuf=weight_bits if nvm_resident else 0,
    )

    full_pass_macs = (segment_cols * shape.out_w * segments * cps
                      * layer.filter_h * layer.filter_w * ch_per_split * sets)

    return MappingPlan(
        layer=layer.name, phase=FORWARD_CONV, mapping_type=mapping_type,
        sets=sets, segments_per_set=segments,
        segment_rows=segment_rows, segment_cols=segment_cols,
        active_pes=active, passes=passes, input_rows_per_pass=irpp,
        channel_splits=splits, traffic=traffic,
        full_pass_macs=full_pass_macs, actual_macs=shape.macs,
        stream_link_bits=min(pe.gbuf_row_links, pe.link_bits * sets * segment_cols),
        nvm_weight_passes=weight_visits if nvm_resident else 0,
    )


def _fc_grid_geometry(in_dim: int, out_dim: int, pe: PEArrayConfig):
    in_tiles = _ceil_div(in_dim, pe.rows)
    out_tiles = _ceil_div(out_dim, pe.cols)
    rows_used = min(pe.rows, in_dim)
    cols_used = min(pe.cols, out_dim)
    return in_tiles, out_tiles, rows_used, cols_used


def plan_fc_forward(layer: LayerSpec, shape: ShapeInfo, pe: PEArrayConfig,
                    precision_bits: int = 16, nvm_resident: bool = False) -> MappingPlan:
    if layer.kind != FC:
        raise UnmappableError(f"{layer.name} is not an FC layer")
    in_tiles, out_tiles, rows_used, cols_used = _fc_grid_geometry(layer.in_dim, layer.out_dim, pe)
    passes = in_tiles * out_tiles
    active = rows_used * cols_used

    weight_bits = layer.in_dim * layer.out_dim * precision_bits
    vector_bits = layer.in_dim * precision_bits * out_tiles      # rebroadcast per output tile
    drain_bits = layer.out_dim * precision_bits * in_tiles       # partials drain per input tile
    merge_bits = layer.out_dim * precision_bits * (in_tiles - 1)
    inter_pe = layer.out_dim * precision_bits * (rows_used - 1)  # vertical accumulation hops

    traffic = Traffic(
        gbuf_to_rf=weight_bits + vector_bits + merge_bits,
        rf_to_gbuf=drain_bits,
        inter_pe=inter_pe,
        nvm_to_gbuf=weight_bits if nvm_resident else 0,
    )
    return MappingPlan(
        layer=layer.name, phase=FORWARD_FC, mapping_type=FC_GRID,
        sets=1, segments_per_set=1, segment_rows=rows_used, segment_cols=cols_used,
        active_pes=active, passes=passes, input_rows_per_pass=0,
        channel_splits=1, traffic=traffic,
        full_pass_macs=rows_used * cols_used, actual_macs=shape.macs,
        stream_link_bits=pe.gbuf_row_links,
        nvm_weight_passes=passes if nvm_resident else 0,
    )


def plan_fc_backward(layer: LayerSpec, shape: ShapeInfo, pe: PEArrayConfig,
                     precision_bits: int = 16, nvm_resident: bool = False) -> MappingPlan:
    """Vector-transposed-matrix product plus the weight-gradient outer product.

    The transposed product reuses the forward tiling (the gradient vector
    propagates column-wise, partials accumulate row-wise), so active PEs and
    pass counts match the forward plan exactly. The outer product is carried
    as a companion plan: each PE forms one activation*gradient term and the
    results stream straight to the global buffer without accumulation.
    """
    fwd = plan_fc_forward(layer, shape, pe, precision_bits, nvm_resident)

    in_tiles, out_tiles, rows_used, cols_used = _fc_grid_geometry(layer.in_dim, layer.out_dim, pe)
    grad_bits = layer.in_dim * layer.out_dim * precision_bits
    outer_traffic = Traffic(
        gbuf_to_rf=(layer.in_dim * precision_bits * out_tiles
                    + layer.out_dim * precision_bits * in_tiles),
        rf_to_gbuf=grad_bits,       # products stream out with no in-array accumulation
        inter_pe=0,
        nvm_to_gbuf=0,
        gbuf_internal=grad_bits,    # summed into the gradient accumulator in place
    )
    outer = OuterProductPlan(
        passes=in_tiles * out_tiles,
        active_pes=rows_used * cols_used,
        traffic=outer_traffic,
        nvm_writeback_bits=grad_bits if nvm_resident else 0,
    )
    return replace(fwd, phase=BACKWARD_FC, mapping_type=FC_TRANSPOSED_GRID, weight_grad=outer)


def im2col_dims(layer: LayerSpec, shape: ShapeInfo) -> tuple[int, int]:
    """Expanded input matrix dims: (filter_h*filter_w*in_channels, out_h*out_w)."""
    return (layer.filter_h * layer.filter_w * layer.in_channels,
            shape.out_h * shape.out_w)


def plan_conv_backward_gemm(layer: LayerSpec, shape: ShapeInfo, pe: PEArrayConfig,
                            policy: TrainingPolicy, precision_bits: int = 16,
                            scratch_bytes: int = 4_200_000) -> MappingPlan:
    """Conv backprop as GEMM over the im2col expansion (baseline training only).

    Each output position delegates to the FC backward machinery on the
    expanded matrices: its expansion column and loss-gradient column form one
    vector-transposed-matrix product plus one outer product. The outer product
    emits a full weight-shaped gradient contribution per position with no
    in-array accumulation, so the product stream back to the global buffer
    (weight bits times positions) dominates the cost; the running gradient sum
    is folded in at the buffer ports (energy, no bus cycles).

    The expansion is staged through the scratchpad; when it does not fit, the
    work splits into chunks and the NVM-resident conv weights are re-read once
    per chunk.
    """
    if layer.kind != CONV:
        raise UnmappableError(f"{layer.name} is not a conv layer")
    if policy.variant != "e2e":
        raise PolicyViolationError(
            f"conv backprop for {layer.name} requested under policy {policy.label}; "
            "conv layers train only in the E2E baseline"
        )
    pb = precision_bits // 8
    exp_rows, positions = im2col_dims(layer, shape)
    exp_bits = exp_rows * positions * precision_bits

    # Scratch co-hosts the expansion with staged weights/partials; the
    # expansion gets half the scratchpad.
    chunk_budget_bits = (scratch_bytes // 2) * 8
    chunks = max(1, _ceil_div(exp_bits, chunk_budget_bits))

    in_tiles, out_tiles, rows_used, cols_used = _fc_grid_geometry(exp_rows, layer.out_channels, pe)
    passes = in_tiles * out_tiles * chunks

    weight_bits = layer.weight_count * precision_bits
    weight_read_bits = weight_bits * chunks            # re-fetched per scratch chunk
    delta_bits = positions * layer.out_channels * precision_bits
    input_map_bits = shape.in_h * shape.in_w * layer.in_channels * precision_bits
    grad_stream_bits = weight_bits * positions         # per-position outer products

    # Operand tiles re-stream per tile pass: expansion columns once per
    # output-channel tile, gradient columns once per expansion-row tile for
    # each of the two GEMMs.
    gbuf_to_rf = (weight_read_bits + input_map_bits
                  + exp_bits * (1 + out_tiles)
                  + delta_bits * 2 * in_tiles)
    rf_to_gbuf = (exp_bits            # expansion write to scratch
                  + grad_stream_bits  # weight-gradient product stream
                  + exp_bits          # input gradient, expansion layout
                  + input_map_bits)   # input gradient folded back to map layout
    traffic = Traffic(
        gbuf_to_rf=gbuf_to_rf,
        rf_to_gbuf=rf_to_gbuf,
        inter_pe=delta_bits * (rows_used - 1),
        nvm_to_gbuf=weight_read_bits,
        gbuf_internal=grad_stream_bits + input_map_bits,  # gradient sums, fold-back adds
    )
    outer = OuterProductPlan(
        passes=passes,
        active_pes=rows_used * cols_used,
        traffic=Traffic(),          # folded into the main plan above
        nvm_writeback_bits=weight_bits,
    )
    return MappingPlan(
        layer=layer.name, phase=BACKWARD_CONV_GEMM, mapping_type=FC_TRANSPOSED_GRID,
        sets=1, segments_per_set=1, segment_rows=rows_used, segment_cols=cols_used,
        active_pes=rows_used * cols_used, passes=passes, input_rows_per_pass=0,
        channel_splits=chunks, traffic=traffic,
        full_pass_macs=rows_used * cols_used, actual_macs=2 * shape.macs,
        stream_link_bits=pe.gbuf_row_links,
        nvm_weight_passes=passes,
        weight_grad=outer,
        vectors_per_pass=_ceil_div(positions, chunks),
    )


def plan_phase(net: NetworkSpec, policy: TrainingPolicy, phase: str, pe: PEArrayConfig,
               nvm_layers: set[str] | None = None,
               scratch_bytes: int = 4_200_000) -> list[MappingPlan]:
    """Plans for a whole forward or backward pass under a policy.

    Forward covers every layer; backward covers trainable layers in reverse
    order. `nvm_layers` marks which layers' weights live in NVM (defaults to
    conv layers plus the first two FC layers).
    """
    shapes = {s.name: s for s in infer_shapes(net)}
    if nvm_layers is None:
        fc_names = [l.name for l in net.fc_layers]
        nvm_layers = {l.name for l in net.layers if l.kind == CONV} | set(fc_names[:2])
    pb = net.weight_precision_bits

    plans: list[MappingPlan] = []
    if phase == "forward":
        for layer in net.layers:
            nvm = layer.name in nvm_layers
            if layer.kind == CONV:
                plans.append(plan_conv_forward(layer, shapes[layer.name], pe, pb, nvm))
            else:
                plans.append(plan_fc_forward(layer, shapes[layer.name], pe, pb, nvm))
    elif phase == "backward":
        for layer in reversed(trainable_layers(net, policy)):
            nvm = layer.name in nvm_layers
            if layer.kind == FC:
                plans.append(plan_fc_backward(layer, shapes[layer.name], pe, pb, nvm))
            else:
                plans.append(plan_conv_backward_gemm(layer, shapes[layer.name], pe, policy,
                                                     pb, scratch_bytes))
    else:
        raise UnmappableError(f"unknown phase {phase!r}")
    return plans


# Figure-reported CONV2..CONV5 forward PE counts disagree with the geometry
# derived from the mapping text (six 5x27 segments -> 810; 2 sets of ten 3x13
# segments -> 780). The text-derived counts are authoritative here.
FIGURE_CONV_ACTIVE_PES = 960


def conv_active_pe_conflict_note(plan: MappingPlan) -> str | None:
    if plan.phase == FORWARD_CONV and plan.mapping_type in (TYPE_II, TYPE_III):
        return (f"{plan.layer}: text-derived geometry gives {plan.active_pes} active PEs; "
                f"the published per-layer table lists {FIGURE_CONV_ACTIVE_PES} "
                "(documented, unreconciled conflict)")
    return None
