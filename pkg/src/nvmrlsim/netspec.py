"""CNN topology description, shape inference, weight footprints and memory placement.

The default network is a ten-layer AlexNet-style CNN (five conv, five FC).
Only CONV1's full geometry and a handful of per-group byte totals are public
knowledge for this design, so the FC widths and the pool/padding schedule are
a reconstruction chosen to reproduce those byte totals; every dimension can be
overridden through the network config file.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import CapacityError, ConfigError

CONV = "conv"
FC = "fc"

NVM = "nvm"
SRAM = "sram"


@dataclass(frozen=True)
class Pool:
    size: int
    stride: int


@dataclass(frozen=True)
class LayerSpec:
    """One conv or fully-connected layer (pool/activation fused in)."""

    name: str
    kind: str
    filter_h: int = 0
    filter_w: int = 0
    in_channels: int = 0
    out_channels: int = 0
    stride: int = 1
    padding: int = 0
    in_dim: int = 0
    out_dim: int = 0
    activation: str | None = "relu"
    pool: Pool | None = None

    def __post_init__(self):
        if self.kind == CONV:
            if min(self.filter_h, self.filter_w, self.stride) < 1:
                raise ConfigError(f"{self.name}: conv filter dims and stride must be >= 1")
            if min(self.in_channels, self.out_channels) < 1:
                raise ConfigError(f"{self.name}: conv channel counts must be >= 1")
            if self.padding < 0:
                raise ConfigError(f"{self.name}: padding must be >= 0")
        elif self.kind == FC:
            if min(self.in_dim, self.out_dim) < 1:
                raise ConfigError(f"{self.name}: fc dims must be >= 1")
        else:
            raise ConfigError(f"{self.name}: unknown layer kind {self.kind!r}")

    @property
    def weight_count(self) -> int:
        if self.kind == CONV:
            return self.filter_h * self.filter_w * self.in_channels * self.out_channels
        return self.in_dim * self.out_dim

    @property
    def bias_count(self) -> int:
        return self.out_channels if self.kind == CONV else self.out_dim


@dataclass(frozen=True)
class NetworkSpec:
    input_h: int = 224
    input_w: int = 224
    input_channels: int = 3
    layers: tuple[LayerSpec, ...] = ()
    weight_precision_bits: int = 16
    action_space_size: int = 5

    def __post_init__(self):
        if not self.layers:
            raise ConfigError("network has no layers")
        last = self.layers[-1]
        if last.kind == FC and last.out_dim != self.action_space_size:
            raise ConfigError(
                f"final layer {last.name} emits {last.out_dim} values, "
                f"expected action-space size {self.action_space_size}"
            )

    @property
    def fc_layers(self) -> tuple[LayerSpec, ...]:
        return tuple(l for l in self.layers if l.kind == FC)

    def layer(self, name: str) -> LayerSpec:
        for l in self.layers:
            if l.name == name:
                return l
        raise ConfigError(f"no layer named {name!r}")


@dataclass(frozen=True)
class TrainingPolicy:
    """E2E trains every layer; LastK(k) trains only the k trailing layers."""

    variant: str  # "e2e" or "lastk"
    k: int = 0

    def __post_init__(self):
        if self.variant not in ("e2e", "lastk"):
            raise ConfigError(f"unknown policy variant {self.variant!r}")
        if self.variant == "lastk" and self.k < 1:
            raise ConfigError("lastk policy requires k >= 1")

    @classmethod
    def e2e(cls) -> "TrainingPolicy":
        return cls("e2e")

    @classmethod
    def last_k(cls, k: int) -> "TrainingPolicy":
        return cls("lastk", k)

    @classmethod
    def parse(cls, text: str) -> "TrainingPolicy":
        t = text.strip().lower()
        if t == "e2e":
            return cls.e2e()
        if t.startswith("l") and t[1:].isdigit():
            return cls.last_k(int(t[1:]))
        raise ConfigError(f"cannot parse policy {text!r} (expected e2e, l2, l3, ...)")

    @property
    def label(self) -> str:
        return "E2E" if self.variant == "e2e" else f"L{self.k}"


@dataclass(frozen=True)
class ShapeInfo:
    """Resolved geometry of one layer inside a network."""

    name: str
    kind: str
    in_h: int
    in_w: int
    in_channels: int
    out_h: int
    out_w: int
    out_channels: int
    pooled_h: int
    pooled_w: int
    macs: int
    weight_count: int

    @property
    def input_shape(self):
        return (self.in_h, self.in_w, self.in_channels)

    @property
    def output_shape(self):
        return (self.pooled_h, self.pooled_w, self.out_channels)


def _conv_out(extent: int, filt: int, stride: int, pad: int) -> int:
    out = (extent + 2 * pad - filt) // stride + 1
    if out < 1:
        raise ConfigError(f"conv output extent {out} < 1 (input {extent}, filter {filt})")
    return out


def infer_shapes(net: NetworkSpec) -> list[ShapeInfo]:
    """Walk the layer chain and resolve every layer's geometry and MAC count."""
    shapes: list[ShapeInfo] = []
    h, w, c = net.input_h, net.input_w, net.input_channels
    flat = h * w * c
    prev = "input"
    for layer in net.layers:
        if layer.kind == CONV:
            if c != layer.in_channels:
                raise ConfigError(
                    f"shape chain mismatch between {prev} and {layer.name}: "
                    f"{c} channels flowing into a layer expecting {layer.in_channels}"
                )
            oh = _conv_out(h, layer.filter_h, layer.stride, layer.padding)
            ow = _conv_out(w, layer.filter_w, layer.stride, layer.padding)
            macs = oh * ow * layer.out_channels * layer.filter_h * layer.filter_w * layer.in_channels
            ph, pw = oh, ow
            if layer.pool is not None:
                ph = _conv_out(oh, layer.pool.size, layer.pool.stride, 0)
                pw = _conv_out(ow, layer.pool.size, layer.pool.stride, 0)
            shapes.append(ShapeInfo(layer.name, CONV, h, w, c, oh, ow, layer.out_channels,
                                    ph, pw, macs, layer.weight_count))
            h, w, c = ph, pw, layer.out_channels
            flat = h * w * c
        else:
            if flat != layer.in_dim:
                raise ConfigError(
                    f"shape chain mismatch between {prev} and {layer.name}: "
                    f"{flat} values flowing into a layer expecting {layer.in_dim}"
                )
            macs = layer.in_dim * layer.out_dim
            shapes.append(ShapeInfo(layer.name, FC, 1, 1, layer.in_dim, 1, 1, layer.out_dim,
                                    1, 1, macs, layer.weight_count))
            flat = layer.out_dim
            h, w, c = 1, 1, layer.out_dim
        prev = layer.name
    return shapes


def layer_footprint_bytes(layer: LayerSpec, precision_bits: int) -> int:
    """Weight plus bias storage in bytes (biases stored, never counted as MACs)."""
    bits = (layer.weight_count + layer.bias_count) * precision_bits
    return bits // 8


def weight_footprint(net: NetworkSpec) -> dict[str, int]:
    """Per-layer storage footprint in bytes, keyed by layer name."""
    return {l.name: layer_footprint_bytes(l, net.weight_precision_bits) for l in net.layers}


def total_footprint_bytes(net: NetworkSpec) -> int:
    return sum(weight_footprint(net).values())


def trainable_layers(net: NetworkSpec, policy: TrainingPolicy) -> tuple[LayerSpec, ...]:
    if policy.variant == "e2e":
        return net.layers
    if policy.k > len(net.fc_layers):
        raise ConfigError(
            f"policy {policy.label} trains {policy.k} layers but network has "
            f"only {len(net.fc_layers)} FC layers"
        )
    return net.layers[-policy.k:]


def trainable_fraction(net: NetworkSpec, policy: TrainingPolicy) -> float:
    fp = weight_footprint(net)
    trainable = sum(fp[l.name] for l in trainable_layers(net, policy))
    return trainable / sum(fp.values())


@dataclass(frozen=True)
class PlacementMap:
    """Where each layer's weights live, plus the SRAM budget breakdown."""

    location: dict[str, str]                # layer name -> NVM | SRAM
    nvm_resident_trainable: tuple[str, ...] # trainable layers that did not fit in SRAM
    gradient_buffer_bytes: int
    scratch_bytes: int
    sram_weight_bytes: int
    nvm_weight_bytes: int

    @property
    def sram_total_bytes(self) -> int:
        return self.sram_weight_bytes + self.gradient_buffer_bytes + self.scratch_bytes

    @property
    def nvm_total_bytes(self) -> int:
        return self.nvm_weight_bytes

    def is_nvm(self, name: str) -> bool:
        return self.location[name] == NVM


DEFAULT_SCRATCH_BYTES = 4_200_000  # 4.2 MB scratchpad for staging inputs/weights/partials


def assign_placement(net: NetworkSpec, policy: TrainingPolicy,
                     sram_weight_budget: int,
                     scratch_bytes: int = DEFAULT_SCRATCH_BYTES) -> PlacementMap:
    """Place trailing trainable layers in on-die SRAM, everything else in NVM.

    Trainable layers are packed from the output end while they fit the SRAM
    weight budget. A trainable layer that does not fit is left in NVM and
    flagged; its updates will be charged as NVM writes by the cost model.
    """
    if policy.variant == "lastk" and sram_weight_budget <= 0:
        need = sum(layer_footprint_bytes(l, net.weight_precision_bits)
                   for l in trainable_layers(net, policy))
        raise CapacityError(
            f"policy {policy.label} needs SRAM for trainable weights "
            f"({need} bytes) but the budget is {sram_weight_budget}"
        )

    fp = weight_footprint(net)
    trainable = {l.name for l in trainable_layers(net, policy)}
    location: dict[str, str] = {l.name: NVM for l in net.layers}
    flagged: list[str] = []

    used = 0
    for layer in reversed(net.layers):
        if layer.name not in trainable:
            continue
        if used + fp[layer.name] <= sram_weight_budget:
            location[layer.name] = SRAM
            used += fp[layer.name]
        else:
            flagged.append(layer.name)

    sram_trainable = sum(fp[n] for n, loc in location.items() if loc == SRAM)
    return PlacementMap(
        location=location,
        nvm_resident_trainable=tuple(flagged),
        gradient_buffer_bytes=sram_trainable,  # accumulators mirror SRAM-resident weights
        scratch_bytes=scratch_bytes,
        sram_weight_bytes=sram_trainable,
        nvm_weight_bytes=sum(fp[n] for n, loc in location.items() if loc == NVM),
    )


def default_network() -> NetworkSpec:
    """The reconstructed ten-layer network (see module docstring)."""
    layers = (
        LayerSpec("CONV1", CONV, filter_h=11, filter_w=11, in_channels=3, out_channels=96,
                  stride=4, padding=0, pool=Pool(2, 2)),
        LayerSpec("CONV2", CONV, filter_h=5, filter_w=5, in_channels=96, out_channels=256,
                  stride=1, padding=2, pool=Pool(2, 2)),
        LayerSpec("CONV3", CONV, filter_h=3, filter_w=3, in_channels=256, out_channels=384,
                  stride=1, padding=1),
        LayerSpec("CONV4", CONV, filter_h=3, filter_w=3, in_channels=384, out_channels=384,
                  stride=1, padding=1),
        LayerSpec("CONV5", CONV, filter_h=3, filter_w=3, in_channels=384, out_channels=256,
                  stride=1, padding=1, pool=Pool(2, 2)),
        LayerSpec("FC1", FC, in_dim=9216, out_dim=3456),
        LayerSpec("FC2", FC, in_dim=3456, out_dim=4224),
        LayerSpec("FC3", FC, in_dim=4224, out_dim=960),
        LayerSpec("FC4", FC, in_dim=960, out_dim=2304),
        LayerSpec("FC5", FC, in_dim=2304, out_dim=5, activation=None),
    )
    return NetworkSpec(layers=layers)


def default_sram_weight_budget(net: NetworkSpec) -> int:
    """SRAM weight budget sized for the last three FC layers of the default net."""
    fp = weight_footprint(net)
    return sum(fp[l.name] for l in net.layers[-3:])
