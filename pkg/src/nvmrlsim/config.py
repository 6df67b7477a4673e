"""Config-file ingestion: network description, hardware description, run settings.

One consolidated YAML-style config drives every subcommand; flags override
file values. The repository ships `default_network.cfg` (the reconstructed
ten-layer topology) and `default_hw.cfg` (array geometry, published NVM
figures, fitted defaults for the unpublished parameters).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .costmodel import ComputeEnergyParams, MemoryTechParams
from .errors import ConfigError
from .mapper import PEArrayConfig
from .netspec import (FC, CONV, LayerSpec, NetworkSpec, Pool, TrainingPolicy,
                      default_sram_weight_budget)
from .rl.experiment import ExperimentConfig

CONFIG_ENV_VAR = "NVMRLSIM_CONFIG"


def data_path(name: str) -> Path:
    return Path(resources.files("nvmrlsim").joinpath("data", name))


def _load_yaml(path) -> dict:
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a key-value mapping")
    return doc


def load_network(path=None) -> NetworkSpec:
    doc = _load_yaml(path or data_path("default_network.cfg"))
    try:
        inp = doc.get("input", {})
        layers = []
        for item in doc["layers"]:
            kind = item["kind"]
            pool = item.get("pool")
            layers.append(LayerSpec(
                name=item["name"],
                kind=CONV if kind == "conv" else FC,
                filter_h=item.get("filter", [0, 0])[0],
                filter_w=item.get("filter", [0, 0])[1],
                in_channels=item.get("in_channels", 0),
                out_channels=item.get("out_channels", 0),
                stride=item.get("stride", 1),
                padding=item.get("padding", 0),
                in_dim=item.get("in_dim", 0),
                out_dim=item.get("out_dim", 0),
                activation=item.get("activation", "relu"),
                pool=Pool(pool["size"], pool["stride"]) if pool else None,
            ))
        return NetworkSpec(
            input_h=inp.get("h", 224), input_w=inp.get("w", 224),
            input_channels=inp.get("channels", 3),
            layers=tuple(layers),
            weight_precision_bits=doc.get("precision_bits", 16),
            action_space_size=doc.get("action_space", 5),
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise ConfigError(f"malformed network config: {exc}") from exc


@dataclass(frozen=True)
class HardwareSpec:
    pe: PEArrayConfig
    mem: MemoryTechParams
    comp: ComputeEnergyParams
    sram_weight_budget: int | str = "auto"   # auto = footprint of the last three layers
    scratch_bytes: int = 4_200_000

    def budget_for(self, net: NetworkSpec) -> int:
        if self.sram_weight_budget == "auto":
            return default_sram_weight_budget(net)
        return int(self.sram_weight_budget)


def load_hardware(path=None) -> HardwareSpec:
    doc = _load_yaml(path or data_path("default_hw.cfg"))
    try:
        pe = PEArrayConfig(**doc.get("pe_array", {}))
        mem = MemoryTechParams(**doc.get("memory", {}))
        comp = ComputeEnergyParams(**doc.get("compute", {}))
        placement = doc.get("placement", {})
        return HardwareSpec(
            pe=pe, mem=mem, comp=comp,
            sram_weight_budget=placement.get("sram_weight_budget_bytes", "auto"),
            scratch_bytes=placement.get("scratch_bytes", 4_200_000),
        )
    except TypeError as exc:
        raise ConfigError(f"malformed hardware config: {exc}") from exc


@dataclass(frozen=True)
class EnvelopeSettings:
    frames_to_react: int = 1
    environments: tuple = (("indoor", 1.0), ("outdoor", 2.5))  # placeholder d_min values


@dataclass
class RunConfig:
    """Everything a subcommand needs, resolved from file + flag overrides."""

    network_path: Path | None = None
    hardware_path: Path | None = None
    policies: list = field(default_factory=lambda: ["e2e", "l2", "l3", "l4"])
    batches: list = field(default_factory=lambda: [4])
    envelope: EnvelopeSettings = field(default_factory=EnvelopeSettings)
    rl: ExperimentConfig = field(default_factory=ExperimentConfig)
    out_format: str = "csv"

    @classmethod
    def load(cls, path=None) -> "RunConfig":
        if path is None:
            path = os.environ.get(CONFIG_ENV_VAR)
        if path is None:
            return cls()
        doc = _load_yaml(path)
        cfg = cls()
        base = Path(path).parent
        if "network" in doc and doc["network"] not in (None, "default"):
            cfg.network_path = _resolve(base, doc["network"])
        if "hardware" in doc and doc["hardware"] not in (None, "default"):
            cfg.hardware_path = _resolve(base, doc["hardware"])
        if "policies" in doc:
            cfg.policies = [str(p) for p in doc["policies"]]
        if "batch" in doc:
            cfg.batches = parse_batch_range(str(doc["batch"]))
        if "envelope" in doc:
            env = doc["envelope"]
            cfg.envelope = EnvelopeSettings(
                frames_to_react=env.get("frames_to_react", 1),
                environments=tuple((e["name"], float(e["d_min_m"]))
                                   for e in env.get("environments", [])) or
                EnvelopeSettings().environments,
            )
        if "rl" in doc:
            try:
                cfg.rl = ExperimentConfig(**{k: _tuplify(v) for k, v in doc["rl"].items()})
            except TypeError as exc:
                raise ConfigError(f"malformed rl config section: {exc}") from exc
        if "output" in doc:
            cfg.out_format = doc["output"].get("format", "csv")
        return cfg


def _tuplify(v):
    return tuple(tuple(x) if isinstance(x, list) else x for x in v) \
        if isinstance(v, list) else v


def _resolve(base: Path, value: str) -> Path:
    p = Path(value)
    if not p.is_absolute():
        p = base / p
    if not p.exists():
        raise ConfigError(f"referenced config file does not exist: {p}")
    return p


def parse_batch_range(text: str) -> list[int]:
    """'4' -> [4]; '1..32' -> [1, 2, ..., 32]; '1,2,4' -> [1, 2, 4]."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo, hi = int(lo), int(hi)
        if lo < 1 or hi < lo:
            raise ConfigError(f"bad batch range {text!r}")
        return list(range(lo, hi + 1))
    if "," in text:
        return [int(x) for x in text.split(",")]
    return [int(text)]


def parse_policies(text: str) -> list[TrainingPolicy]:
    return [TrainingPolicy.parse(p) for p in text.split(",") if p.strip()]
