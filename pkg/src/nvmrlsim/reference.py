"""Loader and checks for the shipped per-layer measurement table.

The table carries the published forward/backward rows (latency, active PEs,
power, energy, NVM-write flag) plus a totals row per phase. Loading validates
internal consistency:

  * total latency and energy equal the column sums to within 0.001,
  * total active-PE and power equal the column means,
  * every row's power matches energy/latency within 1.5%, after widening the
    bound by the interval the printed precision implies (the smallest rows
    carry one significant digit, which alone moves power by several percent).

The table also drives the reference-based policy comparison: per-image E2E
training cost is the forward plus backward totals, and a last-k policy swaps
the backward total for the sum of its k trailing FC rows.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .errors import ConfigError, DataIntegrityError
from .report import REFERENCE_COLUMNS, format_records

TOTAL = "total"


@dataclass(frozen=True)
class ReferenceRow:
    layer: str
    phase: str
    latency_ms: float
    active_pe: int
    power_mw: float
    energy_mj: float
    nvm_write: str
    latency_decimals: int
    energy_decimals: int

    @property
    def is_total(self) -> bool:
        return self.layer == TOTAL


@dataclass(frozen=True)
class ReferenceTable:
    rows: tuple[ReferenceRow, ...]

    def phase_rows(self, phase: str) -> list[ReferenceRow]:
        return [r for r in self.rows if r.phase == phase and not r.is_total]

    def total(self, phase: str) -> ReferenceRow:
        for r in self.rows:
            if r.phase == phase and r.is_total:
                return r
        raise DataIntegrityError(f"reference table has no {phase} totals row")

    def row(self, layer: str, phase: str) -> ReferenceRow:
        for r in self.rows:
            if r.layer == layer and r.phase == phase:
                return r
        raise DataIntegrityError(f"reference table has no row {layer}/{phase}")

    def records(self) -> list[dict]:
        return [{
            "layer": r.layer, "phase": r.phase, "latency_ms": r.latency_ms,
            "active_pe": r.active_pe, "power_mw": r.power_mw,
            "energy_mj": r.energy_mj, "nvm_write": r.nvm_write,
        } for r in self.rows]

    def emit(self, fmt: str = "csv") -> str:
        return format_records(self.records(), REFERENCE_COLUMNS, fmt)


def _decimals(text: str) -> int:
    return len(text.split(".")[1]) if "." in text else 0


def _half_ulp(value: float, decimals: int) -> float:
    return 0.5 * 10 ** (-decimals)


def load_reference_table(path) -> ReferenceTable:
    """Parse and validate the reference table; raises DataIntegrityError on failure."""
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            raw = list(reader)
    except OSError as exc:
        raise ConfigError(f"cannot read reference table {path}: {exc}") from exc
    if not raw:
        raise DataIntegrityError(f"reference table {path} is empty")

    rows = []
    for rec in raw:
        try:
            rows.append(ReferenceRow(
                layer=rec["layer"], phase=rec["phase"],
                latency_ms=float(rec["latency_ms"]), active_pe=int(rec["active_pe"]),
                power_mw=float(rec["power_mw"]), energy_mj=float(rec["energy_mj"]),
                nvm_write=rec["nvm_write"],
                latency_decimals=_decimals(rec["latency_ms"]),
                energy_decimals=_decimals(rec["energy_mj"]),
            ))
        except (KeyError, ValueError) as exc:
            raise DataIntegrityError(f"malformed reference row {rec!r}: {exc}") from exc

    table = ReferenceTable(tuple(rows))
    _validate(table)
    return table


def _validate(table: ReferenceTable):
    for r in table.rows:
        if r.is_total:
            continue
        # Power implied by the printed energy/latency, widened by print rounding.
        e_lo = r.energy_mj - _half_ulp(r.energy_mj, r.energy_decimals)
        e_hi = r.energy_mj + _half_ulp(r.energy_mj, r.energy_decimals)
        t_lo = r.latency_ms - _half_ulp(r.latency_ms, r.latency_decimals)
        t_hi = r.latency_ms + _half_ulp(r.latency_ms, r.latency_decimals)
        if t_lo <= 0 or e_lo < 0:
            raise DataIntegrityError(f"row {r.layer}/{r.phase} has non-positive latency bound")
        p_lo = (e_lo / t_hi) * 1e3 * (1 - 0.015)
        p_hi = (e_hi / t_lo) * 1e3 * (1 + 0.015)
        if not (p_lo <= r.power_mw <= p_hi):
            raise DataIntegrityError(
                f"row {r.layer}/{r.phase}: power {r.power_mw} mW inconsistent with "
                f"energy/latency range [{p_lo:.0f}, {p_hi:.0f}] mW")

    for phase in ("forward", "backward"):
        body = table.phase_rows(phase)
        total = table.total(phase)
        lat_sum = sum(r.latency_ms for r in body)
        e_sum = sum(r.energy_mj for r in body)
        if abs(lat_sum - total.latency_ms) > 0.001:
            raise DataIntegrityError(
                f"{phase} latency total {total.latency_ms} != column sum {lat_sum:.4f}")
        if abs(e_sum - total.energy_mj) > 0.001:
            raise DataIntegrityError(
                f"{phase} energy total {total.energy_mj} != column sum {e_sum:.4f}")
        if abs(sum(r.active_pe for r in body) / len(body) - total.active_pe) > 0.5:
            raise DataIntegrityError(f"{phase} active-PE total row is not the column mean")
        if abs(sum(r.power_mw for r in body) / len(body) - total.power_mw) > 0.1:
            raise DataIntegrityError(f"{phase} power total row is not the column mean")


LABEL_TRANSPOSITION_NOTE = (
    "note: the headline quote pairs 79.4%/83.45% with latency/energy transposed "
    "relative to the per-layer table sums; the unordered pair matches."
)


@dataclass(frozen=True)
class ReferenceComparison:
    policy: str
    latency_reduction: float
    energy_reduction: float
    per_image_latency_ms: float
    per_image_energy_mj: float


def compare_from_reference(table: ReferenceTable, policies) -> list[ReferenceComparison]:
    """Per-image training reductions computed directly from the reference rows."""
    fwd = table.total("forward")
    bwd = table.total("backward")
    bwd_rows = {r.layer: r for r in table.phase_rows("backward")}
    e2e_lat = fwd.latency_ms + bwd.latency_ms
    e2e_e = fwd.energy_mj + bwd.energy_mj

    labels = [p if isinstance(p, str) else p.label for p in policies]
    if "E2E" not in labels:
        raise ConfigError("reference comparison needs the E2E baseline")

    out = []
    for label in labels:
        if label == "E2E":
            lat, e = e2e_lat, e2e_e
        else:
            k = int(label[1:])
            names = [f"FC{5 - i}" for i in range(k)]  # FC5, FC4, ...
            missing = [n for n in names if n not in bwd_rows]
            if missing:
                raise DataIntegrityError(f"reference table lacks backward rows {missing}")
            lat = fwd.latency_ms + sum(bwd_rows[n].latency_ms for n in names)
            e = fwd.energy_mj + sum(bwd_rows[n].energy_mj for n in names)
        out.append(ReferenceComparison(
            policy=label,
            latency_reduction=1.0 - lat / e2e_lat,
            energy_reduction=1.0 - e / e2e_e,
            per_image_latency_ms=lat,
            per_image_energy_mj=e,
        ))
    return out
