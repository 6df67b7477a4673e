"""Delimited-text / structured-record emission with fixed numeric precision.

Documented precisions: latencies in ms print with 4 decimals, energies in mJ
with 3 (reference-table energies keep 4 so the smallest published value
survives), powers in mW with 1, percentages with 2. Emission is deterministic,
so re-emitting a parsed table reproduces it byte for byte.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass

from .errors import NvmRlSimError


@dataclass(frozen=True)
class Column:
    name: str
    decimals: int | None = None  # None = emit as-is (strings, ints)
    trim: bool = False           # drop trailing zeros (value-preserving data files)

    def format(self, value) -> str:
        if self.decimals is None:
            return str(value)
        text = f"{value:.{self.decimals}f}"
        if self.trim and "." in text:
            text = text.rstrip("0").rstrip(".")
        return text


LATENCY_MS = 4
ENERGY_MJ = 3
ENERGY_MJ_REFERENCE = 4
POWER_MW = 1
PERCENT = 2

REFERENCE_COLUMNS = (
    Column("layer"), Column("phase"),
    Column("latency_ms", LATENCY_MS, trim=True), Column("active_pe"),
    Column("power_mw", POWER_MW, trim=True),
    Column("energy_mj", ENERGY_MJ_REFERENCE, trim=True),
    Column("nvm_write"),
)

COST_COLUMNS = (
    Column("layer"), Column("phase"),
    Column("latency_ms", LATENCY_MS), Column("active_pe"),
    Column("power_mw", POWER_MW), Column("energy_mj", ENERGY_MJ),
    Column("nvm_write"),
)

COMPARE_COLUMNS = (
    Column("policy"),
    Column("latency_reduction_pct", PERCENT), Column("energy_reduction_pct", PERCENT),
    Column("per_image_latency_ms", LATENCY_MS), Column("per_image_energy_mj", ENERGY_MJ),
)

SWEEP_COLUMNS = (
    Column("policy"), Column("batch"), Column("fps", 2),
    Column("iteration_latency_ms", LATENCY_MS), Column("iteration_energy_mj", ENERGY_MJ),
)

ENVELOPE_COLUMNS = (
    Column("environment"), Column("policy"), Column("batch"),
    Column("fps", 2), Column("d_min_m", 2), Column("max_velocity_m_s", 3),
    Column("frame_distance_m", 4),
)

SHAPES_COLUMNS = (
    Column("layer"), Column("kind"), Column("input_shape"), Column("output_shape"),
    Column("macs"), Column("weights"), Column("footprint_mb", 3), Column("placement"),
)

PLAN_COLUMNS = (
    Column("layer"), Column("phase"), Column("mapping_type"), Column("sets"),
    Column("segments"), Column("segment_dims"), Column("active_pes"), Column("passes"),
    Column("input_rows_per_pass"), Column("channel_splits"), Column("traffic_bits"),
)

RESIDUAL_COLUMNS = (
    Column("layer"), Column("phase"), Column("anchor"),
    Column("ref_latency_ms", LATENCY_MS), Column("model_latency_ms", LATENCY_MS),
    Column("latency_error_pct", PERCENT),
    Column("ref_energy_mj", ENERGY_MJ), Column("model_energy_mj", ENERGY_MJ),
    Column("energy_error_pct", PERCENT),
)

TRAIN_COLUMNS = (
    Column("iteration"), Column("policy"), Column("cumulative_reward", 4),
    Column("episode_return", 4), Column("safe_flight_distance_m", 3),
)


def format_records(records, columns, fmt: str = "csv") -> str:
    """Render records (dicts) as delimited text or a structured-record array."""
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(",".join(c.name for c in columns) + "\n")
        for rec in records:
            buf.write(",".join(c.format(rec[c.name]) for c in columns) + "\n")
        return buf.getvalue()
    if fmt == "json":
        rows = []
        for rec in records:
            row = {}
            for c in columns:
                v = rec[c.name]
                row[c.name] = round(v, c.decimals) if c.decimals is not None else v
            rows.append(row)
        return json.dumps(rows, indent=2) + "\n"
    raise NvmRlSimError(f"unknown output format {fmt!r}")


def emit_report(records, columns, fmt: str = "csv", destination=None,
                allow_empty: bool = False) -> int:
    """Write a report; returns bytes written. destination None means stdout."""
    records = list(records)
    if not records and not allow_empty:
        raise NvmRlSimError("refusing to emit an empty report (pass allow_empty)")
    text = format_records(records, columns, fmt)
    data = text.encode()
    if destination is None:
        import sys
        sys.stdout.write(text)
    else:
        try:
            with open(destination, "wb") as fh:
                fh.write(data)
        except OSError as exc:
            raise NvmRlSimError(f"cannot write report to {destination}: {exc}") from exc
    return len(data)
