import json

import pytest

from nvmrlsim.errors import NvmRlSimError
from nvmrlsim.report import (COMPARE_COLUMNS, SWEEP_COLUMNS, Column, emit_report,
                             format_records)

RECORDS = [
    {"policy": "L4", "latency_reduction_pct": 83.4703, "energy_reduction_pct": 79.4288,
     "per_image_latency_ms": 17.5462, "per_image_energy_mj": 107.0959},
]


def test_csv_has_documented_precision():
    text = format_records(RECORDS, COMPARE_COLUMNS, "csv")
    header, row = text.strip().split("\n")
    assert header == ("policy,latency_reduction_pct,energy_reduction_pct,"
                      "per_image_latency_ms,per_image_energy_mj")
    assert row == "L4,83.47,79.43,17.5462,107.096"


def test_round_trip_preserves_values_at_printed_precision():
    text = format_records(RECORDS, COMPARE_COLUMNS, "csv")
    row = text.strip().split("\n")[1].split(",")
    assert float(row[1]) == pytest.approx(RECORDS[0]["latency_reduction_pct"], abs=0.005)
    assert float(row[3]) == pytest.approx(RECORDS[0]["per_image_latency_ms"], abs=5e-5)
    # re-emitting the parsed values reproduces the text
    parsed = [{"policy": row[0], "latency_reduction_pct": float(row[1]),
               "energy_reduction_pct": float(row[2]),
               "per_image_latency_ms": float(row[3]),
               "per_image_energy_mj": float(row[4])}]
    assert format_records(parsed, COMPARE_COLUMNS, "csv") == text


def test_json_format_rounds_to_same_precision():
    text = format_records(RECORDS, COMPARE_COLUMNS, "json")
    data = json.loads(text)
    assert data[0]["latency_reduction_pct"] == 83.47
    assert data[0]["per_image_latency_ms"] == 17.5462


def test_empty_records_require_flag(tmp_path):
    with pytest.raises(NvmRlSimError):
        emit_report([], SWEEP_COLUMNS, "csv", tmp_path / "x.csv")
    n = emit_report([], SWEEP_COLUMNS, "csv", tmp_path / "x.csv", allow_empty=True)
    assert (tmp_path / "x.csv").read_text() == "policy,batch,fps,iteration_latency_ms,iteration_energy_mj\n"
    assert n > 0


def test_unwritable_destination_raises(tmp_path):
    with pytest.raises(NvmRlSimError, match="cannot write"):
        emit_report(RECORDS, COMPARE_COLUMNS, "csv", tmp_path / "no" / "dir" / "x.csv")


def test_unknown_format_rejected():
    with pytest.raises(NvmRlSimError):
        format_records(RECORDS, COMPARE_COLUMNS, "xml")


def test_trim_column_strips_trailing_zeros():
    col = Column("v", 4, trim=True)
    assert col.format(0.245) == "0.245"
    assert col.format(0.0009) == "0.0009"
    assert col.format(1.28) == "1.28"
    assert col.format(4134.0) == "4134"
