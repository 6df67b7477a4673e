import pytest

from nvmrlsim.config import data_path
from nvmrlsim.errors import ConfigError, DataIntegrityError
from nvmrlsim.reference import compare_from_reference, load_reference_table

SHIPPED = data_path("fig12_reference.csv")


@pytest.fixture(scope="module")
def table():
    return load_reference_table(SHIPPED)


def test_forward_totals(table):
    total = table.total("forward")
    assert total.latency_ms == 11.9285
    assert total.energy_mj == 75.2259
    assert sum(r.latency_ms for r in table.phase_rows("forward")) == pytest.approx(11.9285)
    assert sum(r.energy_mj for r in table.phase_rows("forward")) == pytest.approx(75.2259)


def test_backward_totals(table):
    total = table.total("backward")
    assert total.latency_ms == 94.2257
    assert total.energy_mj == 445.331


def test_power_consistency_within_rounding(table):
    row = table.row("CONV1", "forward")
    assert row.power_mw == pytest.approx(row.energy_mj / row.latency_ms * 1e3, rel=0.015)


def test_reemission_is_byte_exact(table):
    assert table.emit("csv") == SHIPPED.read_text()


def test_corrupted_total_detected(tmp_path):
    text = SHIPPED.read_text().replace("11.9285", "11.9385")
    bad = tmp_path / "bad.csv"
    bad.write_text(text)
    with pytest.raises(DataIntegrityError, match="forward latency total"):
        load_reference_table(bad)


def test_inconsistent_power_detected(tmp_path):
    text = SHIPPED.read_text().replace("CONV1,forward,0.245,704,4134,1.012,no",
                                       "CONV1,forward,0.245,704,9999,1.012,no")
    bad = tmp_path / "bad.csv"
    bad.write_text(text)
    with pytest.raises(DataIntegrityError, match="CONV1/forward"):
        load_reference_table(bad)


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_reference_table(tmp_path / "nope.csv")


def test_l4_reduction_pair(table):
    comps = {c.policy: c for c in compare_from_reference(table, ["E2E", "L4"])}
    assert comps["L4"].latency_reduction * 100 == pytest.approx(83.47, abs=0.1)
    assert comps["L4"].energy_reduction * 100 == pytest.approx(79.43, abs=0.1)


def test_l3_reduction_pair(table):
    comps = {c.policy: c for c in compare_from_reference(table, ["E2E", "L3"])}
    assert comps["L3"].latency_reduction * 100 == pytest.approx(87.08, abs=0.1)
    assert comps["L3"].energy_reduction * 100 == pytest.approx(83.40, abs=0.1)


def test_reduction_pair_matches_headline_quote_unordered(table):
    comps = {c.policy: c for c in compare_from_reference(table, ["E2E", "L4"])}
    got = sorted([round(comps["L4"].latency_reduction * 100, 1),
                  round(comps["L4"].energy_reduction * 100, 1)])
    quoted = sorted([79.4, 83.45])
    assert got[0] == pytest.approx(quoted[0], abs=0.1)
    assert got[1] == pytest.approx(quoted[1], abs=0.1)


def test_comparison_requires_e2e(table):
    with pytest.raises(ConfigError):
        compare_from_reference(table, ["L3", "L4"])
