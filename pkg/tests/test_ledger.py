from decimal import Decimal
from pathlib import Path

import numpy as np
import pytest

from dyncorr.engine import IndicatorProfile, WindowSpec, indicator_profile
from dyncorr.ledger import (
    LedgerError,
    ModeAggregate,
    compare_modes,
    cost_paths,
    default_fixture_path,
    load_fixture,
    period_aggregate,
    verify_fixture,
    write_ledger_csv,
    write_plot_data,
)
from dyncorr.series import ParameterSeries

from .conftest import random_series

REPO_FIXTURE = Path(__file__).resolve().parents[1] / "data" / "table1.csv"


def aggregate(v, name="m", normalization="raw", instants=None):
    v = np.asarray(v, dtype=float)
    instants = np.arange(1, len(v) + 1) if instants is None else np.asarray(instants)
    return ModeAggregate(name, instants, v, normalization, float(np.cumsum(v)[-1]))


def test_single_column_raw_is_one():
    s = ParameterSeries(("a",), np.arange(10.0)[:, None])
    agg = period_aggregate(indicator_profile(s, WindowSpec(3)), "raw")
    assert agg.v.tolist() == [1.0] * 7
    assert agg.total == 7.0


def test_mean_is_raw_over_n(rng):
    p = indicator_profile(random_series(rng, 15, 9), WindowSpec(6))
    raw, mean = period_aggregate(p, "raw"), period_aggregate(p, "mean")
    np.testing.assert_array_equal(mean.v, raw.v / 9)
    assert mean.normalization == "mean"


def test_worked_example_aggregate():
    window = np.array([(1, 2, 3, 4, 5, 6), (2, 1, 4, 3, 6, 5), (7,) * 6], dtype=float).T[::-1]
    s = ParameterSeries(("x", "y", "z"), np.vstack([window, np.zeros((1, 3))]))
    agg = period_aggregate(indicator_profile(s, WindowSpec(6)), "raw")
    assert agg.v[0] == pytest.approx(2 * (1 + 29 / 35), abs=1e-12)


def test_aggregate_total_is_sum(rng):
    agg = period_aggregate(indicator_profile(random_series(rng, 30, 11), WindowSpec(6)))
    assert abs(agg.total - agg.v.sum()) <= 1e-9
    with pytest.raises(ValueError):
        period_aggregate(IndicatorProfile(np.array([1]), np.ones((1, 1)), np.zeros(1)), "median")


def test_compare_identical_modes():
    a = aggregate([3.0, 4.5, 1.25])
    led = compare_modes(a, a)
    assert (led.delta == 0).all() and led.total_delta == 0


def test_compare_table_row_and_totals():
    led = compare_modes(aggregate([87.34], "basic"), aggregate([110.57], "skills"))
    assert led.delta[0] == pytest.approx(23.23, abs=1e-9)
    totals = compare_modes(aggregate([5069.93]), aggregate([5491.17]))
    assert abs(totals.total_delta - 421.24) <= 0.02


def test_compare_antisymmetry_and_additivity(rng):
    a, b = aggregate(rng.normal(size=57) * 50), aggregate(rng.normal(size=57) * 50)
    ab, ba = compare_modes(a, b), compare_modes(b, a)
    np.testing.assert_array_equal(ab.delta, -ba.delta)
    assert ab.total_delta == -ba.total_delta
    assert abs(ab.total_delta - ab.delta.sum()) <= 1e-9


def test_compare_mismatches():
    with pytest.raises(LedgerError, match="instant"):
        compare_modes(aggregate([1.0, 2.0]), aggregate([1.0]))
    with pytest.raises(LedgerError, match="instant"):
        compare_modes(aggregate([1.0], instants=[1]), aggregate([1.0], instants=[2]))
    with pytest.raises(LedgerError, match="normalization"):
        compare_modes(aggregate([1.0]), aggregate([1.0], normalization="mean"))


def test_ledger_csv_shape(tmp_path):
    led = compare_modes(aggregate([1.0, 2.0]), aggregate([1.5, 2.0]))
    out = tmp_path / "l.csv"
    write_ledger_csv(led, out)
    assert out.read_text().splitlines() == ["t,V_basic,V_control,delta", "1,1,1.5,0.5", "2,2,2,0", "Total,3,3.5,0.5"]


def test_plot_data(tmp_path, rng):
    s = random_series(rng, 10, 4)
    p = indicator_profile(s, WindowSpec(6))
    out = tmp_path / "plot.csv"
    write_plot_data(p, out)
    lines = out.read_text().splitlines()
    assert lines[0] == "t,V_raw,V_mean,degenerate_count"
    assert len(lines) == 1 + len(p.instants)
    t, v_raw, v_mean, dc = lines[1].split(",")
    assert int(t) == 7 and float(v_mean) == pytest.approx(float(v_raw) / 4) and dc == "0"


# --- published table ---------------------------------------------------------


def test_fixture_shipped_in_repo_and_package():
    assert REPO_FIXTURE.read_bytes() == default_fixture_path().read_bytes()


def test_fixture_rows():
    fx = load_fixture()
    assert len(fx.rows) == 57
    r1 = fx.rows[0]
    assert (r1.v_base, r1.v_control, r1.stated_delta) == (Decimal("87.34"), Decimal("110.57"), Decimal("23.23"))
    assert r1.discrepancy == 0
    r20 = fx.rows[19]
    assert r20.recomputed_delta == Decimal("0.02")
    assert r20.discrepancy == Decimal("0.01")


def test_fixture_report():
    rep = verify_fixture(load_fixture())
    assert rep.identity_holds
    assert Decimal("5069.93") + Decimal("421.24") == Decimal("5491.17")
    assert 20 in {r.t for r in rep.flagged}
    assert 1 not in {r.t for r in rep.flagged}
    assert rep.max_row_discrepancy <= Decimal("0.015")
    assert all(d <= Decimal("0.3") for d in rep.column_sum_discrepancies)
    assert all(r.discrepancy >= 0 for r in rep.rows)


@pytest.mark.parametrize(
    "body",
    ["", "a,b,c,d\n", "t,V_basic,V_control,delta\n1,1,2,1\n", "t,V_basic,V_control,delta\n1,x,2,1\nTotal,1,2,1\n",
     "t,V_basic,V_control,delta\n2,1,2,1\nTotal,1,2,1\n"],
)
def test_malformed_fixture(tmp_path, body):
    p = tmp_path / "f.csv"
    p.write_text(body)
    with pytest.raises(LedgerError):
        load_fixture(p)


def test_cost_paths_reported_unreconciled():
    paths = cost_paths()
    assert paths["base_plus_additional"] == 5_650_502
    assert paths["stated_total"] == 5_666_745
    assert paths["gap"] == 16_243
