import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dyncorr.series import (
    ParameterSeries,
    SeriesFormatError,
    checksum,
    diagnose,
    format_value,
    load_series,
    write_series,
)


def test_csv_header_and_rows(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("t,a,b\n1,1.5,2\n2,3,4\n3,-1,0\n")
    s = load_series(p)
    assert (s.n_params, s.n_periods) == (2, 3)
    assert s.param_ids == ("a", "b")
    assert s.period_origin == 1
    np.testing.assert_array_equal(s.values[:, 1], [2, 4, 0])


def test_csv_nan_names_row_and_column(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("t,a,b\n1,1,2\n2,3,NaN\n3,5,6\n")
    with pytest.raises(SeriesFormatError) as exc:
        load_series(p)
    assert exc.value.row == 2
    assert exc.value.column == "b"
    assert "row 2" in str(exc.value) and "'b'" in str(exc.value)


@pytest.mark.parametrize(
    "body, fragment",
    [
        ("x,a\n1,2\n", "header"),
        ("t,a,b\n1,2\n", "cells"),
        ("t,a,a\n1,2,3\n", "duplicate"),
        ("t,a\n1,abc\n", "non-numeric"),
        ("t,a\n1,inf\n", "non-finite"),
        ("t,a\n1,1\n3,2\n", "consecutive"),
        ("t,a\n", "no data"),
    ],
)
def test_csv_errors(tmp_path, body, fragment):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(SeriesFormatError, match=fragment):
        load_series(p)


def test_constructor_invariants():
    with pytest.raises(SeriesFormatError):
        ParameterSeries(("a", ""), np.zeros((2, 2)))
    with pytest.raises(SeriesFormatError):
        ParameterSeries(("a",), np.zeros((2, 2)))
    with pytest.raises(SeriesFormatError):
        ParameterSeries(("a",), np.zeros((0, 1)))
    with pytest.raises(SeriesFormatError, match="non-finite"):
        ParameterSeries(("a",), np.array([[1.0], [np.inf]]))


def test_series_is_immutable():
    s = ParameterSeries(("a",), np.ones((2, 1)))
    with pytest.raises(ValueError):
        s.values[0, 0] = 5.0


def test_smallest_csv_body(tmp_path):
    p = tmp_path / "one.csv"
    write_series(ParameterSeries(("a",), np.zeros((1, 1))), p)
    assert p.read_text().splitlines() == ["t,a", "1,0"]


def test_csv_keeps_table_value_exact(tmp_path):
    p = tmp_path / "v.csv"
    write_series(ParameterSeries(("V",), np.array([[87.34]])), p)
    assert "87.34" in p.read_text()
    assert load_series(p).values[0, 0] == 87.34


def test_binary_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(63200)
    values = rng.standard_normal((63, 200)) * 1e3
    values[3, 7] = -0.0
    s = ParameterSeries(tuple(f"c{j}" for j in range(200)), values)
    p = tmp_path / "r.mdsc"
    write_series(s, p, "columnar-binary")
    back = load_series(p, "columnar-binary")
    assert back.param_ids == s.param_ids
    assert back.values.tobytes() == s.values.tobytes()
    assert checksum(back) == checksum(s)


def test_binary_layout(tmp_path):
    s = ParameterSeries(("a", "bé"), np.array([[1.0, 2.0], [3.0, 4.0]]))
    p = tmp_path / "x.mdsc"
    write_series(s, p)
    raw = p.read_bytes()
    assert raw[:4] == b"MDSC"
    assert raw[4:8] == (1).to_bytes(4, "little")
    assert raw[8:16] == (2).to_bytes(8, "little")
    assert raw[16:24] == (2).to_bytes(8, "little")
    values = np.frombuffer(raw[-32:], dtype="<f8")
    np.testing.assert_array_equal(values, [1.0, 3.0, 2.0, 4.0])  # column-major


@pytest.mark.parametrize("mutate", [lambda b: b"XXXX" + b[4:], lambda b: b[:-3]])
def test_binary_rejects_corruption(tmp_path, mutate):
    p = tmp_path / "x.mdsc"
    write_series(ParameterSeries(("a",), np.ones((3, 1))), p)
    p.write_bytes(mutate(p.read_bytes()))
    with pytest.raises(SeriesFormatError):
        load_series(p)


def test_checksum_format_and_column_order_invariant(tmp_path):
    rng = np.random.default_rng(1)
    s = ParameterSeries(("a", "b", "c"), rng.standard_normal((5, 3)))
    write_series(s, tmp_path / "s.csv")
    write_series(s, tmp_path / "s.mdsc")
    perm = ParameterSeries(("c", "a", "b"), s.values[:, [2, 0, 1]])
    assert checksum(load_series(tmp_path / "s.csv")) == checksum(s)
    assert checksum(load_series(tmp_path / "s.mdsc")) == checksum(s)
    assert checksum(perm) == checksum(s)
    assert checksum(s.with_values(s.values + 1)) != checksum(s)


def test_diagnose():
    d = diagnose(ParameterSeries(("a", "b", "c"), np.zeros((5, 3))))
    assert (d.zero_columns, d.min_value, d.max_value) == (3, 0.0, 0.0)
    v = np.ones((4, 2))
    v[2, 1] = -2.5
    assert diagnose(ParameterSeries(("a", "b"), v)).min_value == -2.5


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 5)), elements=finite))
def test_csv_round_trip_value_exact(tmp_path_factory, values):
    p = tmp_path_factory.mktemp("rt") / "s.csv"
    s = ParameterSeries(tuple(f"x{j}" for j in range(values.shape[1])), values, period_origin=-3)
    write_series(s, p)
    back = load_series(p)
    assert back.period_origin == -3
    assert back.values.tobytes() == s.values.tobytes()


@given(finite)
def test_format_value_round_trips(x):
    assert float(format_value(x)) == x
