"""Digital-copy data model and its on-disk formats.

A :class:`ParameterSeries` is a dense ``n_periods x n_params`` table of
per-period financial values (thousand rubles). Two file formats are
supported:

* CSV: header ``t,<param_id>,...``, one row per period, ascending ``t``.
* columnar-binary (``.mdsc``): magic ``MDSC``, u32 version 1, u64 n_params,
  u64 n_periods, u32-length-prefixed UTF-8 param ids, then the values
  column-major as little-endian float64.
"""

from __future__ import annotations

import csv
import hashlib
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

MAGIC = b"MDSC"
FORMAT_VERSION = 1
FORMATS = ("csv", "columnar-binary")


class SeriesFormatError(ValueError):
    """A series file or table violates the format or the series invariants."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        super().__init__(message)
        self.row = row
        self.column = column


@dataclass(frozen=True)
class ParameterSeries:
    param_ids: tuple[str, ...]
    values: np.ndarray
    period_origin: int = 1

    def __post_init__(self):
        ids = tuple(str(p) for p in self.param_ids)
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2:
            raise SeriesFormatError(f"values must be a 2-D table, got {values.ndim}-D")
        n_periods, n_params = values.shape
        if n_periods < 1 or n_params < 1:
            raise SeriesFormatError(f"empty series: {n_periods} periods x {n_params} params")
        if len(ids) != n_params:
            raise SeriesFormatError(f"{len(ids)} param ids for {n_params} columns")
        seen: set[str] = set()
        for pid in ids:
            if not pid:
                raise SeriesFormatError("empty parameter id")
            if pid in seen:
                raise SeriesFormatError(f"duplicate parameter id {pid!r}", column=pid)
            seen.add(pid)
        finite = np.isfinite(values)
        if not finite.all():
            r, c = map(int, np.argwhere(~finite)[0])
            raise SeriesFormatError(
                f"non-finite value at row {r + 1} (t={self.period_origin + r}), column {ids[c]!r}",
                row=r + 1,
                column=ids[c],
            )
        values.setflags(write=False)
        object.__setattr__(self, "param_ids", ids)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "period_origin", int(self.period_origin))

    @property
    def n_params(self) -> int:
        return self.values.shape[1]

    @property
    def n_periods(self) -> int:
        return self.values.shape[0]

    @property
    def periods(self) -> np.ndarray:
        return np.arange(self.period_origin, self.period_origin + self.n_periods)

    def row_index(self, t: int) -> int:
        """Row offset of period label ``t``."""
        return t - self.period_origin

    def column_index(self, param_id: str) -> int:
        try:
            return self.param_ids.index(param_id)
        except ValueError:
            raise KeyError(f"unknown parameter id {param_id!r}") from None

    def with_values(self, values: np.ndarray) -> "ParameterSeries":
        return ParameterSeries(self.param_ids, values, self.period_origin)


@dataclass(frozen=True)
class SeriesDiagnostics:
    zero_columns: int
    min_value: float
    max_value: float
    checksum: str


def diagnose(series: ParameterSeries) -> SeriesDiagnostics:
    v = series.values
    return SeriesDiagnostics(
        zero_columns=int(np.count_nonzero(~v.any(axis=0))),
        min_value=float(v.min()),
        max_value=float(v.max()),
        checksum=checksum(series),
    )


def checksum(series: ParameterSeries) -> str:
    """Content digest that ignores column order and file format.

    Each column is hashed together with its id; the sorted column digests
    are then hashed with the period origin and the period count.
    """
    col_digests = []
    for j, pid in enumerate(series.param_ids):
        h = hashlib.sha256(pid.encode("utf-8"))
        h.update(b"\0")
        h.update(np.ascontiguousarray(series.values[:, j]).astype("<f8").tobytes())
        col_digests.append(h.digest())
    top = hashlib.sha256(struct.pack("<qQ", series.period_origin, series.n_periods))
    for d in sorted(col_digests):
        top.update(d)
    return top.hexdigest()


def format_value(x: float) -> str:
    """Shortest decimal string that parses back to exactly ``x``."""
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def infer_format(path: str | Path) -> str:
    return "csv" if Path(path).suffix.lower() == ".csv" else "columnar-binary"


def _check_format(fmt: str) -> str:
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    return fmt


def write_series(series: ParameterSeries, path: str | Path, format: str | None = None) -> None:
    path = Path(path)
    fmt = _check_format(format or infer_format(path))
    if fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", *series.param_ids])
            for t, row in zip(series.periods, series.values):
                w.writerow([int(t), *(format_value(x) for x in row)])
    else:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<IQQ", FORMAT_VERSION, series.n_params, series.n_periods))
            for pid in series.param_ids:
                raw = pid.encode("utf-8")
                fh.write(struct.pack("<I", len(raw)))
                fh.write(raw)
            fh.write(np.asfortranarray(series.values).astype("<f8").tobytes(order="F"))


def load_series(path: str | Path, format: str | None = None, period_origin: int = 1) -> ParameterSeries:
    """Read a series file.

    ``period_origin`` only applies to the columnar-binary format, which
    does not store period labels; CSV files carry them in the ``t`` column.
    """
    path = Path(path)
    fmt = _check_format(format or infer_format(path))
    if fmt == "csv":
        return _load_csv(path)
    return _load_binary(path, period_origin)


def _load_csv(path: Path) -> ParameterSeries:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SeriesFormatError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(header) < 2 or header[0] != "t":
            raise SeriesFormatError(f"{path}: header must start with 't' and name at least one parameter")
        ids = header[1:]
        if len(set(ids)) != len(ids):
            dup = next(p for p in ids if ids.count(p) > 1)
            raise SeriesFormatError(f"{path}: duplicate parameter id {dup!r}", column=dup)
        labels: list[int] = []
        rows: list[list[float]] = []
        for lineno, rec in enumerate(reader, start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise SeriesFormatError(
                    f"{path}: row {lineno} has {len(rec)} cells, header has {len(header)}", row=lineno
                )
            try:
                labels.append(int(rec[0]))
            except ValueError:
                raise SeriesFormatError(f"{path}: row {lineno}: bad period label {rec[0]!r}", row=lineno, column="t") from None
            row = []
            for pid, cell in zip(ids, rec[1:]):
                try:
                    x = float(cell)
                except ValueError:
                    raise SeriesFormatError(
                        f"{path}: row {lineno}, column {pid!r}: non-numeric cell {cell!r}", row=lineno, column=pid
                    ) from None
                if not math.isfinite(x):
                    raise SeriesFormatError(
                        f"{path}: row {lineno}, column {pid!r}: non-finite cell {cell!r}", row=lineno, column=pid
                    )
                row.append(x)
            rows.append(row)
    if not rows:
        raise SeriesFormatError(f"{path}: no data rows")
    origin = labels[0]
    if labels != list(range(origin, origin + len(labels))):
        raise SeriesFormatError(f"{path}: period labels must be consecutive ascending integers")
    return ParameterSeries(tuple(ids), np.array(rows, dtype=np.float64), origin)


def _load_binary(path: Path, period_origin: int) -> ParameterSeries:
    data = path.read_bytes()
    if data[:4] != MAGIC:
        raise SeriesFormatError(f"{path}: bad magic {data[:4]!r}")
    if len(data) < 24:
        raise SeriesFormatError(f"{path}: truncated header")
    version, n_params, n_periods = struct.unpack_from("<IQQ", data, 4)
    if version != FORMAT_VERSION:
        raise SeriesFormatError(f"{path}: unsupported format version {version}")
    off = 24
    ids: list[str] = []
    for _ in range(n_params):
        if off + 4 > len(data):
            raise SeriesFormatError(f"{path}: truncated parameter id table")
        (ln,) = struct.unpack_from("<I", data, off)
        off += 4
        ids.append(data[off : off + ln].decode("utf-8"))
        off += ln
    expected = n_params * n_periods * 8
    if len(data) - off != expected:
        raise SeriesFormatError(f"{path}: expected {expected} value bytes, found {len(data) - off}")
    values = np.frombuffer(data, dtype="<f8", count=n_params * n_periods, offset=off)
    values = values.reshape((n_periods, n_params), order="F")
    return ParameterSeries(tuple(ids), values, period_origin)


def from_columns(columns: dict[str, Sequence[float]], period_origin: int = 1) -> ParameterSeries:
    ids = tuple(columns)
    return ParameterSeries(ids, np.column_stack([np.asarray(columns[c], dtype=float) for c in ids]), period_origin)
