"""Windowed correlation structure and the integral indicators G_i(t), G.

For an analysis instant ``t`` the window is the ``k`` rows ``t-1 .. t-k``
(the current period is excluded). Each window column is standardized with
its mean and sample standard deviation, so ``r_ij = z_i . z_j / (k-1)`` is
the Pearson coefficient. ``G_i(t) = sum_j |r_ij(t)|``.

The full ``n x n`` correlation matrix is never stored. Rows are processed
in tiles of ``tile_width`` parameters; every ``G_i`` is accumulated over
``j`` in ascending order, so the result does not depend on the tile width
or on the number of worker threads.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .series import ParameterSeries, format_value
from .summation import ordered_sum

DEFAULT_TILE_WIDTH = 512
THREADS_ENV = "DYNCORR_THREADS"


class WindowError(ValueError):
    """Requested window does not fit inside the series."""


@dataclass(frozen=True)
class WindowSpec:
    k: int = 6
    degenerate_epsilon: float = 1e-12
    convention: str = "previous-k"

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 2:
            raise ValueError(f"window length k must be an integer >= 2, got {self.k}")
        if not self.degenerate_epsilon > 0:
            raise ValueError(f"degenerate_epsilon must be > 0, got {self.degenerate_epsilon}")
        if self.convention != "previous-k":
            raise ValueError(f"unsupported window convention {self.convention!r}")

    def first_instant(self, series: ParameterSeries) -> int:
        return series.period_origin + self.k

    def last_instant(self, series: ParameterSeries) -> int:
        """Last instant that is itself a period of the series."""
        return series.period_origin + series.n_periods - 1

    def instants(self, series: ParameterSeries) -> np.ndarray:
        return np.arange(self.first_instant(series), self.last_instant(series) + 1)


@dataclass(frozen=True)
class StandardizedWindow:
    t: int
    z: np.ndarray  # k x n
    degenerate_mask: np.ndarray

    @property
    def k(self) -> int:
        return self.z.shape[0]

    @property
    def n_params(self) -> int:
        return self.z.shape[1]


@dataclass(frozen=True)
class IndicatorProfile:
    instants: np.ndarray
    g: np.ndarray  # instants x params
    degenerate_counts: np.ndarray
    param_ids: tuple[str, ...] = field(default=())

    @property
    def n_params(self) -> int:
        return self.g.shape[1]

    def row(self, t: int) -> np.ndarray:
        idx = int(np.searchsorted(self.instants, t))
        if idx >= len(self.instants) or self.instants[idx] != t:
            raise KeyError(f"instant {t} not in profile")
        return self.g[idx]


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: explicit value, else ``DYNCORR_THREADS``, else all cores."""
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            threads = int(env)
        else:
            threads = len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1
    if threads < 1:
        raise ValueError(f"thread count must be >= 1, got {threads}")
    return threads


def _check_window(series: ParameterSeries, t: int, spec: WindowSpec) -> int:
    lo = t - spec.k - series.period_origin
    if lo < 0 or t > series.period_origin + series.n_periods:
        raise WindowError(
            f"window for t={t} (k={spec.k}) needs periods {t - spec.k}..{t - 1}; "
            f"series covers {series.period_origin}..{series.period_origin + series.n_periods - 1}"
        )
    return lo


def _standardize(block: np.ndarray, mean: np.ndarray, std: np.ndarray, eps: float):
    degenerate = std <= eps * np.maximum(1.0, np.abs(mean))
    safe = np.where(degenerate, 1.0, std)
    z = (block - mean) / safe
    z[:, degenerate] = 0.0
    return z, degenerate


def standardize_window(series: ParameterSeries, t: int, spec: WindowSpec) -> StandardizedWindow:
    lo = _check_window(series, t, spec)
    # rows t-1, t-2, ..., t-k
    block = series.values[lo : lo + spec.k][::-1]
    mean = block.mean(axis=0)
    std = np.sqrt(((block - mean) ** 2).sum(axis=0) / (spec.k - 1))
    z, degenerate = _standardize(block, mean, std, spec.degenerate_epsilon)
    return StandardizedWindow(t, z, degenerate)


@njit(nogil=True, cache=True)
def _pair(z, degenerate, i, j):
    if degenerate[i] or degenerate[j]:
        return 0.0
    if i == j:
        return 1.0
    k = z.shape[0]
    s = 0.0
    for l in range(k):
        s += z[l, i] * z[l, j]
    r = s / (k - 1.0)
    if r > 1.0:
        return 1.0
    if r < -1.0:
        return -1.0
    return r


@njit(nogil=True, cache=True)
def _indicator_rows(z, degenerate, lo, hi, tile, out):
    # z is k x n. For row i and a tile of columns, buf[j] accumulates the
    # products over l = 0..k-1 in the same order as _pair, then |r_ij| is
    # added to out[i] with j ascending.
    k, n = z.shape
    denom = k - 1.0
    buf = np.empty(min(tile, n))
    for i0 in range(lo, hi, tile):
        i1 = min(i0 + tile, hi)
        for j0 in range(0, n, tile):
            m = min(j0 + tile, n) - j0
            for i in range(i0, i1):
                if degenerate[i]:
                    continue
                for jj in range(m):
                    buf[jj] = 0.0
                for l in range(k):
                    a = z[l, i]
                    for jj in range(m):
                        buf[jj] += a * z[l, j0 + jj]
                acc = out[i]
                for jj in range(m):
                    j = j0 + jj
                    if j == i:
                        r = 1.0
                    elif degenerate[j]:
                        r = 0.0
                    else:
                        r = buf[jj] / denom
                        if r > 1.0:
                            r = 1.0
                        elif r < -1.0:
                            r = -1.0
                    acc += abs(r)
                out[i] = acc


def _check_column(w: StandardizedWindow, i: int) -> int:
    if not 0 <= i < w.n_params:
        raise IndexError(f"column {i} out of range for {w.n_params} parameters")
    return i


def _contiguous(w: StandardizedWindow) -> np.ndarray:
    return np.ascontiguousarray(w.z)


def pair_correlation(w: StandardizedWindow, i: int, j: int) -> float:
    _check_column(w, i)
    _check_column(w, j)
    return float(_pair(_contiguous(w), w.degenerate_mask, i, j))


def indicator_row(w: StandardizedWindow, i: int) -> float:
    """G_i for one column: the plain loop over every j, diagonal included."""
    _check_column(w, i)
    out = np.zeros(w.n_params)
    _indicator_rows(_contiguous(w), w.degenerate_mask, i, i + 1, w.n_params, out)
    return float(out[i])


def window_indicators(
    w: StandardizedWindow, tile_width: int = DEFAULT_TILE_WIDTH, threads: int | None = None
) -> np.ndarray:
    """G_i for every column of one window."""
    if tile_width < 1:
        raise ValueError(f"tile width must be >= 1, got {tile_width}")
    n = w.n_params
    z = _contiguous(w)
    mask = np.ascontiguousarray(w.degenerate_mask)
    out = np.zeros(n)
    workers = min(resolve_threads(threads), max(1, math.ceil(n / tile_width)))
    if workers == 1:
        _indicator_rows(z, mask, 0, n, tile_width, out)
        return out
    # each task owns a disjoint row range of `out`
    chunk = max(tile_width, math.ceil(n / (4 * workers) / tile_width) * tile_width)
    ranges = [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(lambda r: _indicator_rows(z, mask, r[0], r[1], tile_width, out), ranges))
    return out


def indicator_profile(
    series: ParameterSeries,
    spec: WindowSpec,
    tile_width: int = DEFAULT_TILE_WIDTH,
    threads: int | None = None,
) -> IndicatorProfile:
    if series.n_periods < spec.k + 1:
        raise WindowError(f"series has {series.n_periods} periods; k={spec.k} needs at least {spec.k + 1}")
    instants = spec.instants(series)
    g = np.empty((len(instants), series.n_params))
    counts = np.empty(len(instants), dtype=np.int64)
    for idx, t in enumerate(instants):
        w = standardize_window(series, int(t), spec)
        g[idx] = window_indicators(w, tile_width, threads)
        counts[idx] = int(w.degenerate_mask.sum())
    return IndicatorProfile(instants, g, counts, series.param_ids)


def total_indicator(profile: IndicatorProfile) -> float:
    """G: instants ascending, then columns ascending."""
    if profile.g.size == 0:
        raise ValueError("empty profile")
    return ordered_sum(profile.g)


class IncrementalWindow:
    """Sliding-window state advanced one period at a time.

    Window sums and sums of squares are kept with Neumaier compensation,
    so an advance costs O(n) before re-standardization. When the
    sum-of-squares variance loses too many digits to cancellation, the
    variance is recomputed from the window rows.
    """

    cancellation_guard = 1e-4

    def __init__(self, series: ParameterSeries, t: int, spec: WindowSpec):
        lo = _check_window(series, t, spec)
        self.series = series
        self.spec = spec
        self.t = t
        block = series.values[lo : lo + spec.k]
        n = series.n_params
        self._s1 = np.zeros(n)
        self._c1 = np.zeros(n)
        self._s2 = np.zeros(n)
        self._c2 = np.zeros(n)
        for row in block:
            self._add(row, 1.0)

    @staticmethod
    def _neumaier(s, c, x):
        t = s + x
        c += np.where(np.abs(s) >= np.abs(x), (s - t) + x, (x - t) + s)
        s[...] = t

    def _add(self, row: np.ndarray, sign: float):
        self._neumaier(self._s1, self._c1, sign * row)
        self._neumaier(self._s2, self._c2, sign * row * row)

    def window(self) -> StandardizedWindow:
        k = self.spec.k
        lo = self.t - k - self.series.period_origin
        block = self.series.values[lo : lo + k][::-1]
        mean = (self._s1 + self._c1) / k
        sumsq = self._s2 + self._c2
        centered = sumsq - k * mean * mean
        var = np.maximum(centered, 0.0) / (k - 1)
        unstable = centered <= self.cancellation_guard * np.abs(sumsq)
        if unstable.any():
            dev = block[:, unstable] - mean[unstable]
            var[unstable] = (dev * dev).sum(axis=0) / (k - 1)
        z, degenerate = _standardize(block, mean, np.sqrt(var), self.spec.degenerate_epsilon)
        return StandardizedWindow(self.t, z, degenerate)

    def advance(self) -> StandardizedWindow:
        last = self.series.period_origin + self.series.n_periods
        if self.t + 1 > last:
            raise WindowError(f"cannot advance past t={last}")
        v = self.series.values
        drop = v[self.t - self.spec.k - self.series.period_origin]
        enter = v[self.t - self.series.period_origin]
        self._add(drop, -1.0)
        self._add(enter, 1.0)
        self.t += 1
        return self.window()


def advance_window(state: IncrementalWindow) -> StandardizedWindow:
    return state.advance()


def write_profile_csv(profile: IndicatorProfile, path: str | Path) -> None:
    """``t,G_<id>...`` rows, then a ``Total`` row of per-parameter sums over t."""
    ids = profile.param_ids or tuple(f"p{j}" for j in range(profile.n_params))
    totals = np.cumsum(profile.g, axis=0)[-1] if len(profile.instants) else np.zeros(profile.n_params)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *(f"G_{p}" for p in ids)])
        for t, row in zip(profile.instants, profile.g):
            w.writerow([int(t), *(format_value(x) for x in row)])
        w.writerow(["Total", *(format_value(x) for x in totals)])
