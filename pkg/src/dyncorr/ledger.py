"""Mode aggregates V(t), base-vs-control ledgers and the Table 1 fixture check."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from importlib import resources
from pathlib import Path

from typing import TYPE_CHECKING

import numpy as np

from .series import format_value
from .summation import ordered_sum

if TYPE_CHECKING:
    from .engine import IndicatorProfile

NORMALIZATIONS = ("raw", "mean")
ROW_TOLERANCE = Decimal("0.005")


class LedgerError(ValueError):
    pass


@dataclass(frozen=True)
class ModeAggregate:
    mode_name: str
    instants: np.ndarray
    v: np.ndarray
    normalization: str
    total: float


@dataclass(frozen=True)
class ModeLedger:
    instants: np.ndarray
    v_base: np.ndarray
    v_control: np.ndarray
    delta: np.ndarray
    total_base: float
    total_control: float
    total_delta: float
    normalization: str = "raw"


def period_aggregate(profile: IndicatorProfile, normalization: str = "raw", mode_name: str = "mode") -> ModeAggregate:
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {NORMALIZATIONS}, got {normalization!r}")
    if len(profile.instants) == 0:
        raise ValueError("empty profile")
    v = np.cumsum(profile.g, axis=1)[:, -1]
    if normalization == "mean":
        v = v / profile.n_params
    return ModeAggregate(mode_name, np.array(profile.instants), v, normalization, ordered_sum(v))


def compare_modes(base: ModeAggregate, control: ModeAggregate) -> ModeLedger:
    if len(base.instants) != len(control.instants) or not np.array_equal(base.instants, control.instants):
        raise LedgerError(
            f"instant mismatch: base has {len(base.instants)} instants, control has {len(control.instants)}"
        )
    if base.normalization != control.normalization:
        raise LedgerError(f"normalization mismatch: {base.normalization} vs {control.normalization}")
    delta = control.v - base.v
    return ModeLedger(
        instants=np.array(base.instants),
        v_base=np.array(base.v),
        v_control=np.array(control.v),
        delta=delta,
        total_base=base.total,
        total_control=control.total,
        total_delta=control.total - base.total,
        normalization=base.normalization,
    )


def write_ledger_csv(ledger: ModeLedger, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "V_basic", "V_control", "delta"])
        for row in zip(ledger.instants, ledger.v_base, ledger.v_control, ledger.delta):
            w.writerow([int(row[0]), *(format_value(x) for x in row[1:])])
        w.writerow(["Total", *(format_value(x) for x in (ledger.total_base, ledger.total_control, ledger.total_delta))])


def write_plot_data(profile: IndicatorProfile, path: str | Path) -> None:
    """Per-instant ``t,V_raw,V_mean,degenerate_count`` for indicator-dynamics plots."""
    raw = period_aggregate(profile, "raw")
    mean = period_aggregate(profile, "mean")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "V_raw", "V_mean", "degenerate_count"])
        for t, a, b, d in zip(profile.instants, raw.v, mean.v, profile.degenerate_counts):
            w.writerow([int(t), format_value(a), format_value(b), int(d)])


# --- published-table fixture -------------------------------------------------


@dataclass(frozen=True)
class FixtureRow:
    t: int
    v_base: Decimal
    v_control: Decimal
    stated_delta: Decimal

    @property
    def recomputed_delta(self) -> Decimal:
        return self.v_control - self.v_base

    @property
    def discrepancy(self) -> Decimal:
        return abs(self.stated_delta - self.recomputed_delta)


@dataclass(frozen=True)
class Fixture:
    rows: tuple[FixtureRow, ...]
    total_base: Decimal
    total_control: Decimal
    total_delta: Decimal


@dataclass(frozen=True)
class FixtureReport:
    rows: tuple[FixtureRow, ...]
    flagged: tuple[FixtureRow, ...]
    max_row_discrepancy: Decimal
    total_identity_residual: Decimal  # |total_base + total_delta - total_control|
    column_sums: tuple[Decimal, Decimal, Decimal]
    column_sum_discrepancies: tuple[Decimal, Decimal, Decimal]

    @property
    def identity_holds(self) -> bool:
        return self.total_identity_residual == 0

    def lines(self) -> list[str]:
        out = [f"rows checked: {len(self.rows)}"]
        for r in self.flagged:
            out.append(
                f"  t={r.t}: stated delta {r.stated_delta} vs recomputed {r.recomputed_delta} "
                f"(discrepancy {r.discrepancy})"
            )
        out.append(f"rows flagged (> {ROW_TOLERANCE}): {len(self.flagged)}")
        out.append(f"max row discrepancy: {self.max_row_discrepancy}")
        out.append(f"total identity residual |base + delta - control|: {self.total_identity_residual}")
        for name, s, d in zip(("V_basic", "V_control", "delta"), self.column_sums, self.column_sum_discrepancies):
            out.append(f"column sum {name}: {s} (differs from stated total by {d})")
        return out


def default_fixture_path() -> Path:
    return Path(str(resources.files("dyncorr") / "data" / "table1.csv"))


def load_fixture(path: str | Path | None = None) -> Fixture:
    path = Path(path) if path is not None else default_fixture_path()
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            records = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise LedgerError(f"cannot read fixture {path}: {exc}") from None
    if not records or [h.strip() for h in records[0]] != ["t", "V_basic", "V_control", "delta"]:
        raise LedgerError(f"{path}: header must be t,V_basic,V_control,delta")
    body = records[1:]
    if not body or body[-1][0].strip() != "Total":
        raise LedgerError(f"{path}: last row must be the Total row")
    try:
        rows = tuple(
            FixtureRow(int(r[0]), Decimal(r[1]), Decimal(r[2]), Decimal(r[3])) for r in body[:-1] if len(r) == 4
        )
        totals = [Decimal(x) for x in body[-1][1:4]]
    except (ValueError, InvalidOperation, IndexError) as exc:
        raise LedgerError(f"{path}: malformed fixture ({exc})") from None
    if len(rows) != len(body) - 1 or len(totals) != 3:
        raise LedgerError(f"{path}: every row needs exactly 4 cells")
    if [r.t for r in rows] != list(range(1, len(rows) + 1)):
        raise LedgerError(f"{path}: rows must be numbered 1..{len(rows)}")
    return Fixture(rows, *totals)


def verify_fixture(fixture: Fixture) -> FixtureReport:
    if not fixture.rows:
        raise LedgerError("fixture has no rows")
    flagged = tuple(r for r in fixture.rows if r.discrepancy > ROW_TOLERANCE)
    sums = (
        sum((r.v_base for r in fixture.rows), Decimal(0)),
        sum((r.v_control for r in fixture.rows), Decimal(0)),
        sum((r.stated_delta for r in fixture.rows), Decimal(0)),
    )
    stated = (fixture.total_base, fixture.total_control, fixture.total_delta)
    return FixtureReport(
        rows=fixture.rows,
        flagged=flagged,
        max_row_discrepancy=max(r.discrepancy for r in fixture.rows),
        total_identity_residual=abs(fixture.total_base + fixture.total_delta - fixture.total_control),
        column_sums=sums,
        column_sum_discrepancies=tuple(abs(s - t) for s, t in zip(sums, stated)),
    )


# Cost figures quoted alongside the published table. The two routes to a
# five-year total disagree; both are reported, neither is adjusted.
BASE_COSTS = 5_641_442
ADDITIONAL_COSTS = 9_060
STATED_TOTAL_COSTS = 5_666_745


def cost_paths() -> dict[str, int]:
    summed = BASE_COSTS + ADDITIONAL_COSTS
    return {
        "base_plus_additional": summed,
        "stated_total": STATED_TOTAL_COSTS,
        "gap": STATED_TOTAL_COSTS - summed,
    }
