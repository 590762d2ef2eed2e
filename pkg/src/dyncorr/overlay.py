"""Control-mode overlay: skill/compliance costs, cost injections, budget check.

Plan files use the ``key = value`` format (see :mod:`dyncorr.kvfile`)::

    budget_cap = 9060              # optional, thousand rubles

    [skill risk_assessment]        # one section per skill
    training = 1, 120.0            # <process id> = <compliance 0|1>, <cost>
    servers = 0, 300.0

    [inject]                       # one section per injection
    target = training
    start = 1                      # first period (inclusive)
    end = 18                       # last period (inclusive)
    amount = 60                    # added to every period in start..end

Processes a skill section does not mention get compliance 0 and cost 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .kvfile import KVFormatError, Section, as_float, as_int, read_kv
from .series import ParameterSeries


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class SkillMatrix:
    skill_ids: tuple[str, ...]
    process_ids: tuple[str, ...]
    compliance: np.ndarray  # skills x processes, 0/1

    def __post_init__(self):
        c = np.asarray(self.compliance, dtype=np.int8).reshape(len(self.skill_ids), len(self.process_ids))
        if not np.isin(c, (0, 1)).all():
            raise PlanError("compliance entries must be 0 or 1")
        object.__setattr__(self, "compliance", c)


@dataclass(frozen=True)
class CostAssignment:
    costs: np.ndarray  # skills x processes, thousand rubles

    def __post_init__(self):
        c = np.asarray(self.costs, dtype=np.float64)
        if c.ndim != 2 or (c < 0).any() or not np.isfinite(c).all():
            raise PlanError("costs must be a finite, nonnegative 2-D table")
        object.__setattr__(self, "costs", c)


@dataclass(frozen=True)
class Injection:
    target: str
    start: int
    end: int
    amount: float

    def __post_init__(self):
        if self.start > self.end:
            raise PlanError(f"injection into {self.target!r}: start {self.start} > end {self.end}")
        if not self.amount >= 0:
            raise PlanError(f"injection into {self.target!r}: amount must be >= 0, got {self.amount}")

    @property
    def periods(self) -> int:
        return self.end - self.start + 1

    @property
    def total(self) -> float:
        return self.amount * self.periods


def _empty_skills() -> SkillMatrix:
    return SkillMatrix((), (), np.zeros((0, 0)))


@dataclass(frozen=True)
class OverlayPlan:
    skill_matrix: SkillMatrix = field(default_factory=_empty_skills)
    cost_assignment: CostAssignment = field(default_factory=lambda: CostAssignment(np.zeros((0, 0))))
    schedule: tuple[Injection, ...] = ()
    budget_cap: float | None = None

    def __post_init__(self):
        if self.cost_assignment.costs.shape != self.skill_matrix.compliance.shape:
            raise PlanError(
                f"cost table {self.cost_assignment.costs.shape} does not match "
                f"compliance table {self.skill_matrix.compliance.shape}"
            )
        object.__setattr__(self, "schedule", tuple(self.schedule))

    def validate_against(self, series: ParameterSeries) -> None:
        ids = set(series.param_ids)
        first, last = series.period_origin, series.period_origin + series.n_periods - 1
        for pid in self.skill_matrix.process_ids:
            if pid not in ids:
                raise PlanError(f"skill process {pid!r} is not a parameter of the series")
        for inj in self.schedule:
            if inj.target not in ids:
                raise PlanError(f"unknown injection target {inj.target!r}")
            if inj.start < first or inj.end > last:
                raise PlanError(
                    f"injection into {inj.target!r} covers periods {inj.start}..{inj.end}, "
                    f"series covers {first}..{last}"
                )


def skill_cost(plan: OverlayPlan, skill: int) -> float:
    """Cost of one skill: sum over processes of compliance x cost."""
    m = len(plan.skill_matrix.skill_ids)
    if not 0 <= skill < m:
        raise IndexError(f"skill index {skill} out of range for {m} skills")
    row = plan.skill_matrix.compliance[skill] * plan.cost_assignment.costs[skill]
    return float(np.cumsum(row)[-1]) if row.size else 0.0


def total_skill_cost(plan: OverlayPlan) -> float:
    return sum(skill_cost(plan, i) for i in range(len(plan.skill_matrix.skill_ids)))


def total_injected(plan: OverlayPlan) -> float:
    return float(sum(inj.total for inj in plan.schedule))


def apply_overlay(base: ParameterSeries, plan: OverlayPlan) -> ParameterSeries:
    plan.validate_against(base)
    if not plan.schedule:
        return base
    values = np.array(base.values)
    for inj in plan.schedule:
        j = base.column_index(inj.target)
        values[base.row_index(inj.start) : base.row_index(inj.end) + 1, j] += inj.amount
    return base.with_values(values)


def merge_plans(*plans: OverlayPlan) -> OverlayPlan:
    """Concatenate schedules; skills and cap are taken from the first plan."""
    first = plans[0]
    return OverlayPlan(
        first.skill_matrix,
        first.cost_assignment,
        tuple(inj for p in plans for inj in p.schedule),
        first.budget_cap,
    )


@dataclass(frozen=True)
class BudgetVerdict:
    ok: bool
    total_cost: float
    budget_cap: float | None
    excess: float
    base_total: float

    @property
    def status(self) -> str:
        return "OK" if self.ok else "VIOLATION"


def check_budget(plan: OverlayPlan, base_total: float = 0.0) -> BudgetVerdict:
    """C(X) is the injected overlay cost; the cap bound is inclusive."""
    cost = total_injected(plan)
    cap = plan.budget_cap
    if cap is None or cost <= cap:
        return BudgetVerdict(True, cost, cap, 0.0, base_total)
    return BudgetVerdict(False, cost, cap, cost - cap, base_total)


# --- plan files --------------------------------------------------------------


def _parse_skill(sec: Section) -> dict[str, tuple[int, float]]:
    if not sec.label:
        raise KVFormatError(f"line {sec.line}: [skill] needs an id, e.g. [skill risk_assessment]")
    out = {}
    for pid, value in sec.entries.items():
        parts = [p.strip() for p in value.split(",")]
        if len(parts) != 2:
            raise KVFormatError(f"[skill {sec.label}] {pid}: expected '<0|1>, <cost>', got {value!r}")
        try:
            out[pid] = (int(parts[0]), float(parts[1]))
        except ValueError:
            raise KVFormatError(f"[skill {sec.label}] {pid}: expected '<0|1>, <cost>', got {value!r}") from None
    return out


def parse_plan(sections: list[Section]) -> OverlayPlan:
    top = sections[0]
    unknown = set(top.entries) - {"budget_cap"}
    if unknown:
        raise KVFormatError(f"unknown top-level keys: {sorted(unknown)}")
    cap = as_float(top, "budget_cap") if "budget_cap" in top.entries else None
    skills: dict[str, dict[str, tuple[int, float]]] = {}
    schedule = []
    for sec in sections[1:]:
        if sec.name == "skill":
            if sec.label in skills:
                raise KVFormatError(f"line {sec.line}: duplicate skill {sec.label!r}")
            skills[sec.label] = _parse_skill(sec)
        elif sec.name == "inject":
            extra = set(sec.entries) - {"target", "start", "end", "amount"}
            if extra:
                raise KVFormatError(f"line {sec.line}: unknown [inject] keys {sorted(extra)}")
            schedule.append(
                Injection(sec.require("target"), as_int(sec, "start"), as_int(sec, "end"), as_float(sec, "amount"))
            )
        else:
            raise KVFormatError(f"line {sec.line}: unknown section [{sec.name}]")
    process_ids: list[str] = []
    for entries in skills.values():
        process_ids += [p for p in entries if p not in process_ids]
    compliance = np.zeros((len(skills), len(process_ids)), dtype=np.int8)
    costs = np.zeros((len(skills), len(process_ids)))
    for i, entries in enumerate(skills.values()):
        for pid, (flag, cost) in entries.items():
            j = process_ids.index(pid)
            compliance[i, j], costs[i, j] = flag, cost
    return OverlayPlan(
        SkillMatrix(tuple(skills), tuple(process_ids), compliance),
        CostAssignment(costs),
        tuple(schedule),
        cap,
    )


def load_plan(path: str | Path) -> OverlayPlan:
    return parse_plan(read_kv(path))


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def dump_plan(plan: OverlayPlan) -> str:
    lines = []
    if plan.budget_cap is not None:
        lines += [f"budget_cap = {_num(plan.budget_cap)}", ""]
    sm, ca = plan.skill_matrix, plan.cost_assignment
    for i, sid in enumerate(sm.skill_ids):
        lines.append(f"[skill {sid}]")
        for j, pid in enumerate(sm.process_ids):
            if sm.compliance[i, j] or ca.costs[i, j]:
                lines.append(f"{pid} = {int(sm.compliance[i, j])}, {_num(ca.costs[i, j])}")
        lines.append("")
    for inj in plan.schedule:
        lines += [
            "[inject]",
            f"target = {inj.target}",
            f"start = {inj.start}",
            f"end = {inj.end}",
            f"amount = {_num(inj.amount)}",
            "",
        ]
    return "\n".join(lines)


def write_plan(plan: OverlayPlan, path: str | Path) -> None:
    Path(path).write_text(dump_plan(plan), encoding="utf-8")
