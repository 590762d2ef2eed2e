"""Synthetic enterprise digital copies.

Random numbers come from numpy's ``Philox`` counter-based bit generator
(4x64, 10 rounds) seeded with the 64-bit scenario seed, so a seed always
reproduces the same series.

Column layout: named cost lines first (uncoupled), then department blocks
in order, then free columns, with the identically-zero ("inactive")
columns last.
A block column is ``baseline + amp * (c * f_b(t) + sqrt(1 - c^2) * u(t))
+ noise``, where ``f_b`` is the block's seasonal latent factor and ``c``
the block coupling. Free columns carry their own seasonal factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .kvfile import KVFormatError, as_float, as_int, read_kv
from .overlay import CostAssignment, Injection, OverlayPlan, SkillMatrix
from .series import ParameterSeries


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    n_params: int = 200
    n_periods: int = 63
    seed: int = 0
    seasonal_period: int = 12
    noise_scale: float = 1.0
    sparsity: float = 0.0
    department_blocks: tuple[tuple[int, float], ...] = ()
    baseline: float = 100.0
    seasonal_amplitude: float = 10.0
    named_params: tuple[str, ...] = ()
    period_origin: int = 1

    def __post_init__(self):
        object.__setattr__(self, "department_blocks", tuple((int(s), float(c)) for s, c in self.department_blocks))
        object.__setattr__(self, "named_params", tuple(self.named_params))
        if self.n_params < 1 or self.n_periods < 1:
            raise ScenarioError("n_params and n_periods must be >= 1")
        if not 0 <= self.sparsity < 1:
            raise ScenarioError(f"sparsity must be in [0, 1), got {self.sparsity}")
        if self.noise_scale < 0:
            raise ScenarioError(f"noise_scale must be >= 0, got {self.noise_scale}")
        if self.seasonal_period < 1:
            raise ScenarioError(f"seasonal_period must be >= 1, got {self.seasonal_period}")
        if not 0 <= self.seed < 2**64:
            raise ScenarioError("seed must be an unsigned 64-bit integer")
        for size, coupling in self.department_blocks:
            if size < 1 or not 0 <= coupling <= 1:
                raise ScenarioError(f"bad block ({size}, {coupling}): size >= 1, coupling in [0, 1]")
        if sum(s for s, _ in self.department_blocks) > self.n_params:
            raise ScenarioError("block sizes exceed n_params")

    @property
    def inactive_count(self) -> int:
        return int(round(self.sparsity * self.n_params))

    def param_ids(self) -> tuple[str, ...]:
        named = self.named_params
        return named + tuple(f"p{j:05d}" for j in range(len(named), self.n_params))


def generate_scenario(config: ScenarioConfig) -> ParameterSeries:
    n, T = config.n_params, config.n_periods
    n_zero = config.inactive_count
    n_active = n - n_zero
    blocked = sum(s for s, _ in config.department_blocks)
    if blocked > n_active:
        raise ScenarioError(f"blocks need {blocked} active columns, only {n_active} remain after sparsity")
    if blocked + len(config.named_params) > n_active:
        raise ScenarioError(
            f"{len(config.named_params)} named parameters and {blocked} block columns "
            f"exceed {n_active} active columns"
        )
    if len(set(config.named_params)) != len(config.named_params):
        raise ScenarioError("named_params contains duplicates")

    rng = np.random.Generator(np.random.Philox(config.seed))
    steps = np.arange(T)[:, None]
    omega = 2.0 * math.pi / config.seasonal_period

    baseline = config.baseline * (0.5 + rng.random(n_active))
    amp = config.seasonal_amplitude * (0.5 + rng.random(n_active))
    loadings = np.zeros(n_active)
    latent = np.zeros((T, n_active))

    named = len(config.named_params)
    col = named
    for size, coupling in config.department_blocks:
        phase = rng.uniform(0.0, 2.0 * math.pi)
        factor = np.sin(omega * steps[:, 0] + phase) + rng.standard_normal(T)
        latent[:, col : col + size] = factor[:, None]
        loadings[col : col + size] = coupling
        col += size
    free = np.r_[0:named, col:n_active]
    if free.size:
        phases = rng.uniform(0.0, 2.0 * math.pi, free.size)
        latent[:, free] = np.sin(omega * steps + phases) + rng.standard_normal((T, free.size))
        loadings[free] = 1.0

    idio = rng.standard_normal((T, n_active))
    noise = rng.standard_normal((T, n_active))
    shape = loadings * latent + np.sqrt(1.0 - loadings**2) * idio
    active = baseline + amp * shape + config.noise_scale * noise

    values = np.zeros((T, n))
    values[:, :n_active] = active
    return ParameterSeries(config.param_ids(), values, config.period_origin)


# --- config files ------------------------------------------------------------

_INT_KEYS = ("n_params", "n_periods", "seed", "seasonal_period", "period_origin")
_FLOAT_KEYS = ("noise_scale", "sparsity", "baseline", "seasonal_amplitude")


def load_config(path: str | Path) -> ScenarioConfig:
    """Scenario file: top-level ``key = value`` fields and one ``[block]`` per department."""
    sections = read_kv(path)
    top = sections[0]
    kwargs: dict = {}
    for key, value in top.entries.items():
        if key in _INT_KEYS:
            kwargs[key] = as_int(top, key)
        elif key in _FLOAT_KEYS:
            kwargs[key] = as_float(top, key)
        elif key == "named_params":
            kwargs[key] = tuple(p.strip() for p in value.split(",") if p.strip())
        else:
            raise KVFormatError(f"unknown scenario key {key!r}")
    blocks = []
    for sec in sections[1:]:
        if sec.name != "block":
            raise KVFormatError(f"line {sec.line}: unknown section [{sec.name}]")
        blocks.append((as_int(sec, "size"), as_float(sec, "coupling")))
    kwargs["department_blocks"] = tuple(blocks)
    try:
        return ScenarioConfig(**kwargs)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def dump_config(config: ScenarioConfig) -> str:
    lines = [f"{k} = {getattr(config, k)}" for k in _INT_KEYS + _FLOAT_KEYS]
    if config.named_params:
        lines.append("named_params = " + ", ".join(config.named_params))
    for size, coupling in config.department_blocks:
        lines += ["", "[block]", f"size = {size}", f"coupling = {coupling}"]
    return "\n".join(lines) + "\n"


# --- paper-replica scenario --------------------------------------------------

COST_LINES = (
    "wages",
    "business_trips",
    "taxes",
    "training",
    "office",
    "communications",
    "org_technics",
    "servers",
    "software",
)

# seven departments: economic, production, logistics, finance, accounting, sales, marketing
_DEPARTMENTS = ((20, 0.8), (30, 0.7), (20, 0.75), (20, 0.8), (15, 0.85), (20, 0.7), (15, 0.75))

# (target, start, end, amount per period); totals to 9,060
_REPLICA_SCHEDULE = (
    ("servers", 1, 1, 2400.0),
    ("software", 1, 1, 1200.0),
    ("org_technics", 1, 1, 360.0),
    ("business_trips", 1, 2, 300.0),
    ("training", 1, 18, 60.0),
    ("wages", 1, 57, 40.0),
    ("taxes", 1, 57, 10.0),
    ("office", 1, 57, 5.0),
    ("communications", 1, 57, 5.0),
)

_REPLICA_SKILLS = {
    "risk_assessment": {"servers": 2400.0, "org_technics": 360.0},
    "treatment_plan": {"software": 1200.0, "communications": 285.0},
    "policies_procedures": {"wages": 2280.0, "taxes": 570.0},
    "monitor_tools": {"training": 1080.0, "office": 285.0},
    "monitor_process": {"business_trips": 600.0},
}

REPLICA_TOTAL = 9060.0


def paper_replica_config(seed: int = 2020) -> ScenarioConfig:
    """200 parameters over 63 periods: 57 analyzable instants after a 6-period warm-up."""
    return ScenarioConfig(
        n_params=200,
        n_periods=63,
        seed=seed,
        seasonal_period=12,
        noise_scale=2.0,
        sparsity=0.1,
        department_blocks=_DEPARTMENTS,
        named_params=COST_LINES,
    )


def paper_replica_plan(budget_cap: float | None = REPLICA_TOTAL) -> OverlayPlan:
    processes = COST_LINES
    compliance = np.zeros((len(_REPLICA_SKILLS), len(processes)), dtype=np.int8)
    costs = np.zeros(compliance.shape)
    for i, lines in enumerate(_REPLICA_SKILLS.values()):
        for pid, cost in lines.items():
            j = processes.index(pid)
            compliance[i, j] = 1
            costs[i, j] = cost
    return OverlayPlan(
        SkillMatrix(tuple(_REPLICA_SKILLS), processes, compliance),
        CostAssignment(costs),
        tuple(Injection(*row) for row in _REPLICA_SCHEDULE),
        budget_cap,
    )


def with_seed(config: ScenarioConfig, seed: int) -> ScenarioConfig:
    return replace(config, seed=seed)
