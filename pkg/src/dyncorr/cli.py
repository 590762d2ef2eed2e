"""``dyncorr`` command line.

Exit status: 0 success, 1 usage error, 2 data or validation error,
3 budget violation (``--enforce-budget``).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class BudgetViolation(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _bounded_int(name: str, lo: int, hi: int | None = None):
    def parse(text: str) -> int:
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an integer, got {text!r}") from None
        if value < lo or (hi is not None and value > hi):
            bound = f">= {lo}" if hi is None else f"in [{lo}, {hi}]"
            raise argparse.ArgumentTypeError(f"{name} must be {bound}, got {value}")
        return value

    return parse


def _nonneg_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value >= 0 or value == float("inf"):
        raise argparse.ArgumentTypeError(f"expected a finite number >= 0, got {text!r}")
    return value


@dataclass
class RunManifest:
    command: str
    inputs: dict[str, str] = field(default_factory=dict)
    input_checksums: dict[str, str] = field(default_factory=dict)
    window: dict | None = None
    normalization: str | None = None
    seed: int | None = None
    outputs: list[str] = field(default_factory=list)
    results: dict = field(default_factory=dict)
    duration_s: float = 0.0
    tool_version: str = __version__

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _engine_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=_bounded_int("--k", 2), default=6, help="window length in periods (default 6)")
    p.add_argument("--normalization", choices=("raw", "mean"), default="raw")
    p.add_argument("--tile-width", type=_bounded_int("--tile-width", 1), default=512)
    p.add_argument("--threads", type=_bounded_int("--threads", 1), default=None,
                   help="worker threads (default: $DYNCORR_THREADS, else all cores)")


def _budget_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--enforce-budget", action="store_true", help="exit 3 if injected cost exceeds the cap")
    p.add_argument("--budget-cap", type=_nonneg_float, default=None, help="override the plan's budget_cap")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dyncorr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"dyncorr {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="indicator profile of one series")
    p.add_argument("--input", required=True)
    _engine_args(p)
    p.add_argument("--out", required=True, help="profile CSV; plot data and manifest are written beside it")

    p = sub.add_parser("compare", help="ledger of base vs control series")
    p.add_argument("--base", required=True)
    p.add_argument("--control", required=True)
    _engine_args(p)
    p.add_argument("--out", required=True, help="ledger CSV")

    p = sub.add_parser("overlay", help="apply an overlay plan to a series")
    p.add_argument("--input", required=True)
    p.add_argument("--plan", help="plan file (default: the paper-replica plan)")
    p.add_argument("--out", required=True, help="control-mode series file")
    _budget_args(p)

    p = sub.add_parser("generate", help="write a synthetic scenario as CSV and columnar-binary")
    p.add_argument("--config", help="scenario file (default: the paper-replica scenario)")
    p.add_argument("--seed", type=_bounded_int("--seed", 0, 2**64 - 1), default=None)
    p.add_argument("--out", required=True, help="output stem; writes <stem>.csv and <stem>.mdsc")

    p = sub.add_parser("pipeline", help="generate, overlay, profile and compare in one run")
    p.add_argument("--config", help="scenario file (default: the paper-replica scenario)")
    p.add_argument("--plan", help="plan file (default: the paper-replica plan)")
    p.add_argument("--empty-plan", action="store_true", help="use a plan with no injections")
    p.add_argument("--seed", type=_bounded_int("--seed", 0, 2**64 - 1), default=None)
    _engine_args(p)
    _budget_args(p)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("verify-fixture", help="check the arithmetic of the published table")
    p.add_argument("--fixture", help="table CSV (default: bundled table1.csv)")
    return parser


def _sibling(out: Path, suffix: str) -> Path:
    return out.with_name(out.stem + suffix)


def _load(path: str):
    from .series import SeriesFormatError, load_series

    if not Path(path).is_file():
        raise DataError(f"input file not found: {path}")
    try:
        return load_series(path)
    except (SeriesFormatError, UnicodeDecodeError) as exc:
        raise DataError(str(exc)) from None


def _window(args):
    from .engine import WindowSpec

    return WindowSpec(args.k)


def _profile(series, args):
    from .engine import WindowError, indicator_profile

    try:
        return indicator_profile(series, _window(args), tile_width=args.tile_width, threads=args.threads)
    except WindowError as exc:
        raise DataError(str(exc)) from None


def _window_dict(args) -> dict:
    w = _window(args)
    return {"k": w.k, "convention": w.convention, "degenerate_epsilon": w.degenerate_epsilon,
            "tile_width": args.tile_width}


def _plan(args):
    from .kvfile import KVFormatError
    from .overlay import OverlayPlan, PlanError, load_plan
    from .scenario import paper_replica_plan

    if getattr(args, "empty_plan", False):
        plan = OverlayPlan()
    elif args.plan:
        if not Path(args.plan).is_file():
            raise DataError(f"plan file not found: {args.plan}")
        try:
            plan = load_plan(args.plan)
        except (KVFormatError, PlanError) as exc:
            raise DataError(f"{args.plan}: {exc}") from None
    else:
        plan = paper_replica_plan()
    if args.budget_cap is not None:
        from dataclasses import replace

        plan = replace(plan, budget_cap=args.budget_cap)
    return plan


def _budget(plan, base, args, manifest):
    from .overlay import check_budget
    from .summation import ordered_sum

    verdict = check_budget(plan, ordered_sum(base.values))
    manifest.results["budget"] = asdict(verdict) | {"status": verdict.status}
    cap = "none" if verdict.budget_cap is None else f"{verdict.budget_cap:g}"
    line = f"budget: C(X) = {verdict.total_cost:g}, cap = {cap}: {verdict.status}"
    if not verdict.ok:
        line += f" (excess {verdict.excess:g})"
    print(line)
    if args.enforce_budget and not verdict.ok:
        raise BudgetViolation(line)
    return verdict


def _apply(base, plan):
    from .overlay import PlanError, apply_overlay

    try:
        return apply_overlay(base, plan)
    except PlanError as exc:
        raise DataError(str(exc)) from None


def _scenario(args):
    from .kvfile import KVFormatError
    from .scenario import ScenarioError, load_config, paper_replica_config, with_seed

    if args.config:
        if not Path(args.config).is_file():
            raise DataError(f"scenario file not found: {args.config}")
        try:
            config = load_config(args.config)
        except (KVFormatError, ScenarioError) as exc:
            raise DataError(f"{args.config}: {exc}") from None
    else:
        config = paper_replica_config()
    if args.seed is not None:
        config = with_seed(config, args.seed)
    return config


def _generate(config):
    from .scenario import ScenarioError, generate_scenario

    try:
        return generate_scenario(config)
    except ScenarioError as exc:
        raise DataError(str(exc)) from None


def cmd_analyze(args, manifest: RunManifest) -> None:
    from .engine import total_indicator, write_profile_csv
    from .ledger import period_aggregate, write_plot_data
    from .series import checksum

    series = _load(args.input)
    manifest.inputs["input"] = args.input
    manifest.input_checksums["input"] = checksum(series)
    manifest.window = _window_dict(args)
    manifest.normalization = args.normalization
    profile = _profile(series, args)
    out = Path(args.out)
    plot = _sibling(out, ".plot.csv")
    write_profile_csv(profile, out)
    write_plot_data(profile, plot)
    agg = period_aggregate(profile, args.normalization)
    manifest.outputs += [str(out), str(plot)]
    manifest.results.update(instants=len(profile.instants), total_G=total_indicator(profile), total_V=agg.total)
    print(f"{len(profile.instants)} instants, G = {manifest.results['total_G']:.6f}")


def cmd_compare(args, manifest: RunManifest) -> None:
    from .ledger import compare_modes, period_aggregate, write_ledger_csv
    from .series import checksum

    base, control = _load(args.base), _load(args.control)
    if (base.n_periods, base.period_origin) != (control.n_periods, control.period_origin):
        raise DataError(
            f"period mismatch: base has {base.n_periods} periods starting at t={base.period_origin}, "
            f"control has {control.n_periods} periods starting at t={control.period_origin}"
        )
    manifest.inputs.update(base=args.base, control=args.control)
    manifest.input_checksums.update(base=checksum(base), control=checksum(control))
    manifest.window = _window_dict(args)
    manifest.normalization = args.normalization
    ledger = compare_modes(
        period_aggregate(_profile(base, args), args.normalization, "base"),
        period_aggregate(_profile(control, args), args.normalization, "control"),
    )
    write_ledger_csv(ledger, args.out)
    manifest.outputs.append(args.out)
    manifest.results.update(_ledger_totals(ledger))
    print(f"total_base = {ledger.total_base:.6f}, total_control = {ledger.total_control:.6f}, "
          f"delta = {ledger.total_delta:.6f}")


def _ledger_totals(ledger) -> dict:
    return {"instants": len(ledger.instants), "total_base": ledger.total_base,
            "total_control": ledger.total_control, "total_delta": ledger.total_delta}


def cmd_overlay(args, manifest: RunManifest) -> None:
    from .series import checksum, write_series

    base = _load(args.input)
    plan = _plan(args)
    manifest.inputs["input"] = args.input
    manifest.input_checksums["input"] = checksum(base)
    if args.plan:
        manifest.inputs["plan"] = args.plan
    _budget(plan, base, args, manifest)
    control = _apply(base, plan)
    write_series(control, args.out)
    manifest.outputs.append(args.out)


def cmd_generate(args, manifest: RunManifest) -> None:
    from .series import checksum, diagnose, write_series

    config = _scenario(args)
    series = _generate(config)
    stem = Path(args.out)
    paths = [stem.with_name(stem.name + ".csv"), stem.with_name(stem.name + ".mdsc")]
    write_series(series, paths[0], "csv")
    write_series(series, paths[1], "columnar-binary")
    if args.config:
        manifest.inputs["config"] = args.config
    manifest.seed = config.seed
    manifest.outputs += [str(p) for p in paths]
    diag = diagnose(series)
    manifest.results.update(asdict(diag) | {"n_params": series.n_params, "n_periods": series.n_periods})
    print(f"{series.n_periods} x {series.n_params} series, {diag.zero_columns} zero columns, checksum {checksum(series)[:16]}")


def cmd_pipeline(args, manifest: RunManifest) -> None:
    from .engine import total_indicator
    from .ledger import compare_modes, period_aggregate, write_ledger_csv, write_plot_data
    from .series import checksum, write_series

    config = _scenario(args)
    plan = _plan(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.config:
        manifest.inputs["config"] = args.config
    if args.plan:
        manifest.inputs["plan"] = args.plan
    manifest.seed = config.seed
    manifest.window = _window_dict(args)
    manifest.normalization = args.normalization
    base = _generate(config)
    _budget(plan, base, args, manifest)
    control = _apply(base, plan)

    pb, pc = _profile(base, args), _profile(control, args)
    ledger = compare_modes(
        period_aggregate(pb, args.normalization, "base"),
        period_aggregate(pc, args.normalization, "control"),
    )
    files = {
        "base.csv": lambda p: write_series(base, p),
        "control.csv": lambda p: write_series(control, p),
        "ledger.csv": lambda p: write_ledger_csv(ledger, p),
        "plot_base.csv": lambda p: write_plot_data(pb, p),
        "plot_control.csv": lambda p: write_plot_data(pc, p),
    }
    for name, writer in files.items():
        writer(out / name)
        manifest.outputs.append(str(out / name))
    manifest.input_checksums.update(base_series=checksum(base), control_series=checksum(control))
    manifest.results.update(_ledger_totals(ledger), G_base=total_indicator(pb), G_control=total_indicator(pc))
    print(f"{len(ledger.instants)} instants, total_base = {ledger.total_base:.6f}, "
          f"total_control = {ledger.total_control:.6f}, delta = {ledger.total_delta:.6f}")


def cmd_verify_fixture(args, manifest: RunManifest | None) -> None:
    from .ledger import LedgerError, cost_paths, load_fixture, verify_fixture

    try:
        report = verify_fixture(load_fixture(args.fixture))
    except LedgerError as exc:
        raise DataError(str(exc)) from None
    for line in report.lines():
        print(line)
    paths = cost_paths()
    print(f"five-year costs: base + additional = {paths['base_plus_additional']:,}; "
          f"stated = {paths['stated_total']:,}; unreconciled gap = {paths['gap']:,}")


COMMANDS = {
    "analyze": cmd_analyze,
    "compare": cmd_compare,
    "overlay": cmd_overlay,
    "generate": cmd_generate,
    "pipeline": cmd_pipeline,
    "verify-fixture": cmd_verify_fixture,
}


def _manifest_path(args) -> Path | None:
    if args.command == "verify-fixture":
        return None
    out = Path(args.out)
    if args.command == "pipeline":
        return out / "manifest.json"
    if args.command == "generate":
        return out.with_name(out.name + ".manifest.json")
    return _sibling(out, ".manifest.json")


def run(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)

    manifest = RunManifest(command=" ".join(["dyncorr", *(argv if argv is not None else sys.argv[1:])]))
    start = time.perf_counter()
    try:
        COMMANDS[args.command](args, manifest)
    except BudgetViolation as exc:
        print(f"dyncorr: budget violation: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except DataError as exc:
        print(f"dyncorr: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"dyncorr: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    path = _manifest_path(args)
    if path is not None:
        manifest.duration_s = time.perf_counter() - start
        manifest.outputs.append(str(path))
        manifest.write(path)
    return EXIT_OK


def main() -> None:
    sys.exit(run())
