"""Command-line front end: run scenarios, compare degradation on/off, and
execute the built-in acceptance suite.

Exit codes are the only machine contract: 0 for a clean completion, 2 when a
run ends with a collision, 1 for scenario/spec errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path
from typing import Optional, Sequence

from .engine import RunReport, Simulator, Trace
from .scenario import RunSpec, ScenarioSpec, SpecError, load_scenario

EXIT_OK = 0
EXIT_SPEC_ERROR = 1
EXIT_COLLISION = 2


def _apply_overrides(spec: ScenarioSpec, args: argparse.Namespace) -> ScenarioSpec:
    run = spec.run
    if args.dt is not None or args.duration is not None:
        run = RunSpec(dt=args.dt if args.dt is not None else run.dt,
                      duration=args.duration if args.duration is not None else run.duration,
                      seed=run.seed)
    spec = dataclasses.replace(
        spec, run=run,
        degradation_enabled=spec.degradation_enabled and not args.no_degradation,
        halt_on_collision=spec.halt_on_collision or args.halt_on_collision)
    spec.tick_count()  # re-validate the run window
    return spec


def _write_outputs(out_dir: Path, trace: Trace, report: RunReport,
                   prefix: str = "") -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    trace.write_csv(out_dir / f"{prefix}trace.csv")
    (out_dir / f"{prefix}report.txt").write_text(report.to_text())
    report.write_events(out_dir / f"{prefix}events.log")


def cmd_run(args: argparse.Namespace) -> int:
    try:
        spec = _apply_overrides(load_scenario(args.scenario), args)
        trace, report = Simulator(spec).run()
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC_ERROR
    _write_outputs(Path(args.out), trace, report)
    for t, a, b in report.collisions:
        print(f"collision at t={t:.3f} between v{a} and v{b}", file=sys.stderr)
    print(f"{spec.name}: {report.ticks} ticks, "
          f"{len(report.collisions)} collision(s), "
          f"{len(report.completions)} maneuver completion(s)")
    return EXIT_COLLISION if report.collisions else EXIT_OK


def _pair_text(min_gaps: dict) -> list[str]:
    return [f"  {front}-{back}: {gap:.3f}"
            for (front, back), gap in sorted(min_gaps.items())]


def cmd_compare(args: argparse.Namespace) -> int:
    try:
        spec = load_scenario(args.scenario)
        if not spec.fault_events():
            print("error: compare needs a scenario with at least one fault "
                  "injection", file=sys.stderr)
            return EXIT_SPEC_ERROR
        out_dir = Path(args.out)
        results = {}
        for label, enabled in (("on", True), ("off", False)):
            leg = dataclasses.replace(spec, degradation_enabled=enabled)
            trace, report = Simulator(leg).run()
            _write_outputs(out_dir / label, trace, report)
            results[label] = report
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC_ERROR

    lines = [f"scenario: {spec.name}", ""]
    for label in ("on", "off"):
        report = results[label]
        lines.append(f"degradation {label}:")
        lines.append(f"  collisions: {len(report.collisions)}")
        for t, a, b in report.collisions:
            lines.append(f"    t={t:.3f} pair=({a},{b})")
        lines.append("  min gaps:")
        lines.extend("  " + row for row in _pair_text(report.min_gaps))
        lines.append("")
    text = "\n".join(lines)
    (out_dir / "compare.txt").write_text(text)
    print(text, end="")
    return EXIT_OK


def cmd_accept(_: argparse.Namespace) -> int:
    from .acceptance import format_table, run_all
    results = run_all()
    print(format_table(results))
    return EXIT_OK if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="platoon-sim",
        description="Deterministic cooperative-platoon simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario file")
    p_run.add_argument("scenario", help="path to a .scenario file")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--no-degradation", action="store_true",
                       help="disable fault detection and degradation")
    p_run.add_argument("--dt", type=float, default=None, help="override tick length (s)")
    p_run.add_argument("--duration", type=float, default=None,
                       help="override run duration (s)")
    p_run.add_argument("--halt-on-collision", action="store_true",
                       help="stop the run at the first collision")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare",
                           help="run a fault scenario with degradation on and off")
    p_cmp.add_argument("scenario", help="path to a .scenario file")
    p_cmp.add_argument("--out", required=True, help="output directory")
    p_cmp.set_defaults(func=cmd_compare)

    p_acc = sub.add_parser("accept", help="run the built-in acceptance suite")
    p_acc.set_defaults(func=cmd_accept)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
