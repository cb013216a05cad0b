"""Command line entry point: ``gnvar run`` and ``gnvar suites``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from typing import Sequence

from . import __version__
from .scenario import SUITES, Scenario, ScenarioError, load_scenario
from .suites import SUITE_INFO, SuiteResult, run_suite, sample_points, thread_count

REPORT_SCHEMA = {
    "type": "object",
    "required": ["schema", "provenance", "passed", "suites"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": "gnvar-report/1"},
        "passed": {"type": "boolean"},
        "provenance": {
            "type": "object",
            "required": ["scenario", "scenario_hash", "version", "seed", "points", "order"],
            "additionalProperties": False,
            "properties": {
                "scenario": {"type": "string"},
                "scenario_hash": {"type": "string"},
                "version": {"type": "string"},
                "seed": {"type": "integer"},
                "points": {"type": "integer", "minimum": 1},
                "order": {"type": "integer", "minimum": 0},
            },
        },
        "suites": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "passed", "tolerance", "tolerance_class", "max_residual",
                             "points", "first_failure", "error", "notes"],
                "additionalProperties": False,
                "properties": {
                    "name": {"enum": list(SUITES)},
                    "passed": {"type": "boolean"},
                    "tolerance": {"type": "number"},
                    "tolerance_class": {"enum": ["exact", "two_path", "lattice"]},
                    "max_residual": {"type": ["number", "null"]},
                    "error": {"type": ["string", "null"]},
                    "notes": {"type": "array", "items": {"type": "string"}},
                    "first_failure": {
                        "oneOf": [
                            {"type": "null"},
                            {"type": "object",
                             "required": ["index", "point", "quantity", "residual"],
                             "properties": {
                                 "index": {"type": "integer"},
                                 "point": {"type": "array", "items": {"type": "number"}},
                                 "quantity": {"type": "string"},
                                 "residual": {"type": "number"}}},
                        ],
                    },
                    "points": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["index", "point", "residuals", "info", "passed"],
                            "additionalProperties": False,
                            "properties": {
                                "index": {"type": "integer"},
                                "point": {"type": "array", "items": {"type": "number"}},
                                "residuals": {"type": "object",
                                              "additionalProperties": {"type": "number"}},
                                "info": {"type": "object",
                                         "additionalProperties": {"type": "number"}},
                                "passed": {"type": "boolean"},
                            },
                        },
                    },
                },
            },
        },
    },
}


@dataclass
class Report:
    scenario: Scenario
    seed: int
    points: int
    order: int
    suites: list[SuiteResult]
    wall_clock: float = 0.0

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.suites)

    def to_dict(self) -> dict:
        """Deterministic content; wall-clock time is left out on purpose."""
        return {
            "schema": "gnvar-report/1",
            "passed": self.passed,
            "provenance": {
                "scenario": self.scenario.name,
                "scenario_hash": self.scenario.source_hash,
                "version": __version__,
                "seed": self.seed,
                "points": self.points,
                "order": self.order,
            },
            "suites": [_suite_dict(s) for s in self.suites],
        }


def _suite_dict(s: SuiteResult) -> dict:
    return {
        "name": s.name,
        "passed": s.passed,
        "tolerance": s.tolerance,
        "tolerance_class": s.tolerance_class,
        "max_residual": s.max_residual,
        "first_failure": s.first_failure(),
        "error": s.error,
        "notes": list(s.notes),
        "points": [{"index": p.index, "point": list(p.point), "residuals": p.residuals,
                    "info": p.info, "passed": p.passed} for p in s.points],
    }


def validate_report(doc: dict) -> None:
    """Raise ``jsonschema.ValidationError`` if ``doc`` does not match the schema."""
    import jsonschema
    jsonschema.validate(doc, REPORT_SCHEMA)


def run(scenario: Scenario, suites: Sequence[str] | None = None, points: int | None = None,
        seed: int | None = None, order: int = 2, threads: int | None = None) -> Report:
    suites = tuple(scenario.suites if suites is None else suites)
    for s in suites:
        if s not in SUITES:
            raise ValueError(f"unknown suite {s!r}")
    seed = scenario.sampling.seed if seed is None else seed
    n = scenario.sampling.points if points is None else points
    pts = sample_points(scenario, n, seed)
    t0 = time.perf_counter()
    results = [run_suite(name, scenario, pts, order, seed, threads) for name in suites]
    return Report(scenario, seed, n, order, results, time.perf_counter() - t0)


def _fmt(x: float | None) -> str:
    return "-" if x is None else f"{x:.3e}"


def emit_report(report: Report, fmt: str = "json") -> bytes:
    if fmt == "json":
        text = json.dumps(report.to_dict(), sort_keys=True, indent=2, allow_nan=False)
        return (text + "\n").encode()
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    sc = report.scenario
    lines = [f"scenario {sc.name}  seed {report.seed}  points {report.points}  "
             f"gnvar {__version__}",
             f"{'suite':<20} {'status':<6} {'max residual':>13} {'tolerance':>10}"]
    for s in report.suites:
        status = "PASS" if s.passed else ("ERROR" if s.error else "FAIL")
        lines.append(f"{s.name:<20} {status:<6} {_fmt(s.max_residual):>13} "
                     f"{s.tolerance:>10.1e}")
        if s.error:
            lines.append(f"    {s.error}")
        ff = s.first_failure()
        if ff:
            coords = ", ".join(f"{c:.6g}" for c in ff["point"])
            lines.append(f"    first failure at #{ff['index']} ({coords}): "
                         f"{ff['quantity']} = {ff['residual']:.3e}")
    lines.append(f"overall {'PASS' if report.passed else 'FAIL'}  "
                 f"wall-clock {report.wall_clock:.2f}s")
    return ("\n".join(lines) + "\n").encode()


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gnvar", description="Numerical checks of variational "
                                 "identities for Einstein-Cartan-Dirac fields.")
    ap.add_argument("--version", action="version", version=f"gnvar {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run verification suites on a scenario")
    r.add_argument("--scenario", required=True,
                   help="scenario file (TOML or JSON) or a bundled scenario name")
    r.add_argument("--suites", help="comma separated suite names (default: scenario's list)")
    r.add_argument("--points", type=int, help="number of sample points")
    r.add_argument("--seed", type=int, help="sampling seed")
    r.add_argument("--order", type=int, default=2, choices=range(0, 3),
                   help="jet order of the two-path comparisons (default 2)")
    r.add_argument("--report", help="write the report to this file")
    r.add_argument("--format", choices=("json", "text"), default="json")
    sub.add_parser("suites", help="list available suites")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "suites":
        for name in SUITES:
            cls, desc = SUITE_INFO[name]
            print(f"{name:<20} [{cls}] {desc}")
        return 0
    try:
        sc = load_scenario(args.scenario)
    except (ScenarioError, FileNotFoundError) as err:
        print(f"gnvar: {err}", file=sys.stderr)
        return 2
    suites = None
    if args.suites is not None:
        suites = [s.strip() for s in args.suites.split(",") if s.strip()]
        bad = [s for s in suites if s not in SUITES]
        if bad:
            print(f"gnvar: unknown suites {bad}; see `gnvar suites`", file=sys.stderr)
            return 2
    if args.points is not None and args.points < 1:
        print("gnvar: --points must be at least 1", file=sys.stderr)
        return 2
    report = run(sc, suites, args.points, args.seed, args.order, thread_count())
    out = emit_report(report, args.format)
    if args.report:
        with open(args.report, "wb") as fh:
            fh.write(out)
        if args.format == "json":
            sys.stdout.write(emit_report(report, "text").decode())
    else:
        sys.stdout.write(out.decode())
    return 0 if report.passed else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
