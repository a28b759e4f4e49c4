"""``bbl-lab`` command line.

Exit status: 0 when every scenario's flags pass or are not applicable,
1 when some flag fails or a scenario errors, 2 on invalid input.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .. import means
from .emit import FORMATS, emit, parse_formats, sanitize
from .runner import default_jobs, run_suite
from .scenario import KINDS, ScenarioError, dump_scenarios, parse_scenario
from .suites import default_suite, random_scenarios


def _beta(text: str) -> float:
    if text.strip().lower() == "inf":
        return math.inf
    v = float(text)
    if not v >= 1.0:
        raise argparse.ArgumentTypeError("beta exponent must be >= 1 or 'inf'")
    return v


def _formats(text: str) -> tuple[str, ...]:
    try:
        return parse_formats(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_output(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--out", default="bbl-lab-out", help="output directory (default: %(default)s)")
    sp.add_argument("--formats", type=_formats, default=FORMATS,
                    help="comma-separated subset of json,csv,svg (default: all)")
    sp.add_argument("--jobs", type=int, default=None,
                    help="parallel scenario workers (default: $BBL_LAB_JOBS or 1)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bbl-lab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    v = sub.add_parser("verify", help="run a scenario file")
    v.add_argument("scenario", help="scenario JSON file")
    _add_output(v)

    r = sub.add_parser("random-suite", help="generate and run a seeded random suite")
    r.add_argument("--kind", choices=KINDS, required=True)
    r.add_argument("--count", type=int, required=True)
    r.add_argument("--seed", type=int, required=True)
    r.add_argument("--p", type=float, default=1.0)
    r.add_argument("--lambda", dest="lam", type=float, default=0.5)
    r.add_argument("--mesh-h", type=float, default=0.02)
    r.add_argument("--quad-tol", type=float, default=1e-6)
    r.add_argument("--angle-count", type=int, default=360)
    r.add_argument("--vertices", type=int, default=8)
    r.add_argument("--elongation", type=float, default=1.0)
    r.add_argument("--beta-exp", type=_beta, default=1.0)
    r.add_argument("--emit-scenarios", metavar="PATH",
                   help="also write the generated scenarios as a scenario file")
    _add_output(r)

    d = sub.add_parser("default-suite", help="run (or just write) the shipped default suite")
    d.add_argument("--emit-scenarios", metavar="PATH", help="write the suite as a scenario file")
    d.add_argument("--no-run", action="store_true", help="only write the scenario file")
    _add_output(d)

    c = sub.add_parser("constants", help="print the explicit constants as JSON")
    c.add_argument("--n", type=int, default=2)
    c.add_argument("--p", type=float, required=True)
    c.add_argument("--lambda", dest="lam", type=float, default=0.5)
    c.add_argument("--vol0", type=float, required=True)
    c.add_argument("--vol1", type=float, required=True)
    c.add_argument("--diam0", type=float, required=True)
    c.add_argument("--diam1", type=float, required=True)
    c.add_argument("--I0", dest="I0", type=float, required=True)
    c.add_argument("--I1", dest="I1", type=float, required=True)
    return ap


def _run_and_emit(scenarios, args) -> int:
    jobs = default_jobs() if args.jobs is None else args.jobs
    reports = run_suite(scenarios, jobs)
    paths = emit(reports, args.formats, args.out)
    failed = 0
    for r in reports:
        if r.passed:
            state = "PASS"
        else:
            failed += 1
            state = "ERROR" if r.data["status"] == "error" else "FAIL"
        line = f"{state:5s} {r.name} ({r.kind})"
        if r.data["status"] == "error":
            line += f": {r.data['error']}"
        else:
            bad = [k for k, c in r.checks.items() if c["applicable"] and not c["holds"]]
            if bad:
                line += f": {', '.join(bad)}"
        print(line)
    print(f"{len(reports) - failed}/{len(reports)} scenarios passed; wrote {len(paths)} files to {args.out}")
    return 0 if failed == 0 else 1


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "constants":
            bundle = means.bbl_constants(args.n, args.p, args.lam, args.vol0, args.vol1,
                                         args.diam0, args.diam1, args.I0, args.I1)
            print(json.dumps(sanitize(bundle.to_dict()), indent=2, sort_keys=True))
            return 0
        if args.cmd == "verify":
            scenarios = parse_scenario(args.scenario)
        elif args.cmd == "random-suite":
            scenarios = random_scenarios(
                args.kind, args.count, args.seed, p=args.p, lam=args.lam, mesh_h=args.mesh_h,
                quad_tol=args.quad_tol, angle_count=args.angle_count, vertices=args.vertices,
                elongation=args.elongation, beta_exp=args.beta_exp,
            )
        else:
            scenarios = default_suite()
        if getattr(args, "emit_scenarios", None):
            Path(args.emit_scenarios).write_text(dump_scenarios(scenarios), encoding="utf-8")
        if getattr(args, "no_run", False):
            return 0
        if args.jobs is not None and args.jobs < 1:
            raise ValueError("--jobs must be at least 1")
        return _run_and_emit(scenarios, args)
    except (ScenarioError, ValueError, OSError) as exc:
        print(f"bbl-lab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
