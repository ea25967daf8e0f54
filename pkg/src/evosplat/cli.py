"""Command-line entry point.

Exit codes: 0 when every executed verdict matches the test's expectation,
1 when some verdict disagrees, 2 on usage or tool errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .dsl import ChangeSet, diff_digests, diff_methods, load_suite, method_digest
from .errors import EvoSplatError
from .explorer import DEFAULT_BOUND, decision_tree, explore_suite
from .model import load_model
from .rcs import evolve_suite, suite_reduction
from .rts import CoverageMap, run_rts
from .sampling import CoveringArray, evo_sample_run, generate_twise, verify_covering
from .workspace import Workspace, dump_json

EXIT_OK, EXIT_REGRESSION, EXIT_ERROR = 0, 1, 2

log = logging.getLogger("evosplat")


class UsageError(EvoSplatError):
    pass


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", help="feature model file")
    common.add_argument("--workspace", default=".evosplat", help="workspace directory (default: .evosplat)")
    common.add_argument("--bound", type=_positive, default=DEFAULT_BOUND,
                        help=f"max test executions per exploration (default: {DEFAULT_BOUND})")
    common.add_argument("--format", choices=("json", "csv", "dot", "text"), default="text")
    common.add_argument("--jobs", type=_positive, default=1, help="concurrent per-test explorations")
    common.add_argument("--output", help="write the report here instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="evosplat", description="Configuration-aware regression testing.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("explore", parents=[common], help="explore every test on every reachable configuration")
    e.add_argument("--suite", required=True)
    e.add_argument("--emit-tree", metavar="DIR", help="write one DOT decision tree per test into DIR")

    for name, helptext in (("evolve", "re-explore only change-impacted decision subtrees (RCS)"),
                           ("rts", "re-run only change-impacted tests, in full (RTS)")):
        sp = sub.add_parser(name, parents=[common], help=helptext)
        sp.add_argument("--new", "--suite", dest="new", required=True, help="suite of the new version")
        sp.add_argument("--old", help="suite of the previous version (default: stored method digests)")

    d = sub.add_parser("diff", parents=[common], help="list methods whose bodies changed")
    d.add_argument("--new", "--suite", dest="new", required=True)
    d.add_argument("--old", help="previous suite (default: stored method digests)")

    s = sub.add_parser("sample", help="t-wise covering arrays and fixed-sample baselines")
    ssub = s.add_subparsers(dest="action", required=True)
    g = ssub.add_parser("generate", parents=[common], help="generate a t-wise covering array as CSV")
    g.add_argument("--strength", "-t", type=_positive, default=2)
    g.add_argument("--seed", type=int, default=0)
    r = ssub.add_parser("run", parents=[common], help="run impacted tests against every array row")
    r.add_argument("--array", required=True, help="CSV covering array")
    r.add_argument("--new", "--suite", dest="new", required=True)
    r.add_argument("--old")

    rp = sub.add_parser("report", parents=[common], help="show a stored session report")
    rp.add_argument("--session", help="session id (default: latest)")
    rp.add_argument("--suite", help="also summarize configuration reduction for this suite")
    return p


def _require(args, name: str) -> str:
    value = getattr(args, name, None)
    if not value:
        raise UsageError(f"--{name} is required for '{args.command}'")
    return value


def _load_model(args):
    path = _require(args, "model")
    if not Path(path).is_file():
        raise UsageError(f"model file not found: {path}")
    return load_model(path)


def _load_suite(path: str, fm):
    if not Path(path).is_file():
        raise UsageError(f"suite file not found: {path}")
    return load_suite(path, fm)


def _changes(args, ws: Workspace, fm, new_program) -> ChangeSet:
    if getattr(args, "old", None):
        old_program, _ = _load_suite(args.old, fm)
        return diff_methods(old_program, new_program)
    stored = ws.digests()
    if stored is None:
        raise UsageError("no --old suite given and the workspace has no stored digests")
    return diff_digests(stored, method_digest(new_program))


# -- rendering -------------------------------------------------------------------


def _rows_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _table_rows(report: dict) -> list[dict]:
    out = []
    for name, d in report.get("per_test", {}).items():
        row = {"test": name}
        for k, v in d.items():
            if isinstance(v, (int, float, str, bool)) or v is None:
                row[k] = v
        out.append(row)
    return out


def _text(report: dict, elapsed: float | None) -> str:
    lines = [f"mode: {report.get('mode')}"]
    for key in ("changes", "classification", "tests_total", "tests_selected", "tests_exec_pct",
                "confs_per_test", "runs_executed", "runs_reexecuted", "runs_retained",
                "paths_reexecuted", "paths_retained", "rows_per_test", "executions", "tests_refused"):
        if key in report:
            lines.append(f"{key}: {report[key]}")
    if "stats" in report:
        st = report["stats"]
        lines.append(f"solver calls: {st['solver_calls']}  cache hits: {st['hits']}  misses: {st['misses']}")
    rows = _table_rows(report)
    if rows:
        cols = list(dict.fromkeys(k for r in rows for k in r))
        lines.append("")
        lines.append("  ".join(cols))
        for r in rows:
            lines.append("  ".join(str(r.get(c, "")) for c in cols))
    if "histogram" in report:
        lines.append("")
        lines.append("reduction histogram:")
        for k, v in report["histogram"].items():
            lines.append(f"  {k}: {v}")
    if elapsed is not None:
        lines.append(f"elapsed: {elapsed:.3f}s")
    return "\n".join(lines) + "\n"


def _emit(args, report: dict, elapsed: float | None = None, dot: str | None = None) -> None:
    fmt = args.format
    if fmt == "json":
        text = dump_json(report)
    elif fmt == "csv":
        text = _rows_csv(_table_rows(report))
    elif fmt == "dot":
        if dot is None:
            raise UsageError(f"--format dot is not available for '{args.command}'")
        text = dot
    else:
        text = _text(report, elapsed)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _has_regressions(report: dict) -> bool:
    return any(d.get("regressions") or d.get("failing_rows") for d in report.get("per_test", {}).values())


# -- commands ----------------------------------------------------------------------


def cmd_explore(args) -> int:
    fm = _load_model(args)
    program, tests = _load_suite(args.suite, fm)
    ws = Workspace(args.workspace, fm)
    t0 = time.perf_counter()
    results = explore_suite(fm, program, tests, args.bound, ws, jobs=args.jobs)
    elapsed = time.perf_counter() - t0
    per_test = {}
    dots = []
    for t in tests:
        res = results[t.name]
        tree = decision_tree(res)
        dots.append(tree.to_dot().replace("digraph decision_tree", f'digraph "{t.name}"', 1))
        per_test[t.name] = {
            "runs": len(res.runs),
            "paths": res.paths,
            "pruned_unsat": res.pruned_unsat,
            "covered": len(res.covered) if res.covered is not None else None,
            "bounded": res.bounded,
            "solver_calls": res.stats.solver_calls,
            "hits": res.stats.hits,
            "misses": res.stats.misses,
            "failures": [r.partial().to_dict() for r in res.failures()],
            "regressions": [
                {"partial": r.partial().to_dict(), "verdict": r.verdict.to_dict()}
                for r in res.runs if r.verdict.outcome != t.expected
            ],
            "tree": tree.to_dict(),
        }
    if args.emit_tree:
        out = Path(args.emit_tree)
        out.mkdir(parents=True, exist_ok=True)
        for t, dot in zip(tests, dots):
            (out / f"{t.name}.dot").write_text(dot, encoding="utf-8")
    runs = [d["runs"] for d in per_test.values()]
    stats = {k: sum(results[t].stats.to_dict()[k] for t in results)
             for k in ("hits", "misses", "lookups", "solver_calls", "sat", "unsat")}
    stats["hit_ratio"] = round(stats["hits"] / stats["lookups"], 6) if stats["lookups"] else 0.0
    report = {
        "mode": "explore",
        "tests_total": len(tests),
        "runs_executed": sum(runs),
        "confs_per_test": round(sum(runs) / len(runs), 2) if runs else 0.0,
        "tests_bounded": [t for t, d in per_test.items() if d["bounded"]],
        "per_test": per_test,
        "stats": stats,
    }
    ws.write_report(ws.next_session("explore"), report)
    _emit(args, report, elapsed, "".join(dots))
    return EXIT_REGRESSION if _has_regressions(report) else EXIT_OK


def _evolution(args, runner) -> int:
    fm = _load_model(args)
    ws = Workspace(args.workspace, fm)
    if not ws.exists():
        raise UsageError(f"workspace {args.workspace} is not initialized; run 'explore' first")
    program, tests = _load_suite(args.new, fm)
    changes = _changes(args, ws, fm, program)
    t0 = time.perf_counter()
    report = runner(fm, program, tests, ws, changes, args.bound)
    elapsed = time.perf_counter() - t0
    if changes or not ws.reports():
        ws.write_report(ws.next_session(args.command), report)
    _emit(args, report, elapsed)
    return EXIT_REGRESSION if _has_regressions(report) else EXIT_OK


def cmd_evolve(args) -> int:
    return _evolution(args, evolve_suite)


def cmd_rts(args) -> int:
    return _evolution(args, run_rts)


def cmd_diff(args) -> int:
    fm = _load_model(args)
    program, _ = _load_suite(args.new, fm)
    changes = _changes(args, Workspace(args.workspace, fm), fm, program)
    report = {"mode": "diff", "changes": sorted(changes.changed)}
    if args.format == "text":
        text = "".join(f"{m}\n" for m in report["changes"])
        if args.output:
            Path(args.output).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
    else:
        _emit(args, report)
    return EXIT_OK


def cmd_sample(args) -> int:
    fm = _load_model(args)
    if args.action == "generate":
        if args.strength > len(fm):
            raise UsageError(f"--strength {args.strength} exceeds the {len(fm)} model variables")
        array = generate_twise(fm, args.strength, args.seed)
        if args.format in ("csv", "text"):
            text = array.to_csv()
        else:
            text = dump_json({"strength": array.strength, "names": list(array.names),
                              "rows": [[int(r[n]) for n in array.names] for r in array.rows],
                              "provenance": array.provenance,
                              "verification": verify_covering(fm, array).to_dict()})
        if args.output:
            Path(args.output).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return EXIT_OK
    ws = Workspace(args.workspace, fm)
    program, tests = _load_suite(args.new, fm)
    if not Path(args.array).is_file():
        raise UsageError(f"array file not found: {args.array}")
    array = CoveringArray.from_csv(Path(args.array).read_text(encoding="utf-8"))
    changes = _changes(args, ws, fm, program)
    report = evo_sample_run(array, CoverageMap(ws.coverage()), changes, tests, program, fm)
    _emit(args, report)
    return EXIT_REGRESSION if _has_regressions(report) else EXIT_OK


def cmd_report(args) -> int:
    ws = Workspace(args.workspace)
    reports = ws.reports()
    if args.session:
        path = ws.reports_dir / f"{args.session}.json"
        if not path.is_file():
            raise UsageError(f"no session {args.session!r} in {args.workspace}")
    elif reports:
        path = reports[-1]
    else:
        raise UsageError(f"no reports in {args.workspace}")
    report = json.loads(path.read_text(encoding="utf-8"))
    report["session"] = path.stem
    if args.suite:
        fm = _load_model(args)
        program, tests = _load_suite(args.suite, fm)
        caches = {t.name: c.runs for t in tests if (c := ws.load_runs(t.name)) is not None}
        red = suite_reduction(caches, program)
        report["reduction"] = red["per_test"]
        report["histogram"] = red["histogram"]
    _emit(args, report)
    return EXIT_OK


COMMANDS = {"explore": cmd_explore, "diff": cmd_diff, "evolve": cmd_evolve, "rts": cmd_rts,
            "sample": cmd_sample, "report": cmd_report}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (EvoSplatError, OSError) as exc:
        print(f"evosplat: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
