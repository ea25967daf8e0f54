"""Regression test selection over method-level coverage.

A test is re-run (fully, with every reachable configuration) when any
method it covered in any configuration changed. Everything else is carried
forward from the workspace.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

from .dsl import ChangeSet, Program, TestCase, Verdict
from .explorer import EMPTY_PREFIX, ExplorationResult, RunRecord, splat
from .model import Assignment, FeatureModel
from .satcache import CacheStats


@dataclass
class CoverageMap:
    by_test: dict[str, set[str]] = field(default_factory=dict)

    def to_dict(self) -> dict[str, list[str]]:
        return {t: sorted(ms) for t, ms in self.by_test.items()}


def build_coverage(results: Mapping[str, object]) -> CoverageMap:
    """Methods on any run's stack, per test.

    Accepts exploration results or persisted test caches (anything with a
    ``runs`` list of RunRecords).
    """
    return CoverageMap({t: {m for r in res.runs for m in r.methods()} for t, res in results.items()})


@dataclass
class Selection:
    selected: list[str]
    total: int

    @property
    def ratio(self) -> float:
        return len(self.selected) / self.total if self.total else 0.0

    @property
    def percent(self) -> float:
        return 100.0 * self.ratio


def select_tests(coverage: CoverageMap, changes: ChangeSet, tests: Iterable[str] | None = None) -> Selection:
    """Tests whose covered methods intersect ``changes``, in suite order.

    Tests without recorded coverage are always selected; an empty change
    set selects nothing.
    """
    names = list(tests) if tests is not None else list(coverage.by_test)
    if not changes:
        return Selection([], len(names))
    chosen = []
    for t in names:
        covered = coverage.by_test.get(t)
        if covered is None or covered & changes.changed:
            chosen.append(t)
    return Selection(chosen, len(names))


def verdict_changes(old: Iterable[RunRecord], new: Iterable[RunRecord]) -> list[dict]:
    """Paths whose verdict differs between two explorations of a test."""
    before: dict[Assignment, Verdict] = {r.partial(): r.verdict for r in old}
    out = []
    for r in new:
        prev = before.get(r.partial())
        if prev is not None and prev != r.verdict:
            out.append({"partial": r.partial().to_dict(), "old": prev.to_dict(), "new": r.verdict.to_dict()})
    return out


def classify(selected: int, total: int) -> str:
    if selected == 0:
        return "No Re-Execution"
    if selected == total:
        return "Complete Re-Execution"
    return "Partial Re-Execution"


def run_rts(
    fm: FeatureModel,
    new_program: Program,
    suite: Sequence[TestCase],
    workspace,
    changes: ChangeSet,
    bound: int | None = None,
) -> dict:
    """One RTS evolution cycle; updates the workspace and returns a report."""
    from .workspace import TestCache

    workspace.check_model(fm)
    coverage = CoverageMap(workspace.coverage())
    selection = select_tests(coverage, changes, [t.name for t in suite])
    trie = workspace.trie
    stats = CacheStats()
    per_test: dict[str, dict] = {}
    fresh: dict[str, ExplorationResult] = {}
    for t in suite:
        old = workspace.load_runs(t.name)
        if t.name in selection.selected:
            res = splat(fm, new_program, t, EMPTY_PREFIX, bound, trie)
            stats.merge(res.stats)
            fresh[t.name] = res
            workspace.save_runs(TestCache.from_result(res))
            per_test[t.name] = {
                "selected": True,
                "runs": len(res.runs),
                "paths": res.paths,
                "covered": None if res.covered is None else len(res.covered),
                "bounded": res.bounded,
                "failures": [r.partial().to_dict() for r in res.failures()],
                "regressions": _regressions(t, res.runs),
                "verdict_changes": verdict_changes(old.runs if old else [], res.runs),
            }
        else:
            per_test[t.name] = {
                "selected": False,
                "runs": 0,
                "carried_runs": len(old.runs) if old else 0,
                "bounded": bool(old and old.bounded),
                "failures": [],
                "regressions": [],
                "verdict_changes": [],
            }
    cov = dict(coverage.by_test)
    cov.update(build_coverage(fresh).by_test)
    workspace.save_coverage(cov)
    workspace.save_digests(new_program)
    workspace.save_trie()
    executed = [per_test[n]["runs"] for n in selection.selected]
    return {
        "mode": "rts",
        "changes": sorted(changes.changed),
        "tests_total": selection.total,
        "tests_selected": selection.selected,
        "tests_exec_pct": round(selection.percent, 2),
        "confs_per_test": round(sum(executed) / len(executed), 2) if executed else 0.0,
        "runs_executed": sum(executed),
        "classification": classify(len(selection.selected), selection.total),
        "per_test": per_test,
        "stats": stats.to_dict(),
    }


def _regressions(test: TestCase, runs: Iterable[RunRecord]) -> list[dict]:
    """Runs whose outcome disagrees with the test's expected outcome."""
    return [
        {"partial": r.partial().to_dict(), "verdict": r.verdict.to_dict()}
        for r in runs
        if r.verdict.outcome != test.expected
    ]
