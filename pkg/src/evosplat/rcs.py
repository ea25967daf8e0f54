"""Regression configuration selection.

Given the recorded runs of a test and the set of changed methods, only the
decision subtrees rooted just before the first entry into a changed method
are re-explored. Runs that never entered a changed method are kept as they
are.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

from .dsl import ChangeSet, Program, TestCase
from .errors import BoundedExplorationError
from .explorer import (
    EMPTY_PREFIX,
    Entry,
    ExplorationResult,
    PrunedPath,
    RunRecord,
    SubtreePrefix,
    splat,
)
from .model import Assignment, FeatureModel
from .rts import build_coverage, verdict_changes
from .satcache import CacheStats, SatTrie

log = logging.getLogger(__name__)

NO_REEXECUTION = "No Re-Execution"
PARTIAL_REEXECUTION = "Partial Re-Execution"
COMPLETE_REEXECUTION = "Complete Re-Execution"


def find_hit(stack: Sequence[Entry], changes: ChangeSet | Iterable[str]) -> int | None:
    """Index of the first method entry whose method changed, or None."""
    changed = changes.changed if isinstance(changes, ChangeSet) else frozenset(changes)
    for i, e in enumerate(stack):
        if e.kind == "method" and e.name in changed:
            return i
    return None


def affected_prefixes(records: Iterable[RunRecord], changes: ChangeSet) -> list[SubtreePrefix]:
    """Distinct subtree roots that must be re-explored, first occurrence first."""
    out: list[SubtreePrefix] = []
    seen: set[tuple] = set()
    for r in records:
        hit = find_hit(r.stack, changes)
        if hit is None:
            continue
        stack = r.stack[:hit]
        values = Assignment((e.name, r.state[e.name]) for e in stack if e.kind == "feature")
        key = (stack, values)
        if key not in seen:
            seen.add(key)
            out.append(SubtreePrefix(stack, values))
    return out


@dataclass
class EvolutionResult:
    test: str
    classification: str
    runs: list[RunRecord]
    pruned: list[PrunedPath]
    prefixes: list[SubtreePrefix] = field(default_factory=list)
    runs_reexecuted: int = 0
    runs_retained: int = 0
    runs_replaced: int = 0
    paths_reexecuted: int = 0
    paths_retained: int = 0
    prior_runs: int = 0
    prior_paths: int = 0
    escalated: bool = False
    bounded: bool = False
    stats: CacheStats = field(default_factory=CacheStats)
    verdict_changes: list[dict] = field(default_factory=list)

    # aliases matching the configuration vocabulary used in reports
    @property
    def configurations_reexecuted(self) -> int:
        return self.runs_reexecuted

    @property
    def configurations_retained(self) -> int:
        return self.runs_retained

    def verdicts(self):
        return {(r.partial(), r.verdict) for r in self.runs}

    def to_dict(self) -> dict:
        return {
            "test": self.test,
            "classification": self.classification,
            "prefixes": [p.to_dict() for p in self.prefixes],
            "runs_reexecuted": self.runs_reexecuted,
            "runs_retained": self.runs_retained,
            "runs_replaced": self.runs_replaced,
            "paths_reexecuted": self.paths_reexecuted,
            "paths_retained": self.paths_retained,
            "prior_runs": self.prior_runs,
            "prior_paths": self.prior_paths,
            "runs_total": len(self.runs),
            "escalated": self.escalated,
            "bounded": self.bounded,
            "stats": self.stats.to_dict(),
            "verdict_changes": self.verdict_changes,
        }


def evo_splat(
    fm: FeatureModel,
    new_program: Program,
    test: TestCase,
    workspace,
    changes: ChangeSet,
    bound: int | None = None,
    trie: SatTrie | None = None,
) -> EvolutionResult:
    """Re-explore the subtrees of ``test`` affected by ``changes``.

    Merges the fresh subtree runs with the retained ones and stores the
    merged cache back into the workspace. Without a prior cache this is a
    full exploration; a bounded prior exploration is refused. If a subtree
    run departs from its recorded prefix the test is re-explored in full.
    """
    from .workspace import TestCache

    workspace.check_model(fm)
    if trie is None:
        trie = workspace.trie
    cache = workspace.load_runs(test.name)
    if cache is None or not cache.runs:
        res = splat(fm, new_program, test, EMPTY_PREFIX, bound, trie)
        workspace.save_runs(TestCache.from_result(res))
        return EvolutionResult(
            test.name, COMPLETE_REEXECUTION, res.runs, res.pruned, [EMPTY_PREFIX],
            runs_reexecuted=len(res.runs), paths_reexecuted=res.paths,
            bounded=res.bounded, stats=res.stats,
        )
    if cache.bounded:
        raise BoundedExplorationError(
            f"test {test.name!r}: prior exploration stopped at the bound; RCS needs the whole tree")

    prefixes = affected_prefixes(cache.runs, changes)
    stats = CacheStats()
    fresh: list[ExplorationResult] = []
    escalated = bounded = False
    for p in prefixes:
        res = splat(fm, new_program, test, p, bound, trie)
        stats.merge(res.stats)
        fresh.append(res)
        bounded |= res.bounded
        if res.drift:
            escalated = True
            break

    if escalated:
        log.warning("test %s: structural drift under a recorded prefix; re-exploring from scratch", test.name)
        res = splat(fm, new_program, test, EMPTY_PREFIX, bound, trie)
        stats.merge(res.stats)
        result = EvolutionResult(
            test.name, COMPLETE_REEXECUTION, res.runs, res.pruned, prefixes,
            runs_reexecuted=len(res.runs), runs_replaced=len(cache.runs),
            paths_reexecuted=res.paths, prior_runs=len(cache.runs), prior_paths=cache.paths,
            escalated=True, bounded=res.bounded, stats=stats,
            verdict_changes=verdict_changes(cache.runs, res.runs),
        )
    else:
        kept_runs = [r for r in cache.runs if not any(p.covers(r.stack, r.state) for p in prefixes)]
        kept_pruned = [q for q in cache.pruned if not any(p.covers(q.stack, q.values) for p in prefixes)]
        new_runs = [r for res in fresh for r in res.runs]
        new_pruned = [q for res in fresh for q in res.pruned]
        if not new_runs:
            cls = NO_REEXECUTION
        elif not kept_runs and not kept_pruned:
            cls = COMPLETE_REEXECUTION
        else:
            cls = PARTIAL_REEXECUTION
        result = EvolutionResult(
            test.name, cls, kept_runs + new_runs, kept_pruned + new_pruned, prefixes,
            runs_reexecuted=len(new_runs), runs_retained=len(kept_runs),
            runs_replaced=len(cache.runs) - len(kept_runs),
            paths_reexecuted=len(new_runs) + len(new_pruned),
            paths_retained=len(kept_runs) + len(kept_pruned),
            prior_runs=len(cache.runs), prior_paths=cache.paths,
            bounded=bounded, stats=stats,
            verdict_changes=verdict_changes(cache.runs, new_runs),
        )
    if result.runs_reexecuted or result.escalated:
        workspace.save_runs(TestCache(test.name, result.runs, result.pruned, result.bounded))
    return result


def evolve_suite(
    fm: FeatureModel,
    new_program: Program,
    suite: Sequence[TestCase],
    workspace,
    changes: ChangeSet,
    bound: int | None = None,
) -> dict:
    """Run RCS over every test, refresh coverage and digests, return a report."""
    per_test: dict[str, dict] = {}
    refused: list[str] = []
    results: dict[str, EvolutionResult] = {}
    stats = CacheStats()
    for t in suite:
        try:
            res = evo_splat(fm, new_program, t, workspace, changes, bound)
        except BoundedExplorationError as exc:
            log.warning("%s", exc)
            refused.append(t.name)
            per_test[t.name] = {"refused": True, "reason": str(exc)}
            continue
        results[t.name] = res
        stats.merge(res.stats)
        d = res.to_dict()
        d["regressions"] = [
            {"partial": r.partial().to_dict(), "verdict": r.verdict.to_dict()}
            for r in res.runs if r.verdict.outcome != t.expected
        ]
        per_test[t.name] = d
    cov = workspace.coverage()
    cov.update(build_coverage(results).by_test)
    workspace.save_coverage(cov)
    workspace.save_digests(new_program)
    workspace.save_trie()

    reexec = sum(r.runs_reexecuted for r in results.values())
    retained = sum(r.runs_retained for r in results.values())
    touched = sum(1 for r in results.values() if r.runs_reexecuted)
    return {
        "mode": "rcs",
        "changes": sorted(changes.changed),
        "tests_total": len(suite),
        "tests_refused": refused,
        "classification": _suite_classification(results.values()),
        "tests_exec_pct": round(100.0 * touched / len(suite), 2) if suite else 0.0,
        "runs_reexecuted": reexec,
        "runs_retained": retained,
        "paths_reexecuted": sum(r.paths_reexecuted for r in results.values()),
        "paths_retained": sum(r.paths_retained for r in results.values()),
        "per_test": per_test,
        "stats": stats.to_dict(),
    }


def _suite_classification(results: Iterable[EvolutionResult]) -> str:
    results = list(results)
    kinds = {r.classification for r in results}
    if not results or kinds == {NO_REEXECUTION}:
        return NO_REEXECUTION
    if kinds == {COMPLETE_REEXECUTION}:
        return COMPLETE_REEXECUTION
    return PARTIAL_REEXECUTION


# -- configuration reduction -----------------------------------------------------


@dataclass
class ReductionReport:
    per_method: dict[str, float]
    average: float

    def to_dict(self) -> dict:
        return {"per_method": {m: round(v, 6) for m, v in sorted(self.per_method.items())},
                "average": round(self.average, 6)}


def reduction_report(records: Sequence[RunRecord], program: Program) -> ReductionReport:
    """Fraction of runs that a change to each method would let RCS skip.

    ``per_method`` covers every method of the program (1.0 for methods no
    run enters). ``average`` is taken over the methods that appear in at
    least one run, since only those changes can cost anything.
    """
    n = len(records)
    per_method: dict[str, float] = {}
    touched: list[float] = []
    for m in program.methods:
        lacking = sum(1 for r in records if m not in r.methods())
        frac = lacking / n if n else 1.0
        per_method[m] = frac
        if lacking < n:
            touched.append(frac)
    average = sum(touched) / len(touched) if touched else 0.0
    return ReductionReport(per_method, average)


BUCKETS = 10


def bucket_label(i: int) -> str:
    lo, hi = i / BUCKETS, (i + 1) / BUCKETS
    return f"[{lo:.1f}-{hi:.1f}[" if i < BUCKETS - 1 else f"[{lo:.1f}-{hi:.1f}]"


def reduction_histogram(averages: Iterable[float]) -> dict[str, int]:
    """Count tests per reduction interval [0,0.1[, [0.1,0.2[, ..., [0.9,1.0]."""
    counts = [0] * BUCKETS
    for a in averages:
        if not 0.0 <= a <= 1.0:
            raise ValueError(f"reduction {a} outside [0, 1]")
        # guard against 0.3 landing in [0.2,0.3[ through float error
        idx = min(int(round(a * BUCKETS, 9)), BUCKETS - 1)
        counts[idx] += 1
    return {bucket_label(i): c for i, c in enumerate(counts)}


def suite_reduction(caches: Mapping[str, Sequence[RunRecord]], program: Program) -> dict:
    reports = {t: reduction_report(runs, program) for t, runs in caches.items()}
    return {
        "per_test": {t: r.to_dict() for t, r in reports.items()},
        "histogram": reduction_histogram(r.average for r in reports.values()),
    }


__all__ = [
    "COMPLETE_REEXECUTION",
    "NO_REEXECUTION",
    "PARTIAL_REEXECUTION",
    "EvolutionResult",
    "ReductionReport",
    "affected_prefixes",
    "evo_splat",
    "evolve_suite",
    "find_hit",
    "reduction_histogram",
    "reduction_report",
    "suite_reduction",
]
