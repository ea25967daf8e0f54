"""Stateless exploration of the configurations a test can reach.

The test is re-executed from scratch once per explored path. Each execution
records the order in which optional features are first read (and methods
first entered) on a stack; backtracking over that stack picks the next
satisfiable partial assignment, false before true. Optional features start
false and are flipped to true at read time when false would make the
partial assignment unsatisfiable, so illegal configurations never run.

Exploration can be confined to a subtree by passing a prefix: the stack
entries and feature values of a previously recorded path.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

from .dsl import Program, TestCase, Verdict, execute
from .errors import ExplorationError
from .model import DEFAULT_ENUMERATION_CAP, Assignment, FeatureModel
from .satcache import CacheStats, SatTrie, cached_is_sat

log = logging.getLogger(__name__)

DEFAULT_BOUND = 100


class Entry(NamedTuple):
    kind: str  # "method" or "feature"
    name: str

    def __str__(self) -> str:
        return f"{self.kind[0]}:{self.name}"

    @classmethod
    def method(cls, name: str) -> Entry:
        return cls("method", name)

    @classmethod
    def feature(cls, name: str) -> Entry:
        return cls("feature", name)


Stack = tuple[Entry, ...]


def _entries_to_json(stack: Iterable[Entry]) -> list[list[str]]:
    return [[e.kind, e.name] for e in stack]


def _entries_from_json(data: Iterable[Sequence[str]]) -> Stack:
    return tuple(Entry(kind, name) for kind, name in data)


def stack_features(stack: Iterable[Entry]) -> list[str]:
    return [e.name for e in stack if e.kind == "feature"]


def stack_methods(stack: Iterable[Entry]) -> list[str]:
    return [e.name for e in stack if e.kind == "method"]


@dataclass(frozen=True)
class SubtreePrefix:
    """Stack entries and feature values that root a decision subtree."""

    stack: Stack = ()
    values: Assignment = field(default_factory=Assignment)

    def __post_init__(self) -> None:
        object.__setattr__(self, "stack", tuple(Entry(*e) for e in self.stack))
        object.__setattr__(self, "values", Assignment(self.values))
        feats = stack_features(self.stack)
        if set(feats) != set(self.values) or len(feats) != len(set(feats)):
            raise ValueError("prefix values must bind exactly the prefix's feature entries")

    def __len__(self) -> int:
        return len(self.stack)

    def covers(self, stack: Sequence[Entry], values: Mapping[str, bool]) -> bool:
        """True if a recorded path lies inside this subtree."""
        if tuple(stack[: len(self.stack)]) != self.stack:
            return False
        return all(values.get(n) == v for n, v in self.values.items())

    def to_dict(self) -> dict:
        return {"stack": _entries_to_json(self.stack), "values": self.values.to_dict()}


EMPTY_PREFIX = SubtreePrefix()


@dataclass(frozen=True)
class RunRecord:
    """One test execution: final stack, full feature state, and verdict."""

    stack: Stack
    state: Assignment
    verdict: Verdict

    def partial(self) -> Assignment:
        """The state restricted to the features on the stack, in read order."""
        return Assignment((f, self.state[f]) for f in stack_features(self.stack))

    def methods(self) -> list[str]:
        return stack_methods(self.stack)

    def path(self) -> tuple[tuple[str, bool], ...]:
        return tuple((f, self.state[f]) for f in stack_features(self.stack))

    def to_dict(self) -> dict:
        return {
            "stack": _entries_to_json(self.stack),
            "state": self.state.to_dict(),
            "verdict": self.verdict.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> RunRecord:
        return cls(_entries_from_json(d["stack"]), Assignment(d["state"]), Verdict.from_dict(d["verdict"]))


@dataclass(frozen=True)
class PrunedPath:
    """A partial assignment abandoned because it is unsatisfiable."""

    stack: Stack
    values: Assignment

    def path(self) -> tuple[tuple[str, bool], ...]:
        return tuple((f, self.values[f]) for f in stack_features(self.stack))

    def to_dict(self) -> dict:
        return {"stack": _entries_to_json(self.stack), "values": self.values.to_dict()}

    @classmethod
    def from_dict(cls, d: Mapping) -> PrunedPath:
        return cls(_entries_from_json(d["stack"]), Assignment(d["values"]))


@dataclass
class ExplorationResult:
    test: str
    runs: list[RunRecord]
    pruned: list[PrunedPath]
    stats: CacheStats
    bounded: bool = False
    prefix: SubtreePrefix = EMPTY_PREFIX
    covered: set[Assignment] | None = None
    drift: bool = False

    @property
    def pruned_unsat(self) -> int:
        return len(self.pruned)

    @property
    def paths(self) -> int:
        """Leaves of the decision tree: executed runs plus pruned branches."""
        return len(self.runs) + len(self.pruned)

    def verdicts(self) -> set[tuple[Assignment, Verdict]]:
        return {(r.partial(), r.verdict) for r in self.runs}

    def failures(self) -> list[RunRecord]:
        return [r for r in self.runs if not r.verdict.passed]

    def to_dict(self, fm: FeatureModel | None = None) -> dict:
        runs = []
        for r in self.runs:
            d = r.to_dict()
            d["partial"] = r.partial().to_dict()
            if fm is not None and self.covered is not None:
                d["covered"] = fm.count_valid(r.partial())
            runs.append(d)
        return {
            "test": self.test,
            "prefix": self.prefix.to_dict(),
            "runs": runs,
            "pruned": [p.to_dict() for p in self.pruned],
            "runs_executed": len(self.runs),
            "paths": self.paths,
            "pruned_unsat": self.pruned_unsat,
            "covered_count": None if self.covered is None else len(self.covered),
            "stats": self.stats.to_dict(),
            "bounded": self.bounded,
            "drift": self.drift,
        }


class _SplatMonitor:
    """Execution callbacks: first reads push onto the stack."""

    def __init__(self, explorer: _Exploration, stack: list[Entry]):
        self.ex = explorer
        self.stack = stack
        self.on_stack = set(stack)
        self.observed: list[Entry] = []
        self._seen: set[Entry] = set()

    def _observe(self, e: Entry) -> None:
        if e not in self._seen:
            self._seen.add(e)
            self.observed.append(e)

    def read_feature(self, name: str) -> bool:
        fm, state = self.ex.fm, self.ex.state
        if fm.is_mandatory(name):
            return fm.get_mandatory_value(name)
        e = Entry.feature(name)
        self._observe(e)
        if e not in self.on_stack:
            self.stack.append(e)
            self.on_stack.add(e)
            pa = _partial(state, self.stack)
            if not self.ex.is_sat(pa):
                if state[name]:
                    raise ExplorationError(f"partial assignment unsatisfiable with {name}=1 at read time")
                self.ex.add_pruned(self.stack, pa)
                state[name] = True
        return state[name]

    def enter_method(self, name: str) -> None:
        e = Entry.method(name)
        self._observe(e)
        if e not in self.on_stack:
            self.stack.append(e)
            self.on_stack.add(e)


def _partial(state: Mapping[str, bool], stack: Iterable[Entry]) -> Assignment:
    return Assignment((e.name, state[e.name]) for e in stack if e.kind == "feature")


class _Exploration:
    def __init__(self, fm: FeatureModel, trie: SatTrie):
        self.fm = fm
        self.trie = trie
        self.stats = CacheStats()
        self.state: dict[str, bool] = fm.initial_state()
        self.pruned: dict[tuple, PrunedPath] = {}

    def is_sat(self, pa: Assignment) -> bool:
        return cached_is_sat(self.trie, self.fm, pa, self.stats)

    def add_pruned(self, stack: Sequence[Entry], pa: Assignment) -> None:
        key = (tuple(stack), pa)
        if key not in self.pruned:
            self.pruned[key] = PrunedPath(tuple(stack), pa)


def splat(
    fm: FeatureModel,
    program: Program,
    test: TestCase,
    prefix: SubtreePrefix = EMPTY_PREFIX,
    bound: int | None = None,
    trie: SatTrie | None = None,
    *,
    coverage: bool = True,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> ExplorationResult:
    """Explore every satisfiable, reachable configuration of ``test``.

    With a nonempty ``prefix`` only the subtree rooted at that recorded
    path is explored. ``bound`` caps the number of executions; hitting it
    with work left sets ``bounded``. With ``coverage`` the covered set of
    complete valid configurations is computed per run.
    """
    if bound is not None and bound < 1:
        raise ValueError("bound must be positive")
    if trie is None:
        trie = SatTrie(fm.digest())
    ex = _Exploration(fm, trie)
    state = ex.state
    for name, value in prefix.values.items():
        if fm.is_mandatory(name):
            raise ExplorationError(f"prefix binds mandatory feature {name!r}")
        state[name] = value
    if not ex.is_sat(prefix.values):
        raise ExplorationError(f"prefix assignment {prefix.values!r} is unsatisfiable")

    base = len(prefix.stack)
    runs: list[RunRecord] = []
    bounded = drift = False
    while True:
        stack: list[Entry] = list(prefix.stack)
        mon = _SplatMonitor(ex, stack)
        verdict = execute(program, test, mon)
        if mon.observed != stack:
            drift = True
            log.warning("test %s: observed entry order %s departs from stack %s",
                        test.name, [str(e) for e in mon.observed], [str(e) for e in stack])
        runs.append(RunRecord(tuple(stack), Assignment(state), verdict))

        # backtrack to the next satisfiable partial assignment
        found = False
        while stack:
            while stack and stack[-1].kind == "method":
                stack.pop()
            if len(stack) <= base:
                break
            f = stack[-1].name
            if state[f]:
                state[f] = False
                stack.pop()
                if len(stack) <= base:
                    break
            else:
                state[f] = True
                pa = _partial(state, stack)
                if ex.is_sat(pa):
                    found = True
                    break
                ex.add_pruned(stack, pa)
        if not found:
            break
        if bound is not None and len(runs) >= bound:
            bounded = True
            break

    result = ExplorationResult(
        test=test.name,
        runs=runs,
        pruned=list(ex.pruned.values()),
        stats=ex.stats,
        bounded=bounded,
        prefix=prefix,
        drift=drift,
    )
    if coverage:
        result.covered = covered_configurations(fm, runs, cap=cap)
    return result


def covered_configurations(fm: FeatureModel, runs: Iterable[RunRecord],
                           cap: int = DEFAULT_ENUMERATION_CAP) -> set[Assignment]:
    """Union of the valid completions of each run's stack-restricted assignment."""
    covered: set[Assignment] = set()
    for r in runs:
        covered.update(fm.get_valid(r.partial(), cap=cap))
    return covered


def explore_suite(
    fm: FeatureModel,
    program: Program,
    tests: Sequence[TestCase],
    bound: int | None = DEFAULT_BOUND,
    workspace=None,
    trie: SatTrie | None = None,
    jobs: int = 1,
    coverage: bool = True,
) -> dict[str, ExplorationResult]:
    """Full exploration of each test with one trie shared across tests.

    When a workspace is given its trie is used (unless ``trie`` overrides
    it), and every test's run records, coverage and the program digests are
    stored there.
    """
    if trie is None:
        trie = workspace.trie if workspace is not None else SatTrie(fm.digest())

    def one(t: TestCase) -> ExplorationResult:
        return splat(fm, program, t, EMPTY_PREFIX, bound, trie, coverage=coverage)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = dict(zip((t.name for t in tests), pool.map(one, tests)))
    else:
        results = {t.name: one(t) for t in tests}
    if workspace is not None:
        workspace.record_exploration(fm, program, results)
    return results


# -- decision trees ------------------------------------------------------------


@dataclass
class TreeNode:
    """Inner nodes carry a feature; leaves carry 'pass', 'fail' or 'illegal'."""

    feature: str | None = None
    children: dict[bool, TreeNode] = field(default_factory=dict)
    leaf: str | None = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"leaf": self.leaf}
        return {"feature": self.feature,
                "children": {str(int(k)): v.to_dict() for k, v in sorted(self.children.items())}}


@dataclass
class DecisionTree:
    root: TreeNode

    def paths(self) -> list[tuple[tuple[tuple[str, bool], ...], str]]:
        """Root-to-leaf paths, false branches first."""
        out = []

        def walk(node: TreeNode, path: tuple) -> None:
            if node.is_leaf:
                out.append((path, node.leaf))
                return
            for value in sorted(node.children):
                walk(node.children[value], path + ((node.feature, value),))

        walk(self.root, ())
        return out

    def to_dot(self) -> str:
        lines = ["digraph decision_tree {", "  node [fontname=Helvetica];"]
        counter = iter(range(1 << 30))

        def walk(node: TreeNode) -> str:
            ident = f"n{next(counter)}"
            if node.is_leaf:
                lines.append(f'  {ident} [label="{(node.leaf or "").upper()}", shape=box];')
                return ident
            lines.append(f'  {ident} [label="{node.feature}"];')
            for value in sorted(node.children):
                child = walk(node.children[value])
                lines.append(f'  {ident} -> {child} [label="{int(value)}"];')
            return ident

        walk(self.root)
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return self.root.to_dict()


def build_tree(runs: Iterable[RunRecord], pruned: Iterable[PrunedPath] = ()) -> DecisionTree:
    root = TreeNode()
    entries = [(r.path(), r.verdict.outcome) for r in runs] + [(p.path(), "illegal") for p in pruned]
    for path, leaf in entries:
        node = root
        for name, value in path:
            if node.leaf is not None:
                raise ExplorationError(f"path {path} continues below a leaf")
            if node.feature is None:
                node.feature = name
            elif node.feature != name:
                raise ExplorationError(f"inconsistent decision order: {node.feature} vs {name}")
            node = node.children.setdefault(value, TreeNode())
        if node.feature is not None:
            raise ExplorationError(f"path {path} ends at an inner node")
        if node.leaf is not None and node.leaf != leaf:
            # a pass run and a fail run cannot share a path; illegal never collides with a run
            raise ExplorationError(f"conflicting leaves at {path}: {node.leaf} vs {leaf}")
        node.leaf = leaf
    return DecisionTree(root)


def decision_tree(result: ExplorationResult) -> DecisionTree:
    """Merge the run stacks of a finished exploration into a decision tree."""
    return build_tree(result.runs, result.pruned)
