"""Constraint-aware t-wise covering arrays and the fixed-sample baselines.

Rows are added one at a time, each chosen to cover as many still-uncovered
satisfiable t-tuples as possible. When the valid configurations of the model
can be enumerated (under the enumeration cap) every one of them is a
candidate and ties go to the earliest in canonical order. Otherwise rows are
built AETG-style: start from an uncovered tuple and fix the remaining
variables one by one, in a seed-shuffled order, keeping the row satisfiable.
"""

from __future__ import annotations

import csv
import io
import random
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from itertools import combinations, product

from .dsl import ChangeSet, Program, TestCase, run_under
from .errors import EnumerationCapExceeded, EvoSplatError, ModelChangedError
from .model import DEFAULT_ENUMERATION_CAP, Assignment, FeatureModel
from .rts import CoverageMap, classify, select_tests
from .satcache import SatTrie, cached_is_sat

Tuple_ = tuple[tuple[int, ...], tuple[bool, ...]]


@dataclass
class CoveringArray:
    strength: int
    names: tuple[str, ...]
    rows: list[Assignment]
    provenance: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.names)
        for row in self.rows:
            w.writerow(int(row[n]) for n in self.names)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, strength: int = 0) -> CoveringArray:
        reader = csv.reader(io.StringIO(text))
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise EvoSplatError("empty covering-array file") from None
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            if not raw:
                continue
            if len(raw) != len(header) or any(v not in ("0", "1") for v in raw):
                raise EvoSplatError(f"covering-array line {lineno}: expected {len(header)} values of 0/1")
            rows.append(Assignment(zip(header, (v == "1" for v in raw))))
        return cls(strength, header, rows)


def satisfiable_tuples(fm: FeatureModel, t: int, trie: SatTrie | None = None) -> list[Tuple_]:
    """Every (variable positions, values) t-tuple that some valid row can show."""
    names = fm.names
    out = []
    for combo in combinations(range(len(names)), t):
        for values in product((False, True), repeat=t):
            a = Assignment((names[i], v) for i, v in zip(combo, values))
            ok = cached_is_sat(trie, fm, a) if trie is not None else fm.is_satisfiable(a)
            if ok:
                out.append((combo, values))
    return out


def _row_tuples(row: Sequence[bool], combos: Sequence[tuple[int, ...]]) -> set[Tuple_]:
    return {(c, tuple(row[i] for i in c)) for c in combos}


def generate_twise(
    fm: FeatureModel,
    t: int,
    seed: int = 0,
    trie: SatTrie | None = None,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> CoveringArray:
    """Greedy t-wise covering array over the valid configurations of ``fm``.

    Deterministic for a given (model, t, seed).
    """
    n = len(fm)
    if not 1 <= t <= n:
        raise ValueError(f"strength t={t} must lie in [1, {n}]")
    if not fm.is_satisfiable():
        raise EvoSplatError("feature model has no valid configuration")
    if trie is None:
        trie = SatTrie(fm.digest())
    names = fm.names
    combos = list(combinations(range(n), t))
    uncovered = set(satisfiable_tuples(fm, t, trie))
    rows: list[Assignment] = []
    method = "exhaustive-greedy"
    try:
        candidates = [tuple(c[nm] for nm in names) for c in fm.get_valid(cap=cap)]
    except EnumerationCapExceeded:
        candidates = None
        method = "aetg"

    if candidates is not None:
        cand_tuples = [_row_tuples(c, combos) for c in candidates]
        while uncovered:
            best, best_gain = -1, 0
            for i, tuples in enumerate(cand_tuples):
                gain = len(tuples & uncovered)
                if gain > best_gain:
                    best, best_gain = i, gain
            if best < 0:
                raise EvoSplatError("no valid row covers the remaining tuples")
            rows.append(Assignment(zip(names, candidates[best])))
            uncovered -= cand_tuples[best]
    else:
        rng = random.Random(seed)
        while uncovered:
            combo, values = min(uncovered)
            fixed: dict[int, bool] = dict(zip(combo, values))
            rest = [i for i in range(n) if i not in fixed]
            rng.shuffle(rest)
            for var in rest:
                best_val, best_gain = None, -1
                for val in (False, True):
                    trial = {**fixed, var: val}
                    a = Assignment((names[i], v) for i, v in trial.items())
                    if not cached_is_sat(trie, fm, a):
                        continue
                    gain = sum(
                        1 for c, vs in uncovered
                        if var in c and all(i in trial and trial[i] == v for i, v in zip(c, vs))
                    )
                    if gain > best_gain:
                        best_val, best_gain = val, gain
                if best_val is None:
                    raise EvoSplatError("internal error: satisfiable row could not be extended")
                fixed[var] = best_val
            row = tuple(fixed[i] for i in range(n))
            rows.append(Assignment(zip(names, row)))
            uncovered -= _row_tuples(row, combos)

    return CoveringArray(t, names, rows, {"seed": seed, "strength": t, "method": method,
                                          "model_digest": fm.digest()})


@dataclass
class CoveringReport:
    uncovered: list[dict]
    invalid_rows: list[int]

    @property
    def ok(self) -> bool:
        return not self.uncovered and not self.invalid_rows

    def to_dict(self) -> dict:
        return {"uncovered": self.uncovered, "invalid_rows": self.invalid_rows, "ok": self.ok}


def verify_covering(fm: FeatureModel, array: CoveringArray, t: int | None = None) -> CoveringReport:
    """Brute-force check of validity and t-tuple coverage.

    Uses the solver directly (no cache) over all C(n, t) * 2**t tuples.
    """
    t = t or array.strength
    names = fm.names
    invalid = [i for i, row in enumerate(array.rows) if not fm.is_valid(row)]
    seen: set[tuple] = set()
    for row in array.rows:
        for combo in combinations(names, t):
            seen.add((combo, tuple(row[nm] for nm in combo)))
    missing = []
    for combo in combinations(names, t):
        for values in product((False, True), repeat=t):
            if (combo, values) in seen:
                continue
            if fm.is_satisfiable(dict(zip(combo, values))):
                missing.append({nm: v for nm, v in zip(combo, values)})
    return CoveringReport(missing, invalid)


def evo_sample_run(
    array: CoveringArray,
    coverage: CoverageMap,
    changes: ChangeSet,
    suite: Sequence[TestCase],
    new_program: Program,
    fm: FeatureModel | None = None,
) -> dict:
    """Re-run change-impacted tests once per precomputed row.

    Selection is the same as for RTS; each selected test executes against
    every row with no exploration.
    """
    if fm is not None:
        for i, row in enumerate(array.rows):
            if not fm.is_valid(row):
                raise ModelChangedError(f"covering-array row {i} is invalid under the current model")
    selection = select_tests(coverage, changes, [t.name for t in suite])
    per_test: dict[str, dict] = {}
    executions = 0
    for t in suite:
        if t.name not in selection.selected:
            per_test[t.name] = {"selected": False, "rows": 0, "verdicts": [], "failing_rows": []}
            continue
        verdicts = []
        failing = []
        for i, row in enumerate(array.rows):
            v, _ = run_under(new_program, t, row)
            executions += 1
            verdicts.append(v.to_dict())
            if v.outcome != t.expected:
                failing.append(i)
        per_test[t.name] = {"selected": True, "rows": len(array.rows), "verdicts": verdicts,
                            "failing_rows": failing}
    return {
        "mode": f"evo-{array.strength}-wise",
        "changes": sorted(changes.changed),
        "tests_total": selection.total,
        "tests_selected": selection.selected,
        "tests_exec_pct": round(selection.percent, 2),
        "rows_per_test": len(array.rows),
        "executions": executions,
        "classification": classify(len(selection.selected), selection.total),
        "per_test": per_test,
    }


def rows_exposing(program: Program, test: TestCase, rows: Iterable[Mapping[str, bool]]) -> list[int]:
    """Indices of rows under which ``test`` does not meet its expected outcome."""
    return [i for i, row in enumerate(rows) if run_under(program, test, row)[0].outcome != test.expected]
