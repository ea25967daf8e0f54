from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evosplat.dsl import TestCase, parse_suite
from evosplat.errors import ExplorationError
from evosplat.explorer import (
    EMPTY_PREFIX,
    Entry,
    RunRecord,
    SubtreePrefix,
    decision_tree,
    explore_suite,
    splat,
)
from evosplat.model import Assignment, parse_model
from evosplat.workspace import Workspace

from gen import ENTRY, brute_valid, direct_verdicts, random_instance

W, S, U = "WEIGHTED", "SEARCH", "UNDIR"


def partials(result):
    return [tuple(r.path()) for r in result.runs]


class TestGpl:
    def test_runs_and_pruned_path(self, gpl):
        fm, program, (test,) = gpl
        res = splat(fm, program, test)
        assert partials(res) == [
            ((W, False), (S, True)),
            ((W, True), (S, False), (U, False)),
            ((W, True), (S, False), (U, True)),
            ((W, True), (S, True), (U, False)),
            ((W, True), (S, True), (U, True)),
        ]
        assert [p.path() for p in res.pruned] == [((W, False), (S, False))]
        assert res.paths == 6 and res.pruned_unsat == 1
        assert len(res.covered) == 6 and not res.bounded and not res.drift
        assert all(r.verdict.passed for r in res.runs)

    def test_stack_interleaves_methods_and_features(self, gpl):
        fm, program, (test,) = gpl
        res = splat(fm, program, test)
        assert [str(e) for e in res.runs[1].stack] == [
            "m:addEdgeWt", "f:WEIGHTED", "m:addAnEdge", "m:addVertex", "f:SEARCH", "f:UNDIR", "m:adjustAdorns"]

    def test_decision_tree_shape(self, gpl):
        fm, program, (test,) = gpl
        tree = decision_tree(splat(fm, program, test))
        root = tree.root
        assert root.feature == W
        assert root.children[False].feature == S and root.children[True].feature == S
        assert root.children[False].children[False].leaf == "illegal"
        assert root.children[False].children[True].leaf == "pass"
        for v in (False, True):
            assert root.children[True].children[v].feature == U
        assert tree.paths()[0] == (((W, False), (S, False)), "illegal")
        assert len(tree.paths()) == 6

    def test_dot_output(self, gpl):
        fm, program, (test,) = gpl
        dot = decision_tree(splat(fm, program, test)).to_dot()
        assert dot.startswith("digraph decision_tree {")
        assert dot.count("ILLEGAL") == 1 and dot.count("PASS") == 5
        assert dot.count('label="UNDIR"') == 2

    def test_every_run_is_satisfiable(self, gpl):
        fm, program, (test,) = gpl
        for r in splat(fm, program, test).runs:
            assert fm.is_satisfiable(r.partial())
            assert set(r.state) == set(fm.names)


class TestNotepad:
    def test_three_executions_cover_six(self, notepad):
        fm, program, (test,) = notepad
        res = splat(fm, program, test)
        assert len(res.runs) == 3
        assert res.covered == set(fm.get_valid()) and len(res.covered) == 6

    def test_mandatory_reads_not_on_stack(self):
        fm = parse_model("feature M mandatory true\nfeature A\n")
        program, (t,) = parse_suite("method m { if M { if A { pass } } }\ntest t entry m expect pass")
        res = splat(fm, program, t)
        assert len(res.runs) == 2
        assert all(Entry.feature("M") not in r.stack for r in res.runs)


class TestEdgeCases:
    def test_program_without_reads(self):
        fm = parse_model("feature A\nfeature B\n")
        program, (t,) = parse_suite("method m { pass }\ntest t entry m expect pass")
        res = splat(fm, program, t)
        assert len(res.runs) == 1 and len(res.covered) == 4

    def test_bound(self, gpl):
        fm, program, (test,) = gpl
        res = splat(fm, program, test, bound=2)
        assert len(res.runs) == 2 and res.bounded

    def test_bound_equal_to_tree_is_not_bounded(self, gpl):
        fm, program, (test,) = gpl
        assert not splat(fm, program, test, bound=5).bounded

    def test_bad_bound(self, gpl):
        fm, program, (test,) = gpl
        with pytest.raises(ValueError):
            splat(fm, program, test, bound=0)

    def test_unsat_prefix_rejected(self, gpl):
        fm, program, (test,) = gpl
        prefix = SubtreePrefix((Entry.method("addEdgeWt"), Entry.feature(W), Entry.feature(S)),
                               Assignment({W: False, S: False}))
        with pytest.raises(ExplorationError):
            splat(fm, program, test, prefix)

    def test_prefix_values_must_match_stack(self):
        with pytest.raises(ValueError):
            SubtreePrefix((Entry.feature("A"),), Assignment(B=True))


class TestPrefix:
    def test_confined_to_subtree(self, gpl):
        fm, program, (test,) = gpl
        prefix = SubtreePrefix((Entry.method("addEdgeWt"), Entry.feature(W)), Assignment({W: True}))
        res = splat(fm, program, test, prefix)
        assert len(res.runs) == 4
        assert all(r.state[W] for r in res.runs)
        assert all(prefix.covers(r.stack, r.state) for r in res.runs)

    def test_false_prefix_feature_stays_false(self, gpl):
        fm, program, (test,) = gpl
        prefix = SubtreePrefix((Entry.method("addEdgeWt"), Entry.feature(W)), Assignment({W: False}))
        res = splat(fm, program, test, prefix)
        assert partials(res) == [((W, False), (S, True))]
        assert len(res.pruned) == 1

    def test_drift_detected(self, gpl):
        fm, _, (test,) = gpl
        # a program whose first read is SEARCH, replayed under a WEIGHTED-first prefix
        program, _ = parse_suite("method addEdgeWt { if SEARCH { pass } if WEIGHTED { pass } }")
        prefix = SubtreePrefix((Entry.method("addEdgeWt"), Entry.feature(W)), Assignment({W: True}))
        assert splat(fm, program, test, prefix).drift


class TestRecords:
    def test_round_trip(self, gpl):
        fm, program, (test,) = gpl
        for r in splat(fm, program, test).runs:
            assert RunRecord.from_dict(r.to_dict()) == r

    def test_result_dict(self, gpl):
        fm, program, (test,) = gpl
        d = splat(fm, program, test).to_dict(fm)
        assert d["runs_executed"] == 5 and d["paths"] == 6 and d["covered_count"] == 6
        assert [run["covered"] for run in d["runs"]] == [2, 1, 1, 1, 1]


class TestSuite:
    def test_explore_suite_writes_workspace(self, tmp_path, gpl):
        fm, program, tests = gpl
        ws = Workspace(tmp_path / "ws", fm)
        results = explore_suite(fm, program, tests, workspace=ws)
        assert ws.exists() and ws.model_digest() == fm.digest()
        assert len(ws.load_runs("addEdgeWt").runs) == len(results["addEdgeWt"].runs)
        assert ws.coverage()["addEdgeWt"] == {"addEdgeWt", "addVertex", "addAnEdge", "adjustAdorns"}
        assert ws.trie_path.is_file()

    def test_parallel_matches_serial(self):
        _, fm, program = random_instance(7)
        tests = [TestCase(f"t{i}", "m0") for i in range(4)]
        serial = explore_suite(fm, program, tests, bound=None)
        parallel = explore_suite(fm, program, tests, bound=None, jobs=4)
        assert {t: r.verdicts() for t, r in serial.items()} == {t: r.verdicts() for t, r in parallel.items()}


class TestSoundness:
    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 10**6))
    def test_covers_every_valid_configuration(self, seed):
        _, fm, program = random_instance(seed)
        res = splat(fm, program, ENTRY, EMPTY_PREFIX)
        assert res.covered == set(brute_valid(fm))
        direct = direct_verdicts(fm, program)
        for r in res.runs:
            for c in fm.get_valid(r.partial()):
                assert direct[c] == r.verdict

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 10**6))
    def test_stack_invariants(self, seed):
        _, fm, program = random_instance(seed)
        res = splat(fm, program, ENTRY)
        seen = set()
        for r in res.runs:
            assert len(set(r.stack)) == len(r.stack)
            for e in r.stack:
                assert (e.name in fm.names) if e.kind == "feature" else (e.name in program.methods)
            assert fm.is_satisfiable(r.partial())
            assert r.partial() not in seen
            seen.add(r.partial())
        for p in res.pruned:
            assert not fm.is_satisfiable(p.values)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10**6))
    def test_tree_builds_and_counts_leaves(self, seed):
        _, fm, program = random_instance(seed)
        res = splat(fm, program, ENTRY)
        assert len(decision_tree(res).paths()) == res.paths
