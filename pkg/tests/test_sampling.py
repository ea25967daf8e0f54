from __future__ import annotations

import random
from itertools import combinations, product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evosplat import fixtures
from evosplat.dsl import ChangeSet, run_under
from evosplat.errors import EvoSplatError, ModelChangedError
from evosplat.explorer import splat
from evosplat.model import Assignment, parse_model
from evosplat.rts import CoverageMap
from evosplat.sampling import (
    CoveringArray,
    evo_sample_run,
    generate_twise,
    rows_exposing,
    satisfiable_tuples,
    verify_covering,
)

from gen import brute_check, brute_valid, random_model

XYZ = parse_model("feature x\nfeature y\nfeature z\n")


def brute_pairs_covered(fm, rows, t):
    """Independent coverage check: every satisfiable t-tuple appears in some row."""
    valid = brute_valid(fm)
    for combo in combinations(fm.names, t):
        for values in product((False, True), repeat=t):
            want = dict(zip(combo, values))
            feasible = any(all(c[k] == v for k, v in want.items()) for c in valid)
            shown = any(all(r[k] == v for k, v in want.items()) for r in rows)
            if feasible and not shown:
                return False
    return True


class TestGenerate:
    def test_three_unconstrained_pairwise(self):
        arr = generate_twise(XYZ, 2)
        assert len(arr) <= 5
        assert verify_covering(XYZ, arr).ok
        assert brute_pairs_covered(XYZ, arr.rows, 2)

    def test_strength_one_needs_two_rows(self):
        assert len(generate_twise(XYZ, 1)) == 2

    def test_full_strength_is_exhaustive(self):
        assert len(generate_twise(XYZ, 3)) == 8

    def test_constraints_respected(self, gpl):
        fm, _, _ = gpl
        arr = generate_twise(fm, 2)
        assert all(fm.is_valid(r) for r in arr.rows)
        assert verify_covering(fm, arr).ok
        assert all(not (r["WEIGHTED"] is False and r["SEARCH"] is False) for r in arr.rows)

    def test_deterministic(self, gpl):
        fm, _, _ = gpl
        assert generate_twise(fm, 2, seed=3).rows == generate_twise(fm, 2, seed=3).rows

    def test_aetg_fallback(self):
        fm = parse_model("".join(f"feature V{i}\n" for i in range(12)) + "constraint !V0 | !V1\n")
        arr = generate_twise(fm, 2, seed=5, cap=100)
        assert arr.provenance["method"] == "aetg"
        assert verify_covering(fm, arr).ok
        assert generate_twise(fm, 2, seed=5, cap=100).rows == arr.rows

    def test_bad_strength(self):
        with pytest.raises(ValueError):
            generate_twise(XYZ, 4)
        with pytest.raises(ValueError):
            generate_twise(XYZ, 0)

    def test_unsat_model(self):
        with pytest.raises(EvoSplatError):
            generate_twise(parse_model("feature a\nconstraint a\nconstraint !a\n"), 1)

    def test_satisfiable_tuples(self, gpl):
        fm, _, _ = gpl
        tuples = satisfiable_tuples(fm, 2)
        assert len(tuples) == 3 * 4 - 1


class TestVerify:
    def test_reports_missing_tuple(self):
        arr = CoveringArray(2, XYZ.names, [Assignment(x=False, y=False, z=False),
                                            Assignment(x=True, y=True, z=True)])
        rep = verify_covering(XYZ, arr)
        assert not rep.ok and {"x": False, "y": True} in rep.uncovered

    def test_reports_invalid_row(self, gpl):
        fm, _, _ = gpl
        arr = generate_twise(fm, 1)
        arr.rows.append(Assignment(WEIGHTED=False, SEARCH=False, UNDIR=False))
        assert verify_covering(fm, arr).invalid_rows == [len(arr.rows) - 1]

    def test_csv_round_trip(self, gpl):
        fm, _, _ = gpl
        arr = generate_twise(fm, 2)
        back = CoveringArray.from_csv(arr.to_csv(), 2)
        assert back.rows == arr.rows and back.names == arr.names

    @pytest.mark.parametrize("text", ["", "a,b\n0,2\n", "a,b\n0\n"])
    def test_bad_csv(self, text):
        with pytest.raises(EvoSplatError):
            CoveringArray.from_csv(text)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10**6), st.sampled_from([1, 2, 3]))
    def test_random_models(self, seed, t):
        fm = random_model(random.Random(seed), max_vars=8, max_clauses=6)
        t = min(t, len(fm))
        arr = generate_twise(fm, t, seed=seed)
        assert verify_covering(fm, arr).ok
        assert all(brute_check(fm, r) for r in arr.rows)
        assert brute_pairs_covered(fm, arr.rows, t)


class TestLonelyFault:
    def test_splat_finds_it(self):
        fm, program, (test,) = fixtures.lonely()
        (bad,) = splat(fm, program, test).failures()
        assert dict(bad.partial()) == {"A": True, "B": False, "C": False, "D": False, "E": False}

    def test_pairwise_misses_it(self):
        fm, program, (test,) = fixtures.lonely()
        arr = generate_twise(fm, 2)
        assert verify_covering(fm, arr).ok
        assert rows_exposing(program, test, arr.rows) == []
        exposing = [c for c in brute_valid(fm) if run_under(program, test, c)[0].outcome == "fail"]
        assert exposing == [Assignment(A=True, B=False, C=False, D=False, E=False)]
        assert all(r not in exposing for r in arr.rows)


class TestEvoSampleRun:
    def test_empty_changes(self, gpl):
        fm, program, tests = gpl
        arr = generate_twise(fm, 2)
        rep = evo_sample_run(arr, CoverageMap({"addEdgeWt": {"addAnEdge"}}), ChangeSet(frozenset()), tests, program)
        assert rep["executions"] == 0 and rep["classification"] == "No Re-Execution"

    def test_selected_test_runs_every_row(self, gpl_v2):
        fm, program, tests = gpl_v2
        arr = generate_twise(fm, 2)
        rep = evo_sample_run(arr, CoverageMap({"addEdgeWt": {"addAnEdge"}}),
                             ChangeSet(frozenset({"addAnEdge"})), tests, program, fm)
        assert rep["executions"] == len(arr) and rep["per_test"]["addEdgeWt"]["failing_rows"] == []

    def test_stale_row_rejected(self, gpl):
        fm, program, tests = gpl
        arr = CoveringArray(1, fm.names, [Assignment(WEIGHTED=False, SEARCH=False, UNDIR=False)])
        with pytest.raises(ModelChangedError):
            evo_sample_run(arr, CoverageMap(), ChangeSet(frozenset({"x"})), tests, program, fm)
