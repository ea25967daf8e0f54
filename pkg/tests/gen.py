"""Seeded random feature models, programs and body edits for differential tests."""

from __future__ import annotations

import random
from itertools import product

from evosplat.dsl import And, Assert, Branch, Call, Fail, Not, Or, Pass, Program, TestCase, Var, run_under
from evosplat.errors import ModelError
from evosplat.model import Assignment, FeatureModel, FeatureVariable


def random_model(rng: random.Random, max_vars: int = 10, max_clauses: int = 5) -> FeatureModel:
    """A satisfiable model with 1..max_vars variables, a few mandatory."""
    while True:
        n = rng.randint(1, max_vars)
        names = [f"F{i}" for i in range(n)]
        variables = []
        for nm in names:
            if rng.random() < 0.15:
                variables.append(FeatureVariable(nm, True, rng.random() < 0.5))
            else:
                variables.append(FeatureVariable(nm))
        clauses = []
        for _ in range(rng.randint(0, max_clauses)):
            k = rng.randint(1, min(3, n))
            clauses.append([(nm, rng.random() < 0.5) for nm in rng.sample(names, k)])
        try:
            fm = FeatureModel(variables, clauses)
        except ModelError:
            continue
        if fm.is_satisfiable():
            return fm


def _expr(rng: random.Random, feats: list[str], depth: int = 0):
    r = rng.random()
    if depth >= 2 or r < 0.5:
        return Var(rng.choice(feats))
    if r < 0.65:
        return Not(_expr(rng, feats, depth + 1))
    if r < 0.85:
        return And(_expr(rng, feats, depth + 1), _expr(rng, feats, depth + 1))
    return Or(_expr(rng, feats, depth + 1), _expr(rng, feats, depth + 1))


def random_body(rng: random.Random, feats: list[str], callees: list[str], depth: int = 0,
                fail_rate: float = 0.05) -> tuple:
    stmts = []
    for _ in range(rng.randint(0, 3)):
        r = rng.random()
        if r < 0.35 and depth < 2:
            stmts.append(Branch(rng.choice(feats),
                                random_body(rng, feats, callees, depth + 1, fail_rate),
                                random_body(rng, feats, callees, depth + 1, fail_rate)))
        elif r < 0.65 and callees:
            stmts.append(Call(rng.choice(callees)))
        elif r < 0.8:
            stmts.append(Assert(_expr(rng, feats)))
        elif r < 0.8 + fail_rate:
            stmts.append(Fail("boom"))
        else:
            stmts.append(Pass())
    return tuple(stmts)


def random_program(rng: random.Random, fm: FeatureModel, max_methods: int = 8) -> Program:
    """Acyclic program: method i may only call methods j > i; m0 is the entry."""
    m = rng.randint(1, max_methods)
    names = [f"m{i}" for i in range(m)]
    feats = list(fm.names)
    return Program({nm: random_body(rng, feats, names[i + 1:]) for i, nm in enumerate(names)})


def edit_bodies(rng: random.Random, fm: FeatureModel, program: Program, k: int | None = None) -> Program:
    """Replace the bodies of k random methods, keeping the call graph acyclic.

    The entry method m0 is usually spared so that most edits leave part of
    the decision tree untouched.
    """
    names = list(program.methods)
    pool = names[1:] if len(names) > 1 and rng.random() < 0.75 else names
    k = k or rng.randint(1, max(1, len(pool) // 2))
    chosen = rng.sample(pool, min(k, len(pool)))
    methods = dict(program.methods)
    for nm in chosen:
        i = names.index(nm)
        methods[nm] = random_body(rng, list(fm.names), names[i + 1:])
    return Program(methods)


ENTRY = TestCase("t", "m0")


def random_instance(seed: int, max_vars: int = 10, max_methods: int = 8):
    rng = random.Random(seed)
    fm = random_model(rng, max_vars)
    return rng, fm, random_program(rng, fm, max_methods)


def brute_valid(fm: FeatureModel) -> list[Assignment]:
    """All valid configurations by truth-table enumeration (no solver)."""
    out = []
    for values in product((False, True), repeat=len(fm)):
        a = dict(zip(fm.names, values))
        if brute_check(fm, a):
            out.append(Assignment(a))
    return out


def brute_check(fm: FeatureModel, config) -> bool:
    return all(any(config[nm] == pol for nm, pol in clause) for clause in fm.clauses)


def brute_sat(fm: FeatureModel, partial) -> bool:
    return any(all(c[k] == v for k, v in partial.items()) for c in brute_valid(fm))


def direct_verdicts(fm: FeatureModel, program: Program, test: TestCase = ENTRY) -> dict:
    return {c: run_under(program, test, c)[0] for c in brute_valid(fm)}
