"""
Exploring and evolving a small graph product line
=================================================

One test, three feature flags, one constraint. We explore every
configuration that can change the test's outcome, print the decision tree,
then edit one method and re-explore only the subtree that reaches it.
"""

import tempfile

from evosplat import fixtures
from evosplat.dsl import diff_methods
from evosplat.explorer import decision_tree, explore_suite
from evosplat.rcs import evo_splat
from evosplat.workspace import Workspace

fm, v1, tests = fixtures.gpl(1)
_, v2, _ = fixtures.gpl(2)
print(fixtures.text("gpl.model"))

# %% Explore version 1 and keep the results in a workspace
ws_dir = tempfile.mkdtemp(prefix="gpl-")
ws = Workspace(ws_dir, fm)
result = explore_suite(fm, v1, tests, bound=None, workspace=ws)["addEdgeWt"]

for run in result.runs:
    print(dict(run.partial()), run.verdict.outcome)
print("pruned as illegal:", [dict(p.values) for p in result.pruned])
print(f"{len(result.runs)} executions cover {len(result.covered)} configurations")

# %% The decision tree, in Graphviz syntax
print(decision_tree(result).to_dot())

# %% Version 2 adds an assertion to addAnEdge
changes = diff_methods(v1, v2)
print("changed methods:", sorted(changes))

evo = evo_splat(fm, v2, tests[0], Workspace(ws_dir, fm), changes)
print(evo.classification)
print(f"re-executed {evo.paths_reexecuted} paths, retained {evo.paths_retained}")
print("solver calls during re-exploration:", evo.stats.solver_calls)
