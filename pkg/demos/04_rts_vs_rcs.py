"""
Test selection versus configuration selection
=============================================

A random program with one test per method. After a body edit, test
selection re-runs whole tests whose coverage touches the change;
configuration selection re-runs only the affected subtrees of each test.
"""

import tempfile

from evosplat.dsl import Branch, Call, Pass, Program, TestCase, diff_methods, render_suite
from evosplat.explorer import explore_suite
from evosplat.model import parse_model
from evosplat.rcs import evolve_suite
from evosplat.rts import run_rts
from evosplat.workspace import Workspace

fm = parse_model("feature A\nfeature B\nfeature C\nconstraint !A | !C\n")
v1 = Program({
    "main": (Branch("A", (Call("left"),), (Call("right"),)),),
    "left": (Branch("B", (Call("leaf"),), (Pass(),)),),
    "right": (Branch("C", (Pass(),), (Call("leaf"),)),),
    "leaf": (Pass(),),
})
tests = [TestCase("t_main", "main"), TestCase("t_right", "right"), TestCase("t_leaf", "leaf")]
print(render_suite(v1, tests))

v2 = Program({**v1.methods, "left": (Branch("B", (Call("leaf"),), (Call("leaf"),)),)})
changes = diff_methods(v1, v2)
print("changed:", sorted(changes))

for label, evolve in (("RTS", run_rts), ("RCS", evolve_suite)):
    ws_dir = tempfile.mkdtemp()
    explore_suite(fm, v1, tests, bound=None, workspace=Workspace(ws_dir, fm))
    report = evolve(fm, v2, tests, Workspace(ws_dir, fm), changes)
    executed = report.get("runs_executed", report.get("runs_reexecuted"))
    print(f"{label}: {report['classification']}, {executed} executions")
    for name, detail in report["per_test"].items():
        print("   ", name, {k: detail[k] for k in ("runs", "runs_reexecuted", "runs_retained") if k in detail})

