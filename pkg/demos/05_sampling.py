"""
What a pairwise sample can miss
===============================

Five independent options, and a failure that only shows up when option A is
the single one enabled. A pairwise covering array exercises every pair of
values yet never lands on that configuration; exhaustive exploration does.
"""

from evosplat import fixtures
from evosplat.explorer import splat
from evosplat.sampling import generate_twise, rows_exposing, verify_covering

fm, program, (test,) = fixtures.lonely()

array = generate_twise(fm, 2)
print(array.to_csv())
print("covering check:", verify_covering(fm, array).to_dict())
print("rows exposing the failure:", rows_exposing(program, test, array.rows))

result = splat(fm, program, test)
print(f"exploration: {len(result.runs)} executions")
for run in result.failures():
    print("  fails under", dict(run.partial()), "-", run.verdict.message)
