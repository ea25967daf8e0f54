"""
Mandatory features and covered configurations
=============================================

The Notepad subject has two mandatory and three optional features. The test
only ever reads TOOLBAR and WORDCOUNT, so a handful of executions stand in
for every valid configuration.
"""

from evosplat import fixtures
from evosplat.explorer import splat

fm, program, (test,) = fixtures.notepad()
print("valid configurations:", fm.count_valid())

result = splat(fm, program, test)
for run in result.runs:
    stands_for = fm.count_valid(run.partial())
    print(f"{dict(run.partial())!s:40} -> {stands_for} configuration(s)")

assert result.covered == set(fm.get_valid())
print(f"{len(result.runs)} executions, {len(result.covered)} configurations covered")
