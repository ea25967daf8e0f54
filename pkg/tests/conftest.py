from __future__ import annotations

import pytest

from evosplat import fixtures
from evosplat.workspace import Workspace


@pytest.fixture
def gpl():
    return fixtures.gpl(1)


@pytest.fixture
def gpl_v2():
    return fixtures.gpl(2)


@pytest.fixture
def notepad():
    return fixtures.notepad()


@pytest.fixture
def workspace(tmp_path):
    return Workspace(tmp_path / "ws")


# acceptance results, filled by test_acceptance.py and echoed at the end of the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
