"""Small subject systems bundled with the package.

``gpl`` is a three-feature slice of a graph product line with one test and
two versions (``v2`` edits ``addAnEdge``); ``notepad`` is a text editor with
two mandatory and three optional features. ``lonely`` hides a failure
behind one option being on while every other option is off.
"""

from __future__ import annotations

from importlib import resources

from ..dsl import Program, TestCase, parse_suite
from ..model import FeatureModel, parse_model


def text(name: str) -> str:
    return resources.files(__name__).joinpath(name).read_text(encoding="utf-8")


def path(name: str):
    return resources.files(__name__).joinpath(name)


def gpl(version: int = 1) -> tuple[FeatureModel, Program, list[TestCase]]:
    fm = parse_model(text("gpl.model"))
    program, tests = parse_suite(text(f"gpl_v{version}.suite"), fm)
    return fm, program, tests


def notepad() -> tuple[FeatureModel, Program, list[TestCase]]:
    fm = parse_model(text("notepad.model"))
    program, tests = parse_suite(text("notepad.suite"), fm)
    return fm, program, tests


def lonely() -> tuple[FeatureModel, Program, list[TestCase]]:
    fm = parse_model(text("lonely.model"))
    program, tests = parse_suite(text("lonely.suite"), fm)
    return fm, program, tests
