"""Configuration-aware regression testing for feature-flagged programs.

Explore a test under every configuration that can change its outcome, cache
the satisfiability checks that prune the exploration, and after a program
change re-explore only the decision subtrees that reach changed code.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .dsl import ChangeSet, Program, TestCase, Verdict, diff_methods, execute, load_suite, parse_suite
from .errors import EvoSplatError
from .explorer import DEFAULT_BOUND, ExplorationResult, RunRecord, decision_tree, explore_suite, splat
from .model import Assignment, FeatureModel, FeatureVariable, load_model, parse_model
from .rcs import evo_splat, evolve_suite, reduction_report
from .rts import build_coverage, run_rts, select_tests
from .sampling import generate_twise, verify_covering
from .satcache import SatTrie, cached_is_sat
from .workspace import Workspace

__all__ = [
    "DEFAULT_BOUND",
    "Assignment",
    "ChangeSet",
    "EvoSplatError",
    "ExplorationResult",
    "FeatureModel",
    "FeatureVariable",
    "Program",
    "RunRecord",
    "SatTrie",
    "TestCase",
    "Verdict",
    "Workspace",
    "build_coverage",
    "cached_is_sat",
    "decision_tree",
    "diff_methods",
    "evo_splat",
    "evolve_suite",
    "execute",
    "explore_suite",
    "generate_twise",
    "load_model",
    "load_suite",
    "parse_model",
    "parse_suite",
    "reduction_report",
    "run_rts",
    "select_tests",
    "splat",
    "verify_covering",
]
