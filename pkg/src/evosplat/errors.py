"""Exception hierarchy shared by all evosplat modules."""

from __future__ import annotations


class EvoSplatError(Exception):
    """Base class for every error raised by this package."""


class ParseError(EvoSplatError):
    """Syntax or validation error in a model or suite file."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


class ModelError(ParseError):
    """Invalid feature model text or contents."""


class SuiteError(ParseError):
    """Invalid suite text or program structure."""


class UnknownFeatureError(EvoSplatError, KeyError):
    """A feature name that is not declared in the model."""

    def __str__(self) -> str:
        return Exception.__str__(self)


class EnumerationCapExceeded(EvoSplatError):
    def __init__(self, cap: int, count: int):
        self.cap = cap
        self.count = count
        super().__init__(f"valid-configuration enumeration exceeded cap {cap} (found {count} before stopping)")


class TrieCorruptError(EvoSplatError):
    """The persisted SAT trie failed its integrity check."""


class ExplorationError(EvoSplatError):
    """Exploration could not start or violated an internal invariant."""


class BoundedExplorationError(EvoSplatError):
    """RCS was asked to evolve a test whose prior exploration hit the bound."""


class ModelChangedError(EvoSplatError):
    """Cached exploration data was produced under a different feature model."""


class WorkspaceError(EvoSplatError):
    """Missing or inconsistent workspace content."""
