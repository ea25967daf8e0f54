"""Feature models: boolean feature variables, CNF constraints and the four
legality queries (satisfiability, valid completions, mandatory status and
mandatory value).

Satisfiability is decided by a small DPLL procedure with unit propagation.
Branching follows declaration order with the false branch first, so every
answer and every enumeration order is deterministic.
"""

from __future__ import annotations

import hashlib
import re
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass

from .errors import EnumerationCapExceeded, ModelError, UnknownFeatureError

DEFAULT_ENUMERATION_CAP = 4096

Literal = tuple[str, bool]
Clause = frozenset  # frozenset[Literal]


class Assignment(Mapping[str, bool]):
    """Immutable, hashable mapping from feature name to boolean.

    Used for partial assignments (satisfiability queries, trie keys) and for
    complete ones (configurations).
    """

    __slots__ = ("_data", "_hash")

    def __init__(self, bindings: Mapping[str, bool] | Iterable[tuple[str, bool]] = (), **kwargs: bool):
        data = dict(bindings)
        data.update(kwargs)
        self._data = {k: bool(v) for k, v in data.items()}
        self._hash: int | None = None

    def __getitem__(self, key: str) -> bool:
        return self._data[key]

    def __iter__(self) -> Iterator[str]:
        return iter(self._data)

    def __len__(self) -> int:
        return len(self._data)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._data.items()))
        return self._hash

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Mapping):
            return self._data == dict(other.items())
        return NotImplemented

    def __repr__(self) -> str:
        body = ", ".join(f"{k}={int(v)}" for k, v in self._data.items())
        return f"Assignment({body})"

    def extend(self, other: Mapping[str, bool] | None = None, **kwargs: bool) -> Assignment:
        """Return a new assignment with extra (or overriding) bindings."""
        data = dict(self._data)
        if other:
            data.update(other)
        data.update(kwargs)
        return Assignment(data)

    def restrict(self, names: Iterable[str]) -> Assignment:
        return Assignment((n, self._data[n]) for n in names if n in self._data)

    def to_dict(self) -> dict[str, bool]:
        return dict(self._data)


@dataclass(frozen=True)
class FeatureVariable:
    name: str
    mandatory: bool = False
    mandatory_value: bool | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("feature name must be nonempty")
        if self.mandatory != (self.mandatory_value is not None):
            raise ValueError(f"feature {self.name}: mandatory_value is set iff the feature is mandatory")

    @property
    def kind(self) -> str:
        return "mandatory" if self.mandatory else "optional"


class FeatureModel:
    """Declared feature variables plus CNF constraints.

    Immutable after construction. Mandatory variables are enforced through
    unit clauses appended after the declared constraints.
    """

    def __init__(self, variables: Iterable[FeatureVariable], clauses: Iterable[Iterable[Literal]] = ()):
        self.variables: tuple[FeatureVariable, ...] = tuple(variables)
        self._by_name: dict[str, FeatureVariable] = {}
        for v in self.variables:
            if v.name in self._by_name:
                raise ModelError(f"duplicate feature variable {v.name!r}")
            self._by_name[v.name] = v
        self._index = {v.name: i for i, v in enumerate(self.variables)}

        declared: list[Clause] = []
        for raw in clauses:
            clause = frozenset((name, bool(pol)) for name, pol in raw)
            if not clause:
                raise ModelError("empty clause")
            for name, _ in clause:
                if name not in self._by_name:
                    raise ModelError(f"clause references undeclared variable {name!r}")
            declared.append(clause)
        for v in self.variables:
            if v.mandatory:
                contradiction = frozenset({(v.name, not v.mandatory_value)})
                if contradiction in declared:
                    raise ModelError(f"mandatory variable {v.name!r} contradicted by a unit clause")
        units = [frozenset({(v.name, bool(v.mandatory_value))}) for v in self.variables if v.mandatory]
        self.clauses: tuple[Clause, ...] = tuple(declared + units)
        # DIMACS-style integer encoding for the solver.
        self._int_clauses = tuple(
            tuple(sorted((self._index[n] + 1) * (1 if p else -1) for n, p in c)) for c in self.clauses
        )

    # -- structure -----------------------------------------------------------

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def __contains__(self, name: object) -> bool:
        return name in self._by_name

    def __len__(self) -> int:
        return len(self.variables)

    def __repr__(self) -> str:
        return f"FeatureModel({len(self.variables)} variables, {len(self.clauses)} clauses)"

    def variable(self, name: str) -> FeatureVariable:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownFeatureError(f"undeclared feature variable {name!r}") from None

    def order(self, name: str) -> int:
        """Canonical (declaration) position of a variable."""
        try:
            return self._index[name]
        except KeyError:
            raise UnknownFeatureError(f"undeclared feature variable {name!r}") from None

    def is_mandatory(self, name: str) -> bool:
        return self.variable(name).mandatory

    def get_mandatory_value(self, name: str) -> bool:
        var = self.variable(name)
        if not var.mandatory:
            raise ValueError(f"feature {name!r} is optional and has no mandatory value")
        return bool(var.mandatory_value)

    def optional_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables if not v.mandatory)

    def initial_state(self) -> dict[str, bool]:
        """Mandatory variables at their forced value, optional ones false."""
        return {v.name: bool(v.mandatory_value) if v.mandatory else False for v in self.variables}

    def is_complete(self, a: Mapping[str, bool]) -> bool:
        self._check(a)
        return len(a) == len(self.variables)

    def digest(self) -> str:
        """Content hash of the model (variables, kinds and constraints)."""
        h = hashlib.sha256()
        for v in self.variables:
            h.update(f"feature {v.name} {v.kind} {v.mandatory_value}\n".encode())
        for c in sorted(set(self._int_clauses)):
            h.update((" ".join(map(str, c)) + "\n").encode())
        return h.hexdigest()

    def to_text(self) -> str:
        lines = []
        for v in self.variables:
            if v.mandatory:
                lines.append(f"feature {v.name} mandatory {'true' if v.mandatory_value else 'false'}")
            else:
                lines.append(f"feature {v.name}")
        n_units = sum(1 for v in self.variables if v.mandatory)
        for c in self.clauses[: len(self.clauses) - n_units]:
            lits = sorted(c, key=lambda lit: self._index[lit[0]])
            lines.append("constraint " + " | ".join(n if p else "!" + n for n, p in lits))
        return "\n".join(lines) + "\n"

    # -- queries ---------------------------------------------------------------

    def _check(self, a: Mapping[str, bool]) -> None:
        for name in a:
            if name not in self._by_name:
                raise UnknownFeatureError(f"undeclared feature variable {name!r}")

    def _to_cells(self, a: Mapping[str, bool]) -> list[bool | None]:
        self._check(a)
        cells: list[bool | None] = [None] * len(self.variables)
        for name, value in a.items():
            cells[self._index[name]] = bool(value)
        return cells

    def solve(self, a: Mapping[str, bool] = Assignment()) -> Assignment | None:
        """Return one valid completion of ``a`` or None if there is none.

        Unconstrained leftover variables are completed with false.
        """
        cells = _dpll(self._int_clauses, self._to_cells(a))
        if cells is None:
            return None
        return Assignment((v.name, bool(c)) for v, c in zip(self.variables, cells))

    def is_satisfiable(self, a: Mapping[str, bool] = Assignment()) -> bool:
        return _dpll(self._int_clauses, self._to_cells(a)) is not None

    def is_valid(self, a: Mapping[str, bool]) -> bool:
        """True iff ``a`` is complete and satisfies every clause."""
        if not self.is_complete(a):
            return False
        return all(any(a[n] == p for n, p in c) for c in self.clauses)

    def get_valid(self, a: Mapping[str, bool] = Assignment(), cap: int = DEFAULT_ENUMERATION_CAP) -> list[Assignment]:
        """All valid complete assignments agreeing with ``a``.

        Enumerated in canonical variable order, false before true. Raises
        EnumerationCapExceeded instead of truncating.
        """
        cells = self._to_cells(a)
        out: list[Assignment] = []
        names = self.names

        def rec(i: int, cur: list[bool | None]) -> None:
            if _dpll(self._int_clauses, cur) is None:
                return
            while i < len(cur) and cur[i] is not None:
                i += 1
            if i == len(cur):
                if len(out) >= cap:
                    raise EnumerationCapExceeded(cap, len(out))
                out.append(Assignment(zip(names, cur)))  # type: ignore[arg-type]
                return
            for value in (False, True):
                nxt = list(cur)
                nxt[i] = value
                rec(i + 1, nxt)

        rec(0, cells)
        return out

    def count_valid(self, a: Mapping[str, bool] = Assignment(), cap: int = DEFAULT_ENUMERATION_CAP) -> int:
        return len(self.get_valid(a, cap=cap))


def _dpll(clauses: tuple[tuple[int, ...], ...], cells: list[bool | None]) -> list[bool | None] | None:
    """DPLL over integer literals; ``cells[i]`` holds the value of variable i+1.

    Returns a satisfying (possibly still partial) cell list or None.
    """
    cells = list(cells)
    # unit propagation to fixpoint
    while True:
        changed = False
        open_clauses = []
        for clause in clauses:
            unassigned = None
            n_unassigned = 0
            satisfied = False
            for lit in clause:
                val = cells[abs(lit) - 1]
                if val is None:
                    n_unassigned += 1
                    unassigned = lit
                elif val == (lit > 0):
                    satisfied = True
                    break
            if satisfied:
                continue
            if n_unassigned == 0:
                return None
            if n_unassigned == 1:
                cells[abs(unassigned) - 1] = unassigned > 0  # type: ignore[arg-type]
                changed = True
            else:
                open_clauses.append(clause)
        if not changed:
            break
    if not open_clauses:
        return cells
    var = min(abs(lit) for clause in open_clauses for lit in clause if cells[abs(lit) - 1] is None)
    for value in (False, True):
        trial = list(cells)
        trial[var - 1] = value
        result = _dpll(clauses, trial)
        if result is not None:
            return result
    return None


_NAME = r"[A-Za-z_][A-Za-z0-9_.\-]*"
_FEATURE_RE = re.compile(rf"^feature\s+({_NAME})(?:\s+mandatory\s+(\S+))?\s*$")
_LIT_RE = re.compile(rf"^(!?)\s*({_NAME})$")


def parse_model(text: str) -> FeatureModel:
    """Parse the line-oriented model format.

    ``feature NAME [mandatory true|false]`` lines declare variables;
    ``constraint LIT (| LIT)*`` lines add clauses, where LIT is NAME or !NAME.
    ``#`` starts a comment.
    """
    variables: list[FeatureVariable] = []
    seen: set[str] = set()
    clauses: list[list[Literal]] = []
    unit_lines: dict[Literal, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        stripped = line.lstrip()
        if not stripped:
            continue
        col0 = len(line) - len(stripped) + 1
        keyword = stripped.split(None, 1)[0]
        if keyword == "feature":
            m = _FEATURE_RE.match(stripped)
            if not m:
                raise ModelError("malformed feature declaration", lineno, col0)
            name, mval = m.group(1), m.group(2)
            if name in seen:
                raise ModelError(f"duplicate variable {name!r}", lineno, col0 + stripped.index(name, 7))
            seen.add(name)
            if mval is None:
                variables.append(FeatureVariable(name))
            elif mval in ("true", "false"):
                variables.append(FeatureVariable(name, True, mval == "true"))
            else:
                raise ModelError(f"mandatory value must be true or false, got {mval!r}", lineno,
                                 col0 + stripped.rindex(mval))
        elif keyword == "constraint":
            body = stripped[len("constraint"):]
            offset = col0 + len("constraint")
            if not body.strip():
                raise ModelError("empty constraint", lineno, offset)
            clause: list[Literal] = []
            pos = 0
            for part in body.split("|"):
                col = offset + pos + (len(part) - len(part.lstrip()))
                pos += len(part) + 1
                m = _LIT_RE.match(part.strip())
                if not m:
                    raise ModelError(f"malformed literal {part.strip()!r}", lineno, col)
                name = m.group(2)
                if name not in seen:
                    raise ModelError(f"literal on undeclared variable {name!r}", lineno, col)
                clause.append((name, m.group(1) != "!"))
            if len(clause) == 1:
                unit_lines.setdefault(clause[0], lineno)
            clauses.append(clause)
        else:
            raise ModelError(f"unexpected keyword {keyword!r}", lineno, col0)
    for v in variables:
        if v.mandatory and (v.name, not v.mandatory_value) in unit_lines:
            raise ModelError(f"mandatory variable {v.name!r} contradicted by a unit clause",
                             unit_lines[(v.name, not v.mandatory_value)])
    return FeatureModel(variables, clauses)


def load_model(path) -> FeatureModel:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())
