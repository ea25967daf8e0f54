"""A tiny deterministic language for configurable subject programs.

A suite file declares methods and tests::

    method addEdgeWt {
      if WEIGHTED { call addAnEdge } else { call addVertex }
      assert WEIGHTED | SEARCH
    }
    test addEdgeWt entry addEdgeWt expect pass

Statements are ``if FEATURE { .. } [else { .. }]``, ``call NAME``,
``assert EXPR``, ``fail "message"`` and ``pass``. Expressions combine
feature names with ``!``, ``&``, ``|`` and parentheses. There are no loops
and no recursion, so every execution terminates.

Executions report to a *monitor*: every textual feature read asks the
monitor for a value, and every method entry is announced. The interpreter
keeps no state between runs.
"""

from __future__ import annotations

import hashlib
import re
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from typing import Protocol, Union

from .errors import EvoSplatError, SuiteError
from .model import FeatureModel

# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Not:
    operand: Expr


@dataclass(frozen=True)
class And:
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Or:
    left: Expr
    right: Expr


Expr = Union[Var, Not, And, Or]


@dataclass(frozen=True)
class Branch:
    feature: str
    then: tuple[Stmt, ...]
    orelse: tuple[Stmt, ...] = ()


@dataclass(frozen=True)
class Call:
    method: str


@dataclass(frozen=True)
class Assert:
    expr: Expr


@dataclass(frozen=True)
class Fail:
    message: str


@dataclass(frozen=True)
class Pass:
    pass


Stmt = Union[Branch, Call, Assert, Fail, Pass]


@dataclass(frozen=True)
class TestCase:
    name: str
    entry: str
    expected: str = "pass"

    __test__ = False  # keep pytest from collecting this class


@dataclass(frozen=True)
class Verdict:
    outcome: str
    message: str = ""

    def __post_init__(self) -> None:
        if self.outcome not in ("pass", "fail"):
            raise ValueError(f"bad outcome {self.outcome!r}")
        if (self.outcome == "fail") != bool(self.message):
            raise ValueError("message must be nonempty exactly when the outcome is fail")

    @property
    def passed(self) -> bool:
        return self.outcome == "pass"

    def to_dict(self) -> dict:
        return {"outcome": self.outcome, "message": self.message}

    @classmethod
    def from_dict(cls, d: Mapping) -> Verdict:
        return cls(d["outcome"], d.get("message", ""))


PASS = Verdict("pass")


@dataclass(frozen=True)
class Program:
    methods: Mapping[str, tuple[Stmt, ...]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "methods", dict(self.methods))

    def __hash__(self) -> int:
        return hash(tuple(sorted(self.methods.items(), key=lambda kv: kv[0])))

    def features(self) -> set[str]:
        found: set[str] = set()
        for body in self.methods.values():
            _collect_features(body, found)
        return found

    def callees(self, method: str) -> list[str]:
        out: list[str] = []
        _collect_calls(self.methods[method], out)
        return out

    def reachable(self, entry: str) -> set[str]:
        seen: set[str] = set()
        todo = [entry]
        while todo:
            m = todo.pop()
            if m in seen:
                continue
            seen.add(m)
            todo.extend(self.callees(m))
        return seen


@dataclass(frozen=True)
class ChangeSet:
    """Names of methods whose bodies differ between two versions."""

    changed: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "changed", frozenset(self.changed))

    def __contains__(self, name: object) -> bool:
        return name in self.changed

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self.changed))

    def __len__(self) -> int:
        return len(self.changed)

    def __bool__(self) -> bool:
        return bool(self.changed)


def _collect_features(stmts: Iterable[Stmt], acc: set[str]) -> None:
    for s in stmts:
        if isinstance(s, Branch):
            acc.add(s.feature)
            _collect_features(s.then, acc)
            _collect_features(s.orelse, acc)
        elif isinstance(s, Assert):
            _expr_features(s.expr, acc)


def _expr_features(e: Expr, acc: set[str]) -> None:
    if isinstance(e, Var):
        acc.add(e.name)
    elif isinstance(e, Not):
        _expr_features(e.operand, acc)
    else:
        _expr_features(e.left, acc)
        _expr_features(e.right, acc)


def _collect_calls(stmts: Iterable[Stmt], acc: list[str]) -> None:
    for s in stmts:
        if isinstance(s, Call):
            acc.append(s.method)
        elif isinstance(s, Branch):
            _collect_calls(s.then, acc)
            _collect_calls(s.orelse, acc)


# -- lexer / parser ----------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<name>[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<punct>[{}()!&|])
    """,
    re.VERBOSE,
)

KEYWORDS = {"method", "test", "entry", "expect", "if", "else", "call", "assert", "fail", "pass"}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise SuiteError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "comment"):
            toks.append(_Tok(kind, chunk, line, pos - line_start + 1))  # type: ignore[arg-type]
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, msg: str, tok: _Tok | None = None) -> SuiteError:
        tok = tok or self.peek()
        return SuiteError(msg, tok.line, tok.col)

    def expect(self, text: str) -> _Tok:
        tok = self.next()
        if tok.text != text or tok.kind == "string":
            raise self.error(f"expected {text!r}, found {tok.text or 'end of input'!r}", tok)
        return tok

    def name(self, what: str, keywords_ok: bool = False) -> _Tok:
        tok = self.next()
        if tok.kind != "name" or (tok.text in KEYWORDS and not keywords_ok):
            raise self.error(f"expected {what}, found {tok.text or 'end of input'!r}", tok)
        return tok

    def suite(self):
        methods: dict[str, tuple[Stmt, ...]] = {}
        tests: list[TestCase] = []
        locs: dict[str, _Tok] = {}
        while self.peek().kind != "eof":
            tok = self.next()
            if tok.text == "method":
                name = self.name("method name", keywords_ok=True)
                if name.text in methods:
                    raise self.error(f"duplicate method {name.text!r}", name)
                self.expect("{")
                methods[name.text] = self.block()
                locs[name.text] = name
            elif tok.text == "test":
                name = self.name("test name", keywords_ok=True)
                if any(t.name == name.text for t in tests):
                    raise self.error(f"duplicate test {name.text!r}", name)
                self.expect("entry")
                entry = self.name("entry method", keywords_ok=True)
                self.expect("expect")
                exp = self.next()
                if exp.text not in ("pass", "fail"):
                    raise self.error("expected 'pass' or 'fail'", exp)
                tests.append(TestCase(name.text, entry.text, exp.text))
                locs["test:" + name.text] = entry
            else:
                raise self.error(f"expected 'method' or 'test', found {tok.text!r}", tok)
        return methods, tests, locs

    def block(self) -> tuple[Stmt, ...]:
        body: list[Stmt] = []
        while self.peek().text != "}":
            if self.peek().kind == "eof":
                raise self.error("unterminated block")
            body.append(self.stmt())
        self.next()
        return tuple(body)

    def stmt(self) -> Stmt:
        tok = self.next()
        if tok.kind == "string":
            raise self.error("unexpected string", tok)
        if tok.text == "if":
            feat = self.name("feature name")
            self.expect("{")
            then = self.block()
            orelse: tuple[Stmt, ...] = ()
            if self.peek().text == "else" and self.peek().kind == "name":
                self.next()
                self.expect("{")
                orelse = self.block()
            return Branch(feat.text, then, orelse)
        if tok.text == "call":
            return Call(self.name("method name", keywords_ok=True).text)
        if tok.text == "assert":
            return Assert(self.expr())
        if tok.text == "fail":
            s = self.next()
            if s.kind != "string":
                raise self.error("fail needs a string message", s)
            msg = bytes(s.text[1:-1], "utf-8").decode("unicode_escape")
            if not msg:
                raise self.error("fail message must be nonempty", s)
            return Fail(msg)
        if tok.text == "pass":
            return Pass()
        raise self.error(f"unknown statement {tok.text!r}", tok)

    def expr(self) -> Expr:
        left = self.conj()
        while self.peek().text == "|" and self.peek().kind == "punct":
            self.next()
            left = Or(left, self.conj())
        return left

    def conj(self) -> Expr:
        left = self.unary()
        while self.peek().text == "&" and self.peek().kind == "punct":
            self.next()
            left = And(left, self.unary())
        return left

    def unary(self) -> Expr:
        tok = self.peek()
        if tok.text == "!" and tok.kind == "punct":
            self.next()
            return Not(self.unary())
        if tok.text == "(" and tok.kind == "punct":
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        return Var(self.name("feature name").text)


def parse_suite(text: str, fm: FeatureModel | None = None) -> tuple[Program, list[TestCase]]:
    """Parse a suite file into a validated Program and its tests.

    When ``fm`` is given, every feature referenced by the program must be
    declared in it.
    """
    methods, tests, locs = _Parser(text).suite()
    program = Program(methods)
    for t in tests:
        if t.entry not in methods:
            tok = locs["test:" + t.name]
            raise SuiteError(f"test {t.name!r} has undeclared entry method {t.entry!r}", tok.line, tok.col)
    validate_program(program, fm, locs)
    return program, tests


def validate_program(program: Program, fm: FeatureModel | None = None, _locs=None) -> None:
    """Check call targets, acyclicity and (optionally) declared features."""
    locs = _locs or {}

    def where(m: str):
        tok = locs.get(m)
        return (tok.line, tok.col) if tok else (None, None)

    for m in program.methods:
        for callee in program.callees(m):
            if callee not in program.methods:
                raise SuiteError(f"method {m!r} calls undeclared method {callee!r}", *where(m))
    # cycle detection, iterative DFS with colors
    color = dict.fromkeys(program.methods, 0)
    for root in program.methods:
        if color[root]:
            continue
        stack = [(root, iter(program.callees(root)))]
        color[root] = 1
        while stack:
            node, it = stack[-1]
            for nxt in it:
                if color[nxt] == 1:
                    raise SuiteError(f"call-graph cycle: {node!r} calls {nxt!r}", *where(node))
                if color[nxt] == 0:
                    color[nxt] = 1
                    stack.append((nxt, iter(program.callees(nxt))))
                    break
            else:
                color[node] = 2
                stack.pop()
    if fm is not None:
        for f in sorted(program.features()):
            if f not in fm:
                raise SuiteError(f"program reads undeclared feature variable {f!r}")


def load_suite(path, fm: FeatureModel | None = None) -> tuple[Program, list[TestCase]]:
    with open(path, encoding="utf-8") as fh:
        return parse_suite(fh.read(), fm)


# -- rendering and digests -----------------------------------------------------


def render_expr(e: Expr) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Not):
        inner = render_expr(e.operand)
        return "!" + (inner if isinstance(e.operand, (Var, Not)) else f"({inner})")
    op = " & " if isinstance(e, And) else " | "
    parts = []
    for side in (e.left, e.right):
        text = render_expr(side)
        if isinstance(side, (And, Or)) and type(side) is not type(e):
            text = f"({text})"
        elif isinstance(side, type(e)) and side is e.right:
            text = f"({text})"
        parts.append(text)
    return op.join(parts)


def _render_block(stmts: Iterable[Stmt], indent: int) -> list[str]:
    pad = "  " * indent
    out: list[str] = []
    for s in stmts:
        if isinstance(s, Branch):
            out.append(f"{pad}if {s.feature} {{")
            out.extend(_render_block(s.then, indent + 1))
            if s.orelse:
                out.append(f"{pad}}} else {{")
                out.extend(_render_block(s.orelse, indent + 1))
            out.append(f"{pad}}}")
        elif isinstance(s, Call):
            out.append(f"{pad}call {s.method}")
        elif isinstance(s, Assert):
            out.append(f"{pad}assert {render_expr(s.expr)}")
        elif isinstance(s, Fail):
            escaped = s.message.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
            out.append(f'{pad}fail "{escaped}"')
        else:
            out.append(f"{pad}pass")
    return out


def render_suite(program: Program, tests: Iterable[TestCase] = ()) -> str:
    """Canonical suite text; parse_suite(render_suite(p, ts)) == (p, ts)."""
    lines: list[str] = []
    for name, body in program.methods.items():
        lines.append(f"method {name} {{")
        lines.extend(_render_block(body, 1))
        lines.append("}")
    for t in tests:
        lines.append(f"test {t.name} entry {t.entry} expect {t.expected}")
    return "\n".join(lines) + "\n"


def method_digest(program: Program) -> dict[str, str]:
    """Stable content hash per method, insensitive to layout and comments."""
    return {
        name: hashlib.sha256("\n".join(_render_block(body, 0)).encode()).hexdigest()
        for name, body in program.methods.items()
    }


def diff_digests(old: Mapping[str, str], new: Mapping[str, str]) -> ChangeSet:
    names = set(old) | set(new)
    return ChangeSet(frozenset(n for n in names if old.get(n) != new.get(n)))


def diff_methods(old: Program, new: Program) -> ChangeSet:
    """Methods modified, added or removed between two program versions."""
    return diff_digests(method_digest(old), method_digest(new))


# -- interpreter ---------------------------------------------------------------


class Monitor(Protocol):
    def read_feature(self, name: str) -> bool: ...

    def enter_method(self, name: str) -> None: ...


class InterpreterError(EvoSplatError):
    """The monitor broke the execution contract."""


class _Failure(Exception):
    pass


def execute(program: Program, test: TestCase, monitor: Monitor) -> Verdict:
    """Run ``test`` against ``program``, consulting ``monitor`` for features.

    The first failing ``assert`` or ``fail`` ends the run with a fail verdict.
    ``&`` and ``|`` short-circuit, so only the reads actually performed are
    reported.
    """
    def read(name: str) -> bool:
        value = monitor.read_feature(name)
        if not isinstance(value, bool):
            raise InterpreterError(f"monitor returned non-boolean {value!r} for {name!r}")
        return value

    def evaluate(e: Expr) -> bool:
        if isinstance(e, Var):
            return read(e.name)
        if isinstance(e, Not):
            return not evaluate(e.operand)
        if isinstance(e, And):
            return evaluate(e.left) and evaluate(e.right)
        return evaluate(e.left) or evaluate(e.right)

    def run_block(stmts: tuple[Stmt, ...]) -> None:
        for s in stmts:
            if isinstance(s, Branch):
                run_block(s.then if read(s.feature) else s.orelse)
            elif isinstance(s, Call):
                invoke(s.method)
            elif isinstance(s, Assert):
                if not evaluate(s.expr):
                    raise _Failure(f"assertion failed: {render_expr(s.expr)}")
            elif isinstance(s, Fail):
                raise _Failure(s.message)

    def invoke(name: str) -> None:
        monitor.enter_method(name)
        run_block(program.methods[name])

    if test.entry not in program.methods:
        raise InterpreterError(f"entry method {test.entry!r} is not declared")
    try:
        invoke(test.entry)
    except _Failure as exc:
        return Verdict("fail", str(exc))
    return PASS


class FixedMonitor:
    """Answers every read from a fixed configuration and records the trace."""

    def __init__(self, config: Mapping[str, bool]):
        self.config = config
        self.trace: list[tuple[str, str]] = []

    def read_feature(self, name: str) -> bool:
        if name not in self.config:
            raise InterpreterError(f"configuration has no value for feature {name!r}")
        self.trace.append(("feature", name))
        return bool(self.config[name])

    def enter_method(self, name: str) -> None:
        self.trace.append(("method", name))

    def first_reads(self) -> list[str]:
        seen: list[str] = []
        for kind, name in self.trace:
            if kind == "feature" and name not in seen:
                seen.append(name)
        return seen

    def methods(self) -> set[str]:
        return {name for kind, name in self.trace if kind == "method"}


def run_under(program: Program, test: TestCase, config: Mapping[str, bool]) -> tuple[Verdict, FixedMonitor]:
    """Plain execution under one complete configuration."""
    mon = FixedMonitor(config)
    return execute(program, test, mon), mon
