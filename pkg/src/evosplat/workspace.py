"""On-disk state carried between program versions.

Layout::

    <root>/model.digest        digest of the feature model that produced the data
    <root>/digests.json        per-method digests of the last explored program
    <root>/runs/<test>.json    run records and pruned paths of each test
    <root>/trie.bin            persisted satisfiability trie
    <root>/coverage.json       test -> sorted list of covered methods
    <root>/reports/<id>.json   session reports

All JSON is written with sorted keys so workspaces diff cleanly.
"""

from __future__ import annotations

import json
import os
import re
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path

from . import satcache
from .dsl import Program, method_digest
from .errors import ModelChangedError, WorkspaceError
from .explorer import ExplorationResult, PrunedPath, RunRecord
from .model import FeatureModel
from .satcache import SatTrie


def dump_json(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def _write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


_SAFE = re.compile(r"[^A-Za-z0-9_.\-]")


@dataclass
class TestCache:
    """Persisted exploration of one test."""

    test: str
    runs: list[RunRecord] = field(default_factory=list)
    pruned: list[PrunedPath] = field(default_factory=list)
    bounded: bool = False

    __test__ = False

    @classmethod
    def from_result(cls, result: ExplorationResult) -> TestCache:
        return cls(result.test, list(result.runs), list(result.pruned), result.bounded)

    @property
    def paths(self) -> int:
        return len(self.runs) + len(self.pruned)

    def methods(self) -> set[str]:
        return {m for r in self.runs for m in r.methods()}

    def to_dict(self) -> dict:
        return {
            "test": self.test,
            "bounded": self.bounded,
            "runs": [r.to_dict() for r in self.runs],
            "pruned": [p.to_dict() for p in self.pruned],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> TestCache:
        return cls(
            d["test"],
            [RunRecord.from_dict(r) for r in d.get("runs", [])],
            [PrunedPath.from_dict(p) for p in d.get("pruned", [])],
            bool(d.get("bounded", False)),
        )


class Workspace:
    def __init__(self, root: str | os.PathLike, fm: FeatureModel | None = None):
        self.root = Path(root)
        self.fm = fm
        self._trie: SatTrie | None = None

    # paths
    @property
    def runs_dir(self) -> Path:
        return self.root / "runs"

    @property
    def reports_dir(self) -> Path:
        return self.root / "reports"

    @property
    def trie_path(self) -> Path:
        return self.root / "trie.bin"

    def ensure(self) -> Workspace:
        self.runs_dir.mkdir(parents=True, exist_ok=True)
        self.reports_dir.mkdir(parents=True, exist_ok=True)
        return self

    def exists(self) -> bool:
        return (self.root / "model.digest").is_file()

    # model digest
    def model_digest(self) -> str | None:
        p = self.root / "model.digest"
        return p.read_text(encoding="utf-8").strip() if p.is_file() else None

    def set_model(self, fm: FeatureModel) -> None:
        self.ensure()
        self.fm = fm
        _write_text(self.root / "model.digest", fm.digest() + "\n")

    def check_model(self, fm: FeatureModel) -> None:
        stored = self.model_digest()
        if stored is not None and stored != fm.digest():
            raise ModelChangedError("workspace was built for a different feature model; re-run explore")

    # trie
    @property
    def trie(self) -> SatTrie:
        if self._trie is None:
            self._trie = satcache.load(self.trie_path, self.fm, fallback_empty=True)
        return self._trie

    def save_trie(self) -> None:
        if self._trie is not None:
            self.ensure()
            satcache.persist(self._trie, self.trie_path, self.fm)

    # run caches
    def _run_path(self, test: str) -> Path:
        return self.runs_dir / (_SAFE.sub("_", test) + ".json")

    def load_runs(self, test: str) -> TestCache | None:
        p = self._run_path(test)
        if not p.is_file():
            return None
        try:
            return TestCache.from_dict(json.loads(p.read_text(encoding="utf-8")))
        except (ValueError, KeyError) as exc:
            raise WorkspaceError(f"unreadable run cache {p}: {exc}") from exc

    def save_runs(self, cache: TestCache) -> None:
        self.ensure()
        _write_text(self._run_path(cache.test), dump_json(cache.to_dict()))

    def tests(self) -> list[str]:
        if not self.runs_dir.is_dir():
            return []
        names = []
        for p in sorted(self.runs_dir.glob("*.json")):
            names.append(json.loads(p.read_text(encoding="utf-8"))["test"])
        return names

    # coverage and digests
    def coverage(self) -> dict[str, set[str]]:
        p = self.root / "coverage.json"
        if not p.is_file():
            return {}
        return {t: set(ms) for t, ms in json.loads(p.read_text(encoding="utf-8")).items()}

    def save_coverage(self, coverage: Mapping[str, set[str]]) -> None:
        self.ensure()
        _write_text(self.root / "coverage.json", dump_json({t: sorted(ms) for t, ms in coverage.items()}))

    def digests(self) -> dict[str, str] | None:
        p = self.root / "digests.json"
        if not p.is_file():
            return None
        return json.loads(p.read_text(encoding="utf-8"))

    def save_digests(self, program: Program) -> None:
        self.ensure()
        _write_text(self.root / "digests.json", dump_json(method_digest(program)))

    # reports
    def next_session(self, kind: str) -> str:
        self.ensure()
        n = len(list(self.reports_dir.glob("*.json"))) + 1
        return f"{n:04d}-{kind}"

    def write_report(self, session: str, report: Mapping) -> Path:
        self.ensure()
        p = self.reports_dir / f"{session}.json"
        _write_text(p, dump_json(report))
        return p

    def reports(self) -> list[Path]:
        return sorted(self.reports_dir.glob("*.json")) if self.reports_dir.is_dir() else []

    # bulk update after a full exploration
    def record_exploration(self, fm: FeatureModel, program: Program,
                           results: Mapping[str, ExplorationResult]) -> None:
        from .rts import build_coverage

        self.set_model(fm)
        for result in results.values():
            self.save_runs(TestCache.from_result(result))
        cov = self.coverage()
        cov.update(build_coverage(results).by_test)
        self.save_coverage(cov)
        self.save_digests(program)
        self.save_trie()
