"""Memoized satisfiability answers keyed by canonical partial assignments.

Keys are conjunctions of feature literals; sorting them by the model's
declaration order makes ``{y=1, x=1}`` and ``{x=1, y=1}`` the same key, and
storing them in a prefix tree lets keys that share a prefix share storage.
"""

from __future__ import annotations

import hashlib
import io
import os
import struct
import threading
from collections.abc import Iterator, Mapping
from dataclasses import dataclass

from .errors import TrieCorruptError
from .model import FeatureModel

CanonicalKey = tuple[tuple[str, bool], ...]

MAGIC = b"EVOTRIE\0"
FORMAT_VERSION = 1
_HEADER = struct.Struct(">8sH32sI32s")  # magic, version, model digest, record count, body checksum


def canonicalize(a: Mapping[str, bool], fm: FeatureModel) -> CanonicalKey:
    """Sort an assignment's bindings by the model's declaration order."""
    return tuple(sorted(((n, bool(v)) for n, v in a.items()), key=lambda kv: fm.order(kv[0])))


@dataclass
class CacheStats:
    hits: int = 0
    misses: int = 0
    sat_count: int = 0
    unsat_count: int = 0

    @property
    def lookups(self) -> int:
        return self.hits + self.misses

    @property
    def solver_calls(self) -> int:
        return self.misses

    @property
    def hit_ratio(self) -> float:
        return self.hits / self.lookups if self.lookups else 0.0

    def record(self, hit: bool, answer: bool) -> None:
        if hit:
            self.hits += 1
        else:
            self.misses += 1
            if answer:
                self.sat_count += 1
            else:
                self.unsat_count += 1

    def merge(self, other: CacheStats) -> None:
        self.hits += other.hits
        self.misses += other.misses
        self.sat_count += other.sat_count
        self.unsat_count += other.unsat_count

    def to_dict(self) -> dict:
        return {
            "hits": self.hits,
            "misses": self.misses,
            "lookups": self.lookups,
            "solver_calls": self.solver_calls,
            "sat": self.sat_count,
            "unsat": self.unsat_count,
            "hit_ratio": round(self.hit_ratio, 6),
        }


class _Node:
    __slots__ = ("children", "answer")

    def __init__(self) -> None:
        self.children: dict[tuple[str, bool], _Node] = {}
        self.answer: bool | None = None


class SatTrie:
    """Prefix tree from canonical keys to satisfiability answers.

    Lookups take no lock. Inserts are serialized by a single writer lock and
    publish the answer only after the whole path exists, so a concurrent
    reader either misses the key or sees the final answer.
    """

    def __init__(self, model_digest: str | None = None):
        self.root = _Node()
        self.model_digest = model_digest
        self.stats = CacheStats()
        self._size = 0
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return self._size

    def _find(self, key: CanonicalKey) -> _Node | None:
        node = self.root
        for label in key:
            node = node.children.get(label)
            if node is None:
                return None
        return node

    def contains(self, key: CanonicalKey) -> bool:
        node = self._find(key)
        return node is not None and node.answer is not None

    def get(self, key: CanonicalKey) -> bool | None:
        node = self._find(key)
        return None if node is None else node.answer

    def put(self, key: CanonicalKey, answer: bool) -> None:
        with self._lock:
            node = self.root
            for label in key:
                child = node.children.get(label)
                if child is None:
                    child = _Node()
                    node.children[label] = child
                node = child
            if node.answer is None:
                self._size += 1
            node.answer = bool(answer)

    def items(self) -> Iterator[tuple[CanonicalKey, bool]]:
        """Every stored (key, answer) pair, depth first in label order."""
        stack: list[tuple[_Node, CanonicalKey]] = [(self.root, ())]
        while stack:
            node, key = stack.pop()
            if node.answer is not None:
                yield key, node.answer
            for label in sorted(node.children, reverse=True):
                stack.append((node.children[label], key + (label,)))

    def reset_stats(self) -> None:
        self.stats = CacheStats()


def cached_is_sat(trie: SatTrie, fm: FeatureModel, a: Mapping[str, bool],
                  stats: CacheStats | None = None) -> bool:
    """Answer from the trie when possible, otherwise ask the solver and store.

    ``stats`` is an optional per-caller counter updated alongside the trie's
    own counters.
    """
    key = canonicalize(a, fm)
    answer = trie.get(key)
    hit = answer is not None
    if not hit:
        answer = fm.is_satisfiable(dict(key))
        trie.put(key, answer)
    with trie._lock:
        trie.stats.record(hit, answer)
    if stats is not None:
        stats.record(hit, answer)
    return answer


# -- persistence ---------------------------------------------------------------


def _encode_records(trie: SatTrie, fm: FeatureModel | None) -> tuple[bytes, int]:
    records = list(trie.items())
    if fm is not None:
        records.sort(key=lambda kv: [(fm.order(n), v) for n, v in kv[0]])
    else:
        records.sort()
    buf = io.BytesIO()
    for key, answer in records:
        buf.write(struct.pack(">I", len(key)))
        for name, value in key:
            raw = name.encode("utf-8")
            buf.write(struct.pack(">H", len(raw)))
            buf.write(raw)
            buf.write(b"\x01" if value else b"\x00")
        buf.write(b"\x01" if answer else b"\x00")
    return buf.getvalue(), len(records)


def dumps(trie: SatTrie, fm: FeatureModel | None = None) -> bytes:
    """Serialize to bytes. Identical answer sets give identical bytes."""
    body, count = _encode_records(trie, fm)
    digest = bytes.fromhex(fm.digest() if fm is not None else (trie.model_digest or "0" * 64))
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, digest, count, hashlib.sha256(body).digest())
    return header + body


def loads(data: bytes, fm: FeatureModel | None = None) -> SatTrie:
    """Inverse of dumps. A model-digest mismatch yields an empty trie."""
    if len(data) < _HEADER.size:
        raise TrieCorruptError("truncated trie header")
    magic, version, digest, count, checksum = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise TrieCorruptError("not a trie file")
    if version != FORMAT_VERSION:
        raise TrieCorruptError(f"unsupported trie format version {version}")
    body = data[_HEADER.size:]
    if hashlib.sha256(body).digest() != checksum:
        raise TrieCorruptError("trie checksum mismatch")
    model_digest = digest.hex()
    if fm is not None and fm.digest() != model_digest:
        return SatTrie(fm.digest())
    trie = SatTrie(model_digest)
    pos = 0
    try:
        for _ in range(count):
            (n,) = struct.unpack_from(">I", body, pos)
            pos += 4
            key = []
            for _ in range(n):
                (ln,) = struct.unpack_from(">H", body, pos)
                pos += 2
                name = body[pos:pos + ln].decode("utf-8")
                pos += ln
                key.append((name, body[pos] == 1))
                pos += 1
            trie.put(tuple(key), body[pos] == 1)
            pos += 1
    except (struct.error, IndexError, UnicodeDecodeError) as exc:
        raise TrieCorruptError(f"malformed trie record: {exc}") from exc
    if pos != len(body):
        raise TrieCorruptError("trailing bytes after trie records")
    return trie


def persist(trie: SatTrie, path: str | os.PathLike, fm: FeatureModel | None = None) -> None:
    data = dumps(trie, fm)
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def load(path: str | os.PathLike, fm: FeatureModel | None = None, *, fallback_empty: bool = False) -> SatTrie:
    """Load a persisted trie; a missing file gives an empty trie.

    Corruption raises TrieCorruptError unless ``fallback_empty`` is set.
    Stats always start at zero.
    """
    empty = SatTrie(fm.digest() if fm is not None else None)
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except FileNotFoundError:
        return empty
    try:
        return loads(data, fm)
    except TrieCorruptError:
        if fallback_empty:
            return empty
        raise
