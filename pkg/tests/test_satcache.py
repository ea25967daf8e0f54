from __future__ import annotations

import random
import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evosplat import satcache
from evosplat.errors import TrieCorruptError
from evosplat.explorer import splat
from evosplat.model import parse_model
from evosplat.satcache import CacheStats, SatTrie, cached_is_sat, canonicalize

from gen import random_model

XYZ = parse_model("feature x\nfeature y\nfeature z\nconstraint !x | !y\n")


class TestCanonical:
    def test_declaration_order(self):
        assert canonicalize({"z": True, "x": False}, XYZ) == (("x", False), ("z", True))

    def test_reordered_keys_collide(self):
        trie = SatTrie(XYZ.digest())
        assert cached_is_sat(trie, XYZ, {"y": True, "x": True}) is False
        assert cached_is_sat(trie, XYZ, {"x": True, "y": True}) is False
        assert trie.stats.hits == 1 and trie.stats.misses == 1
        assert len(trie) == 1


class TestMemo:
    def test_second_lookup_is_a_hit(self):
        trie = SatTrie()
        stats = CacheStats()
        for _ in range(3):
            assert cached_is_sat(trie, XYZ, {"x": True}, stats) is True
        assert (stats.misses, stats.hits, stats.lookups, stats.solver_calls) == (1, 2, 3, 1)
        assert stats.sat_count == 1 and stats.unsat_count == 0

    def test_empty_key(self):
        trie = SatTrie()
        assert cached_is_sat(trie, XYZ, {}) is True
        assert trie.contains(())

    def test_prefix_sharing(self):
        trie = SatTrie()
        trie.put((("x", True),), True)
        trie.put((("x", True), ("y", True)), False)
        assert trie.get((("x", True),)) is True
        assert trie.get((("x", True), ("y", True))) is False
        assert trie.get((("x", False),)) is None
        assert len(trie.root.children) == 1

    def test_stats_merge_and_dict(self):
        a, b = CacheStats(1, 2, 1, 1), CacheStats(3, 0, 0, 0)
        a.merge(b)
        d = a.to_dict()
        assert d["hits"] + d["misses"] == d["lookups"] == 6

    def test_concurrent_writers(self):
        fm = parse_model("".join(f"feature V{i}\n" for i in range(8)))
        trie = SatTrie(fm.digest())
        rng = random.Random(1)
        keys = [{f"V{i}": rng.random() < 0.5 for i in rng.sample(range(8), 3)} for _ in range(400)]

        def work():
            for k in keys:
                cached_is_sat(trie, fm, k)

        threads = [threading.Thread(target=work) for _ in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert trie.stats.lookups == 1600
        assert all(ans == fm.is_satisfiable(dict(k)) for k, ans in trie.items())


class TestPersistence:
    def _filled(self):
        trie = SatTrie(XYZ.digest())
        for a in ({"x": True}, {"x": True, "y": True}, {"z": False}, {"y": True, "z": True}):
            cached_is_sat(trie, XYZ, a)
        return trie

    def test_round_trip(self, tmp_path):
        trie = self._filled()
        p = tmp_path / "t.bin"
        satcache.persist(trie, p, XYZ)
        back = satcache.load(p, XYZ)
        assert dict(back.items()) == dict(trie.items())
        assert back.stats.lookups == 0

    def test_bytes_are_canonical(self):
        a = self._filled()
        b = SatTrie(XYZ.digest())
        for k, v in reversed(list(a.items())):
            b.put(k, v)
        assert satcache.dumps(a, XYZ) == satcache.dumps(b, XYZ)

    def test_missing_file_is_empty(self, tmp_path):
        assert len(satcache.load(tmp_path / "nope.bin", XYZ)) == 0

    def test_corrupt_checksum(self, tmp_path):
        p = tmp_path / "t.bin"
        satcache.persist(self._filled(), p, XYZ)
        data = bytearray(p.read_bytes())
        data[-1] ^= 1
        p.write_bytes(bytes(data))
        with pytest.raises(TrieCorruptError, match="checksum"):
            satcache.load(p, XYZ)
        assert len(satcache.load(p, XYZ, fallback_empty=True)) == 0

    @pytest.mark.parametrize("data", [b"", b"garbage" * 20, b"EVOTRIE\0" + b"\0" * 10])
    def test_not_a_trie(self, data):
        with pytest.raises(TrieCorruptError):
            satcache.loads(data, XYZ)

    def test_stale_model_digest_gives_empty_trie(self, tmp_path):
        p = tmp_path / "t.bin"
        satcache.persist(self._filled(), p, XYZ)
        other = parse_model("feature x\nfeature y\nfeature z\n")
        assert len(satcache.load(p, other)) == 0
        assert len(satcache.load(p, XYZ)) == 4

    def test_replay_makes_no_solver_calls(self, tmp_path, gpl):
        fm, program, (test,) = gpl
        first = splat(fm, program, test)
        assert first.stats.solver_calls > 0
        p = tmp_path / "t.bin"
        trie = SatTrie(fm.digest())
        splat(fm, program, test, trie=trie)
        satcache.persist(trie, p, fm)
        again = splat(fm, program, test, trie=satcache.load(p, fm))
        assert again.stats.solver_calls == 0
        assert again.verdicts() == first.verdicts()


class TestDifferential:
    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10**6))
    def test_cached_equals_direct(self, seed):
        rng = random.Random(seed)
        fm = random_model(rng, max_vars=8, max_clauses=8)
        trie = SatTrie(fm.digest())
        for _ in range(50):
            names = rng.sample(fm.names, rng.randint(0, len(fm)))
            a = {n: rng.random() < 0.5 for n in names}
            assert cached_is_sat(trie, fm, a) == fm.is_satisfiable(a)
        for key, answer in trie.items():
            assert answer == fm.is_satisfiable(dict(key))
            assert list(key) == sorted(key, key=lambda kv: fm.order(kv[0]))
