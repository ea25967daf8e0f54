"""
Reusing satisfiability answers across runs
==========================================

Every pruning decision asks whether a partial assignment can still be
extended to a legal configuration. The answers live in a prefix trie that
can be saved to disk; replaying an unchanged exploration then needs no
solver at all.
"""

import tempfile
from pathlib import Path

from evosplat import fixtures, satcache
from evosplat.explorer import splat
from evosplat.satcache import SatTrie, cached_is_sat

fm, program, (test,) = fixtures.gpl(1)

# %% Order does not matter: both spellings hit the same trie node
trie = SatTrie(fm.digest())
cached_is_sat(trie, fm, {"SEARCH": False, "WEIGHTED": False})
cached_is_sat(trie, fm, {"WEIGHTED": False, "SEARCH": False})
print(trie.stats)

# %% First exploration fills the trie
trie = SatTrie(fm.digest())
first = splat(fm, program, test, trie=trie)
print("first run:", first.stats.to_dict())

path = Path(tempfile.mkdtemp()) / "trie.bin"
satcache.persist(trie, path, fm)
print(f"saved {len(trie)} answers, {path.stat().st_size} bytes")

# %% Replay from disk
replay = splat(fm, program, test, trie=satcache.load(path, fm))
print("replay:", replay.stats.to_dict())
assert replay.stats.solver_calls == 0
