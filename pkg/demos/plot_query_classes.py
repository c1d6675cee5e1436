"""
Answering queries from the cache
================================

Issue a few related queries and watch how each one is classified and how
many base tuples it needs to read.
"""

from skycache import GenSpec, SkylineCache, generate

rel = generate(GenSpec(20_000, 6, seed=0))
cache = SkylineCache(rel, "index", cache_fraction=0.05)

# %%
# A first query scans everything.  Repeating it, or asking for a subset of
# its attributes, reads nothing.  A query that overlaps it starts from a
# base set of tuples already known to be in its answer.
for q in [{0, 1, 2}, {0, 1, 2}, {0, 1}, {2, 3}, {4, 5}]:
    stream = []
    ans = cache.query(q, emit=stream.append)
    assert set(stream[:len(ans.base)]) == ans.base
    print(f"{sorted(q)!s:10} {ans.kind.name:8} size={len(ans.result):4} "
          f"reads={ans.metrics.base_reads:6} early={len(ans.base)}")

# %%
# The cache now holds the queries as a DAG over their attribute sets.
print(cache.index.dump())
