"""
No cache, flat cache and indexed cache
======================================

Run one workload under the three modes and compare dominance tests, base
reads and the number of cached segments.
"""

import numpy as np

from skycache import GenSpec, WorkloadSpec, generate, make_workload
from skycache.cli import RunConfig, run_benchmark

rel = generate(GenSpec(20_000, 6, seed=1))
queries = make_workload(WorkloadSpec(60, repeat_prob=0.3, seed=2), rel.d)

# %%
for mode in ("nc", "ni", "index"):
    rows, cache = run_benchmark(RunConfig(mode=mode, cache_frac=0.05), rel, queries)
    dom = np.mean([r["domTests"] for r in rows])
    reads = np.mean([r["baseReads"] for r in rows])
    segs = len(cache.index) if cache.index is not None else 0
    print(f"{mode:6} domTests={dom:9.0f} baseReads={reads:8.0f} segments={segs}")
