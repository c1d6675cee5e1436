"""Sort-filter-skyline over the base relation, with an optional seeded window.

The seeded tuples are known skyline members (a base set taken from the
cache).  They are never read from the relation, never tested and never
evicted.  The window is kept in sort-key order and a seed takes its place in
it when the scan reaches its key; a seed with a larger key than the scanned
tuple cannot dominate it, so holding it back changes no outcome.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Iterable

import numba
import numpy as np

from .core import Preference, Relation, SchemaError, Tuple, as_query, check_attrs


class SeedError(AssertionError):
    """A seed tuple turned out not to be a skyline member."""


@dataclass
class RunMetrics:
    base_reads: int = 0
    dom_tests: int = 0
    elapsed: float = 0.0

    def add(self, other: RunMetrics) -> None:
        self.base_reads += other.base_reads
        self.dom_tests += other.dom_tests
        self.elapsed += other.elapsed


def sort_key(t: Tuple | np.ndarray, q: Iterable[int], prefs, bounds) -> float:
    """Monotone score of one tuple: sum of min-max normalized values on ``q``.

    MAX attributes contribute ``1 - normalized``.  A constant column
    contributes zero.  If ``u`` dominates ``v`` then ``key(u) < key(v)``.
    """
    values = t.values if isinstance(t, Tuple) else t
    q = sorted(q)
    if not q:
        raise SchemaError("sort key needs at least one attribute")
    check_attrs(q, len(prefs))
    lo, hi = bounds
    key = 0.0
    for a in q:
        span = hi[a] - lo[a]
        x = (values[a] - lo[a]) / span if span > 0 else 0.0
        key += (1.0 - x) if Preference.parse(prefs[a]) is Preference.MAX else x
    return key


def sort_keys(rel: Relation, q: Iterable[int]) -> np.ndarray:
    """Vectorized :func:`sort_key` for every tuple of ``rel``."""
    cols = sorted(q)
    lo, hi = rel.bounds
    keys = np.zeros(rel.n)
    for a in cols:
        span = hi[a] - lo[a]
        x = (rel.values[:, a] - lo[a]) / span if span > 0 else np.zeros(rel.n)
        keys += (1.0 - x) if rel.prefs[a] is Preference.MAX else x
    return keys


@numba.njit(cache=True)
def _dominates(vals, i, j):
    k = vals.shape[1]
    strict = False
    for c in range(k):
        if vals[i, c] > vals[j, c]:
            return False
        if vals[i, c] < vals[j, c]:
            strict = True
    return strict


@numba.njit(cache=True)
def _evict_ties(vals, keys, window, size, is_seed, t):
    # t can only dominate an earlier candidate whose key ties with its own
    tests = 0
    w = 0
    while w < size:
        c = window[w]
        if not is_seed[c] and keys[c] >= keys[t]:
            tests += 1
            if _dominates(vals, t, c):
                window[w:size - 1] = window[w + 1:size]
                size -= 1
                continue
        w += 1
    return size, tests


@numba.njit(cache=True)
def _sfs_pass(vals, keys, order, is_seed):
    # window stays in key order; seeds join it untested at their sort position
    n = order.shape[0]
    window = np.empty(n, dtype=np.int64)
    size = 0
    tests = 0
    reads = 0
    for pos in range(n):
        t = order[pos]
        if is_seed[t]:
            size, k = _evict_ties(vals, keys, window, size, is_seed, t)
            tests += k
            window[size] = t
            size += 1
            continue
        reads += 1
        dominated = False
        for w in range(size):
            tests += 1
            if _dominates(vals, window[w], t):
                dominated = True
                break
        if dominated:
            continue
        size, k = _evict_ties(vals, keys, window, size, is_seed, t)
        tests += k
        window[size] = t
        size += 1
    return window[:size].copy(), tests, reads


@numba.njit(cache=True)
def _seed_violations(vals, window, seeds):
    bad = 0
    for s in seeds:
        for w in window:
            if w != s and _dominates(vals, w, s):
                bad += 1
                break
    return bad


@numba.njit(cache=True)
def _filter_pass(vals):
    # plain all-pairs over a small candidate block; counts every test made
    n = vals.shape[0]
    keep = np.ones(n, dtype=np.bool_)
    tests = 0
    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            tests += 1
            if _dominates(vals, j, i):
                keep[i] = False
                break
    return keep, tests


def sfs_skyline(rel: Relation, q: Iterable[int], seed: Iterable[int] = (),
                metrics: RunMetrics | None = None, check_seed: bool = __debug__
                ) -> frozenset[int]:
    """Skyline of ``rel`` on ``q`` in one sorted pass with a window.

    Parameters
    ----------
    rel : Relation
    q : iterable of int
        Query attributes.
    seed : iterable of int
        Tuple ids already known to be in the skyline of ``q``.  They enter
        the window without being read or tested.
    metrics : RunMetrics, optional
        Accumulates ``base_reads`` (tuples scanned, seeds excluded),
        ``dom_tests`` and ``elapsed``.
    check_seed : bool
        Verify after the pass that no seed is dominated, raising
        :class:`SeedError` otherwise. On by default unless Python runs with
        ``-O``.

    Returns
    -------
    frozenset of int
    """
    q = as_query(q, rel.d)
    metrics = metrics if metrics is not None else RunMetrics()
    start = time.perf_counter()
    seeds = np.array(sorted(set(seed)), dtype=np.int64)
    if len(seeds) and (seeds[0] < 0 or seeds[-1] >= rel.n):
        raise SchemaError("seed tid out of range")
    if rel.n == 0:
        return frozenset()

    vals = rel.columns(q)
    keys = sort_keys(rel, q)
    # stable sort: ties on key keep ascending tid order
    order = np.argsort(keys, kind="stable")
    is_seed = np.zeros(rel.n, dtype=np.bool_)
    is_seed[seeds] = True
    window, tests, reads = _sfs_pass(vals, keys, order, is_seed)

    metrics.base_reads += int(reads)
    metrics.dom_tests += int(tests)
    metrics.elapsed += time.perf_counter() - start
    if check_seed and len(seeds) and _seed_violations(vals, window, seeds):
        raise SeedError(f"seed for query {sorted(q)} contains non-skyline tuples")
    return frozenset(window.tolist())


def filter_candidates(rel: Relation, q: Iterable[int], candidates: Iterable[int],
                      metrics: RunMetrics | None = None) -> frozenset[int]:
    """Tuples of ``candidates`` not dominated on ``q`` by another candidate.

    Reads nothing beyond the candidate rows; ``base_reads`` is untouched.
    """
    q = as_query(q, rel.d)
    cand = np.array(sorted(set(candidates)), dtype=np.int64)
    if len(cand) == 0:
        return frozenset()
    start = time.perf_counter()
    cols = sorted(q)
    vals = np.ascontiguousarray(rel.oriented[np.ix_(cand, cols)])
    keep, tests = _filter_pass(vals)
    if metrics is not None:
        metrics.dom_tests += int(tests)
        metrics.elapsed += time.perf_counter() - start
    return frozenset(cand[keep].tolist())
