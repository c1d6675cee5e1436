"""Semantic caching of skyline queries.

A new query is classified against the cached ones and answered by the most
restrictive strategy available:

* exact: the cached skyline is returned as is;
* subset: the skylines of the cached supersets are intersected and the
  survivors filtered among themselves, with no access to the relation;
* partial: skylines over the shared attributes are taken from the cache,
  emitted at once, and used as the initial window of a full scan;
* novel: a full scan.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .core import Relation, as_query
from .engine import RunMetrics, filter_candidates, sfs_skyline
from .index import (
    CacheFullError,
    CacheIndex,
    QueryClass,
    QueryKind,
    Segment,
    budget_for,
)

__all__ = [
    "Answer", "Mode", "QueryClass", "QueryKind", "SkylineCache", "answer_exact",
    "answer_novel", "answer_partial", "answer_subset", "classify",
]

Sink = Callable[[int], None]


class Mode(enum.Enum):
    NC = "nc"          # no cache
    NI = "ni"          # flat cache, no index
    INDEX = "index"    # DAG-indexed cache

    @classmethod
    def parse(cls, token: str | Mode) -> Mode:
        return token if isinstance(token, Mode) else cls(token.lower())


def classify(q: Iterable[int], index: CacheIndex | None) -> QueryClass:
    if index is None:
        return QueryClass(QueryKind.NOVEL)
    return index.search(frozenset(q))


def answer_exact(seg: Segment, index: CacheIndex) -> frozenset[int]:
    return frozenset(index.reconstruct(index.get(seg.seg_id)))


def answer_subset(rel: Relation, q: Iterable[int], supersets: list[Segment],
                  index: CacheIndex, metrics: RunMetrics | None = None) -> frozenset[int]:
    """Answer ``q`` from the cached skylines of strict supersets of ``q``.

    Only tuples in every superset's skyline can be in the answer, and a
    candidate dominated by any tuple is also dominated by another candidate,
    so filtering the candidates among themselves is enough.
    """
    q = frozenset(q)
    if not supersets:
        raise ValueError("subset answering needs at least one cached superset")
    candidates = None
    for seg in sorted(supersets, key=lambda s: s.beta):
        if not q < seg.attrs:
            raise ValueError(f"{seg.label()} does not strictly contain {sorted(q)}")
        sky = index.reconstruct(seg)
        candidates = sky if candidates is None else candidates & sky
    return filter_candidates(rel, q, candidates, metrics)


@dataclass
class PartialPlan:
    """What the partial strategy learned from the cache."""
    base: set[int] = field(default_factory=set)
    used: list[Segment] = field(default_factory=list)
    # shared attribute set -> (its skyline, minimal cached supersets of it)
    shared: dict[frozenset[int], tuple[frozenset[int], list[Segment]]] = field(default_factory=dict)


def base_set(rel: Relation, q: frozenset[int], witnesses: list[Segment],
             index: CacheIndex, metrics: RunMetrics | None = None) -> PartialPlan:
    """Tuples provably in the skyline of ``q``, computed from the cache only.

    For each witness ``S`` the shared attributes ``q & S`` are answered as a
    subset query of ``S``, or, when ``S`` lies inside ``q``, the whole
    skyline of ``S`` is taken.  The base set is the union of these.
    """
    plan = PartialPlan()
    for w in witnesses:
        shared = q & w.attrs
        if not shared:
            raise ValueError(f"{w.label()} shares no attribute with {sorted(q)}")
        if shared == w.attrs:
            plan.base |= index.reconstruct(w)
            plan.used.append(w)
            continue
        exact, minimal = index.descend(shared, [w]) if index.linked else (None, [w])
        if exact is not None:
            sky = frozenset(index.reconstruct(exact))
            plan.used.append(exact)
        else:
            sky = answer_subset(rel, shared, minimal, index, metrics)
            plan.used.extend(minimal)
        prev = plan.shared.get(shared)
        plan.shared[shared] = (sky, (prev[1] if prev else []) + minimal)
        plan.base |= sky
    return plan


def answer_partial(rel: Relation, q: Iterable[int], witnesses: list[Segment],
                   index: CacheIndex, emit: Sink | None = None,
                   metrics: RunMetrics | None = None, check_seed: bool = __debug__
                   ) -> tuple[frozenset[int], PartialPlan]:
    """Emit the base set, then finish with a scan seeded by it."""
    q = frozenset(q)
    metrics = metrics if metrics is not None else RunMetrics()
    plan = base_set(rel, q, witnesses, index, metrics)
    if emit is not None:
        for tid in sorted(plan.base):
            emit(tid)
    result = sfs_skyline(rel, q, seed=plan.base, metrics=metrics, check_seed=check_seed)
    if emit is not None:
        for tid in sorted(result - plan.base):
            emit(tid)
    return result, plan


def answer_novel(rel: Relation, q: Iterable[int], metrics: RunMetrics | None = None
                 ) -> frozenset[int]:
    return sfs_skyline(rel, q, metrics=metrics)


@dataclass
class Answer:
    query: frozenset[int]
    result: frozenset[int]
    kind: QueryKind
    metrics: RunMetrics
    base: frozenset[int] = frozenset()
    evicted: list[int] = field(default_factory=list)
    cached: bool = False


class SkylineCache:
    """Answers a stream of skyline queries over one relation.

    Parameters
    ----------
    rel : Relation
    mode : Mode or str
        ``nc`` computes every query from the relation, ``ni`` keeps a flat
        cache of full results, ``index`` keeps the DAG index.
    cache_fraction : float
        Tuple budget as a fraction of the relation size (ignored for ``nc``).
    budget : int, optional
        Explicit tuple budget, overriding ``cache_fraction``.
    check_seeds : bool
        Re-verify every base set after the seeded scan (quadratic in the
        skyline size, so off by default for timed runs).
    """

    def __init__(self, rel: Relation, mode: Mode | str = Mode.INDEX,
                 cache_fraction: float = 0.05, budget: int | None = None,
                 check_seeds: bool = False):
        self.rel = rel
        self.mode = Mode.parse(mode)
        self.check_seeds = check_seeds
        if self.mode is Mode.NC:
            self.index = None
        else:
            if budget is None:
                budget = budget_for(cache_fraction, rel.n)
            self.index = CacheIndex(budget, linked=self.mode is Mode.INDEX)

    def query(self, q: Iterable[int], emit: Sink | None = None) -> Answer:
        q = as_query(q, self.rel.d)
        metrics = RunMetrics()
        start = time.perf_counter()
        qclass = classify(q, self.index)
        index = self.index
        base: frozenset[int] = frozenset()
        plan = None

        if qclass.kind is QueryKind.EXACT:
            result = answer_exact(qclass.witnesses[0], index)
            index.touch(qclass.witnesses)
        elif qclass.kind is QueryKind.SUBSET:
            result = answer_subset(self.rel, q, qclass.witnesses, index, metrics)
            index.touch(qclass.witnesses)
        elif qclass.kind is QueryKind.PARTIAL:
            result, plan = answer_partial(self.rel, q, qclass.witnesses, index, emit,
                                          metrics, self.check_seeds)
            base = frozenset(plan.base)
            index.touch(plan.used)
        else:
            result = answer_novel(self.rel, q, metrics)
        if emit is not None and qclass.kind is not QueryKind.PARTIAL:
            for tid in sorted(result):
                emit(tid)

        answer = Answer(q, result, qclass.kind, metrics, base)
        if index is not None and qclass.kind is not QueryKind.EXACT:
            try:
                _, answer.evicted = index.insert_segment(
                    q, result, qclass, plan.shared if plan else None)
                answer.cached = True
            except CacheFullError as exc:
                answer.evicted = exc.evicted
        metrics.elapsed = time.perf_counter() - start
        return answer

    def run(self, queries: Iterable[Iterable[int]]) -> list[Answer]:
        return [self.query(q) for q in queries]
