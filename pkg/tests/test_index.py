import pytest

from skycache.cache import SkylineCache
from skycache.cli import replay_fig2
from skycache.core import brute_force_skyline
from skycache.index import (
    CacheFullError,
    CacheIndex,
    IndexCorruptionError,
    QueryClass,
    QueryKind,
    Segment,
    budget_for,
    replacement_value,
)

from conftest import random_relation

F = frozenset


def labels(segs):
    return sorted(s.label() for s in segs)


class TestReconstruct:
    def test_leaf_is_its_residual(self):
        idx = CacheIndex(100)
        seg = idx.insert({1, 2}, {4, 5, 6})
        assert idx.reconstruct(seg) == {4, 5, 6}

    def test_parent_stores_only_difference(self):
        idx = CacheIndex(100)
        child = idx.insert({1}, {"b", "c"})
        parent = idx.insert({1, 2}, {"a", "b", "c"})
        assert parent.children == [child]
        assert parent.residual == {"a"}
        assert idx.reconstruct(parent) == {"a", "b", "c"}
        assert idx.used == 3

    def test_diamond_counted_once(self):
        idx = CacheIndex(100)
        s4 = idx.insert({3}, {7})
        s2 = idx.insert({2, 3}, {7, 8})
        s3 = idx.insert({3, 4}, {7, 9}, children=[s4])
        top = idx.insert({2, 3, 4}, {7, 8, 9, 10})
        assert labels(top.children) == labels([s2, s3])
        assert s4.parents == {s2.seg_id, s3.seg_id}
        assert idx.reconstruct(top) == {7, 8, 9, 10}
        assert idx.used == 4
        idx.check()

    def test_cycle_is_reported(self):
        idx = CacheIndex(100)
        a = idx.insert({1}, {1})
        b = idx.insert({1, 2}, {1, 2})
        a.children.append(b)
        with pytest.raises(IndexCorruptionError):
            idx.reconstruct(b)


class TestFig2Insertion:
    """The walkthrough, one step at a time, driven through the cache."""

    @pytest.fixture
    def cache(self, wide_relation):
        return SkylineCache(wide_relation, "index", budget=10**6, check_seeds=True)

    def test_steps(self, cache, wide_relation):
        idx = cache.index
        assert cache.query({1, 2}).kind is QueryKind.NOVEL
        assert labels(idx.roots) == ["S1{1,2}"]

        assert cache.query({1, 2, 3}).kind is QueryKind.PARTIAL
        assert labels(idx.roots) == ["S2{1,2,3}"]
        assert labels(idx.get(2).children) == ["S1{1,2}"]

        assert cache.query({3, 4}).kind is QueryKind.PARTIAL
        assert labels(idx.roots) == ["S2{1,2,3}", "S3{3,4}"]
        s4 = idx.by_attrs[F({3})]
        assert s4.seg_id == 4 and s4.parents == {2, 3}

        assert cache.query({5, 6}).kind is QueryKind.NOVEL
        before = idx.dump(stats=False)
        ans = cache.query({1, 2})
        assert ans.kind is QueryKind.EXACT and ans.metrics.base_reads == 0
        assert idx.dump(stats=False) == before

        assert cache.query({2, 3}).kind is QueryKind.SUBSET
        s6 = idx.get(6)
        assert s6.attrs == {2, 3} and s6.parents == {2}
        assert labels(idx.get(2).children) == ["S1{1,2}", "S6{2,3}"]
        assert labels(s6.children) == ["S4{3}"]
        assert s4.parents == {3, 6}
        idx.check(oracle=lambda a: brute_force_skyline(wide_relation, a))

    def test_exact_hit_leaves_index_unchanged(self, cache):
        for q in ({1, 2}, {1, 2, 3}, {3, 4}, {5, 6}):
            cache.query(q)
        before = cache.index.dump(stats=False)
        cache.query({1, 2})
        assert cache.index.dump(stats=False) == before


class TestSearch:
    @pytest.fixture
    def fig2(self, wide_relation):
        _, cache = replay_fig2(wide_relation)
        return cache.index

    def test_descends_to_exact(self, wide_relation):
        cache = SkylineCache(wide_relation, "index", budget=10**6)
        for q in ({1, 2}, {1, 2, 3}):
            cache.query(q)
        qc = cache.index.search({1, 2})
        assert qc.kind is QueryKind.EXACT and qc.witnesses[0].seg_id == 1

    def test_root_exact(self, fig2):
        qc = fig2.search({5, 6})
        assert qc.kind is QueryKind.EXACT and qc.witnesses[0].seg_id == 5

    def test_novel(self, fig2):
        assert fig2.search({0}).kind is QueryKind.NOVEL

    def test_subset_reports_minimal_supersets(self, fig2):
        qc = fig2.search({2})
        assert qc.kind is QueryKind.SUBSET
        assert labels(qc.witnesses) == ["S1{1,2}", "S6{2,3}"]

    def test_partial_witnesses_are_roots(self, fig2):
        qc = fig2.search({3, 7})
        assert qc.kind is QueryKind.PARTIAL
        assert all(w.is_root for w in qc.witnesses)
        assert labels(qc.witnesses) == ["S10{6,7}", "S2{1,2,3}", "S3{3,4}"]

    def test_matches_flat_scan(self, fig2):
        for r in range(1, 4):
            for q in map(set, __import__("itertools").combinations(range(10), r)):
                assert fig2.search(q).kind is fig2.flat_classify(q), q


class TestDeleteRoot:
    @pytest.fixture
    def fig2f(self, wide_relation):
        cache = SkylineCache(wide_relation, "index", budget=10**6)
        for q in ({1, 2}, {1, 2, 3}, {3, 4}, {5, 6}, {1, 2}, {2, 3}):
            cache.query(q)
        return cache.index, wide_relation

    def test_children_become_roots(self, fig2f):
        idx, rel = fig2f
        idx.delete_root(2)
        assert labels(idx.roots) == ["S1{1,2}", "S3{3,4}", "S5{5,6}", "S6{2,3}"]
        assert labels(idx.get(6).children) == ["S4{3}"]
        assert idx.get(4).parents == {3, 6}
        idx.check(oracle=lambda a: brute_force_skyline(rel, a))

    def test_childless_root(self, fig2f):
        idx, _ = fig2f
        n, used, r5 = len(idx), idx.used, len(idx.get(5).residual)
        rest = {sid: set(s.residual) for sid, s in idx.segments.items() if sid != 5}
        idx.delete_root(5)
        assert len(idx) == n - 1 and idx.used == used - r5
        assert {sid: s.residual for sid, s in idx.segments.items()} == rest

    def test_non_root_refused(self, fig2f):
        idx, _ = fig2f
        with pytest.raises(ValueError):
            idx.delete_root(4)


class TestReplacement:
    def test_arithmetic(self):
        assert replacement_value(1, 2, 4) == 0.5
        assert replacement_value(2, 2, 4) == 2 * replacement_value(1, 2, 4)
        assert replacement_value(1, 2, 8) < replacement_value(1, 2, 4)

    def test_empty_skyline_rejected(self):
        with pytest.raises(ValueError):
            replacement_value(1, 2, 0)

    def test_evicts_lowest_value(self):
        idx = CacheIndex(10)
        low = idx.insert({1, 2}, range(4))            # 1*2/4 = 0.5
        high = idx.insert({3, 4}, range(10, 11))      # 1*2/1 = 2.0
        assert idx.replacement_value(low) == 0.5 and idx.replacement_value(high) == 2.0
        assert idx.evict(needed=6) == [low.seg_id]
        assert idx.used == 1

    def test_nothing_to_do(self):
        idx = CacheIndex(10)
        idx.insert({1}, {1, 2})
        assert idx.evict(needed=3) == []

    def test_ties_go_to_oldest(self):
        idx = CacheIndex(10)
        a = idx.insert({1}, {1})
        idx.insert({2}, {2})
        assert idx.evict(needed=9) == [a.seg_id]

    def test_never_evicts_non_roots(self, wide_relation):
        _, cache = replay_fig2(wide_relation)
        idx = cache.index
        while idx.used:
            idx.budget = idx.used
            roots = idx.roots
            victim = min(roots, key=lambda r: (idx.replacement_value(r), r.seg_id))
            evicted = idx.evict(needed=1)
            assert evicted[0] == victim.seg_id
            assert all(sid in {r.seg_id for r in roots} or sid not in idx.segments
                       for sid in evicted)
            idx.check()

    def test_too_large_result_refused(self):
        idx = CacheIndex(3)
        with pytest.raises(CacheFullError):
            idx.insert_segment({1, 2}, range(5), QueryClass(QueryKind.NOVEL))
        assert len(idx) == 0

    def test_budget_helper(self):
        assert budget_for(0.05, 10_000) == 500
        assert budget_for(0.001, 10) == 1
        with pytest.raises(ValueError):
            budget_for(0, 10)


class TestTouch:
    def test_exact_hit_on_leaf(self, wide_relation):
        cache = SkylineCache(wide_relation, "index", budget=10**6)
        cache.query({1, 2})
        cache.query({1, 2})
        assert cache.index.get(1).alpha == 2

    def test_parent_and_children(self):
        idx = CacheIndex(100)
        a, b = idx.insert({1}, {1}), idx.insert({2}, {2})
        top = idx.insert({1, 2}, {1, 2, 3})
        other = idx.insert({5}, {9})
        idx.touch([top])
        assert (top.alpha, a.alpha, b.alpha, other.alpha) == (2, 2, 2, 1)

    def test_shared_child_counted_once(self):
        idx = CacheIndex(100)
        shared = idx.insert({3}, {1})
        p1, p2 = idx.insert({2, 3}, {1, 2}), idx.insert({3, 4}, {1, 3})
        idx.touch([p1, p2])
        assert shared.alpha == 2


class TestBitVectors:
    def test_vectors_follow_children(self):
        seg = Segment(9, F({1, 2, 3}))
        kids = [Segment(10, F({1})), Segment(11, F({2, 3})), Segment(12, F({1, 3}))]
        for k in kids:
            seg.add_child(k)
        assert seg.bits == {1: 0b101, 2: 0b010, 3: 0b110}
        assert seg.children_with_all({3}) == [kids[1], kids[2]]
        seg.remove_child(kids[1])
        assert seg.bits == {1: 0b11, 2: 0, 3: 0b10}
        assert seg.children_with_all({1, 3}) == [kids[2]]
        assert seg.children_with_any({2}) == []

    def test_pseudo_root_drops_empty_vectors(self):
        idx = CacheIndex(10)
        idx.insert({4}, {1})
        idx.delete_root(1)
        assert idx.root.bits == {}


def test_dump_of_empty_cache():
    assert CacheIndex(10).dump() == "root -> []\n"


@pytest.mark.parametrize("linked", [True, False])
def test_invariants_hold_over_random_sequences(rng, linked):
    for trial in range(6):
        rel = random_relation(rng, 400, 6)
        idx_cache = SkylineCache(rel, "index" if linked else "ni",
                                 budget=int(rng.integers(20, 200)), check_seeds=True)
        truth = {}

        def oracle(a):
            if a not in truth:
                truth[a] = brute_force_skyline(rel, a)
            return truth[a]

        for _ in range(40):
            k = int(rng.integers(1, 7))
            q = frozenset(rng.choice(6, size=k, replace=False).tolist())
            ans = idx_cache.query(q)
            assert ans.result == oracle(q)
            idx_cache.index.check(oracle=oracle)
            for r in range(1, 3):
                probe = frozenset(rng.choice(6, size=r, replace=False).tolist())
                assert idx_cache.index.search(probe).kind is idx_cache.index.flat_classify(probe)
