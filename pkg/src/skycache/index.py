"""DAG index of cached skyline queries.

Each cached query is a :class:`Segment`.  A segment is the child of another
when its attribute set is a strict subset of the parent's.  A pseudo root is
the parent of every root, so the whole cache is one connected DAG.

Results are stored without redundancy: a segment keeps only the tuple ids of
its skyline that no child already yields (its *residual*), and the full
skyline is rebuilt by :meth:`CacheIndex.reconstruct`.

Every node keeps one bit vector per attribute over its ordered children; bit
``j`` of attribute ``a`` is set iff child ``j`` has ``a``.  The pseudo root
keeps vectors for every attribute seen in a root.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator


class IndexCorruptionError(RuntimeError):
    pass


class CacheFullError(RuntimeError):
    """The result could not be cached within the tuple budget."""

    def __init__(self, message: str, evicted: list[int] | None = None):
        super().__init__(message)
        self.evicted = evicted or []


class QueryKind(enum.IntEnum):
    # ordered by restrictiveness, highest wins
    NOVEL = 0
    PARTIAL = 1
    SUBSET = 2
    EXACT = 3


@dataclass
class QueryClass:
    kind: QueryKind
    witnesses: list[Segment] = field(default_factory=list)

    def __repr__(self) -> str:
        ids = ", ".join(f"S{w.seg_id}" for w in self.witnesses)
        return f"QueryClass({self.kind.name}, [{ids}])"


@dataclass(eq=False)
class Segment:
    seg_id: int
    attrs: frozenset[int]
    residual: set[int] = field(default_factory=set)
    alpha: int = 1
    beta: int = 0
    children: list[Segment] = field(default_factory=list)
    parents: set[int] = field(default_factory=set)
    bits: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.bits:
            self.bits = {a: 0 for a in self.attrs}

    @property
    def is_pseudo_root(self) -> bool:
        return self.seg_id == 0

    @property
    def is_root(self) -> bool:
        return self.parents == {0}

    def label(self) -> str:
        return "S%d{%s}" % (self.seg_id, ",".join(str(a) for a in sorted(self.attrs)))

    def __repr__(self) -> str:
        return f"Segment({self.label()}, |r|={len(self.residual)}, alpha={self.alpha})"

    # --- child bookkeeping -------------------------------------------------

    def add_child(self, child: Segment) -> None:
        j = len(self.children)
        self.children.append(child)
        for a in child.attrs:
            self.bits[a] = self.bits.get(a, 0) | (1 << j)
        child.parents.add(self.seg_id)

    def remove_child(self, child: Segment) -> None:
        j = self.children.index(child)
        del self.children[j]
        low = (1 << j) - 1
        for a, v in list(self.bits.items()):
            v = (v & low) | ((v >> (j + 1)) << j)
            if v == 0 and self.is_pseudo_root:
                del self.bits[a]
            else:
                self.bits[a] = v
        child.parents.discard(self.seg_id)

    def children_with_all(self, attrs: Iterable[int]) -> list[Segment]:
        """Children whose attribute set contains every attribute in ``attrs``."""
        mask = (1 << len(self.children)) - 1
        for a in attrs:
            mask &= self.bits.get(a, 0)
            if not mask:
                return []
        return self._pick(mask)

    def children_with_any(self, attrs: Iterable[int]) -> list[Segment]:
        mask = 0
        for a in attrs:
            mask |= self.bits.get(a, 0)
        return self._pick(mask)

    def _pick(self, mask: int) -> list[Segment]:
        out = []
        while mask:
            low = mask & -mask
            out.append(self.children[low.bit_length() - 1])
            mask ^= low
        return out


def replacement_value(alpha: int, d: int, beta: int) -> float:
    """Usefulness score ``alpha * d / beta``; the lowest one is evicted first."""
    if beta <= 0:
        raise ValueError("replacement value needs a non-empty skyline")
    return alpha * d / beta


class CacheIndex:
    """Cached skyline segments under a pseudo root, with a tuple budget.

    Parameters
    ----------
    budget : int
        Maximum number of tuple ids stored over all residuals.
    linked : bool
        ``False`` gives the flat cache: every segment is a root and stores its
        full skyline.  The search, eviction and accounting code is shared.
    """

    def __init__(self, budget: int, linked: bool = True):
        if budget < 0:
            raise ValueError("budget must be non-negative")
        self.budget = budget
        self.linked = linked
        self.root = Segment(0, frozenset())
        self.segments: dict[int, Segment] = {}
        self.by_attrs: dict[frozenset[int], Segment] = {}
        self.used = 0
        self._next_id = 1

    def __len__(self) -> int:
        return len(self.segments)

    def __contains__(self, attrs) -> bool:
        return frozenset(attrs) in self.by_attrs

    @property
    def roots(self) -> list[Segment]:
        return list(self.root.children)

    def get(self, seg_id: int) -> Segment:
        try:
            return self.segments[seg_id]
        except KeyError:
            raise IndexCorruptionError(f"dangling segment reference S{seg_id}") from None

    def _node(self, seg_id: int) -> Segment:
        return self.root if seg_id == 0 else self.get(seg_id)

    def replacement_value(self, seg: Segment) -> float:
        return replacement_value(seg.alpha, len(seg.attrs), seg.beta)

    # --- traversal ---------------------------------------------------------

    def descendants(self, seg: Segment) -> Iterator[Segment]:
        """``seg`` and everything below it, each once; raises on a cycle."""
        on_path: set[int] = set()
        done: set[int] = set()
        stack: list[tuple[Segment, int]] = [(seg, 0)]
        on_path.add(seg.seg_id)
        yield seg
        while stack:
            node, i = stack.pop()
            if i < len(node.children):
                stack.append((node, i + 1))
                child = node.children[i]
                if child.seg_id in on_path:
                    raise IndexCorruptionError(f"cycle through {child.label()}")
                if child.seg_id in done:
                    continue
                on_path.add(child.seg_id)
                yield child
                stack.append((child, 0))
            else:
                on_path.discard(node.seg_id)
                done.add(node.seg_id)

    def reconstruct(self, seg: Segment) -> set[int]:
        """Full skyline of ``seg``: its residual joined with all descendants'."""
        out: set[int] = set()
        for node in self.descendants(seg):
            out |= node.residual
        return out

    def ancestors(self, seg: Segment) -> set[int]:
        seen: set[int] = set()
        stack = [p for p in seg.parents if p != 0]
        while stack:
            sid = stack.pop()
            if sid in seen:
                continue
            seen.add(sid)
            stack.extend(p for p in self.get(sid).parents if p != 0)
        return seen

    def touch(self, segs: Iterable[Segment]) -> None:
        """Count one use for every segment whose stored tuples fed an answer."""
        used: dict[int, Segment] = {}
        for seg in segs:
            for node in self.descendants(seg):
                used[node.seg_id] = node
        for node in used.values():
            node.alpha += 1

    # --- search ------------------------------------------------------------

    def descend(self, q: frozenset[int], start: Iterable[Segment]
                ) -> tuple[Segment | None, list[Segment]]:
        """Walk down from ``start`` (all supersets of ``q``) through children
        containing every attribute of ``q``.

        Returns the segment equal to ``q`` if one is met, else ``None`` and
        the minimal supersets reached (those with no child containing ``q``).
        """
        seen: set[int] = set()
        minimal = []
        stack = list(start)
        while stack:
            node = stack.pop()
            if node.seg_id in seen:
                continue
            seen.add(node.seg_id)
            if node.attrs == q:
                return node, []
            kids = node.children_with_all(q)
            if kids:
                stack.extend(kids)
            else:
                minimal.append(node)
        minimal.sort(key=lambda s: s.seg_id)
        return None, minimal

    def search(self, q: Iterable[int]) -> QueryClass:
        """Classify ``q`` against the cache.

        Roots are filtered with the pseudo root's bit vectors.  If some root
        contains ``q`` the search descends through its children to look for
        an exact match; a subset answer lists the minimal supersets found.
        Partial witnesses are the roots sharing an attribute with ``q``.
        """
        q = frozenset(q)
        supers = self.root.children_with_all(q)
        if supers:
            exact, minimal = self.descend(q, supers)
            if exact is not None:
                return QueryClass(QueryKind.EXACT, [exact])
            return QueryClass(QueryKind.SUBSET, minimal)
        overlap = self.root.children_with_any(q)
        if overlap:
            overlap.sort(key=lambda s: s.seg_id)
            return QueryClass(QueryKind.PARTIAL, overlap)
        return QueryClass(QueryKind.NOVEL, [])

    def flat_classify(self, q: Iterable[int]) -> QueryKind:
        """Classification by scanning every segment, ignoring the links."""
        q = frozenset(q)
        kind = QueryKind.NOVEL
        for seg in self.segments.values():
            if seg.attrs == q:
                return QueryKind.EXACT
            if q < seg.attrs:
                kind = max(kind, QueryKind.SUBSET)
            elif q & seg.attrs:
                kind = max(kind, QueryKind.PARTIAL)
        return kind

    # --- mutation ----------------------------------------------------------

    def new_id(self) -> int:
        sid = self._next_id
        self._next_id += 1
        return sid

    def insert(self, attrs: Iterable[int], skyline: Iterable[int],
               parents: Iterable[Segment] = (), children: Iterable[Segment] = (),
               seg_id: int | None = None) -> Segment:
        """Place one segment in the DAG and redistribute stored tuples.

        ``parents`` must be strict supersets of ``attrs``; with none given the
        segment becomes a root.  Children are the explicit ``children`` plus
        every root and every child of a parent whose attributes are a strict
        subset of ``attrs``; those children are moved below the new segment.
        A candidate already reachable from another candidate is not linked
        directly.  Budget is not enforced here, see :meth:`insert_segment`.
        """
        attrs = frozenset(attrs)
        if not attrs:
            raise ValueError("segment needs attributes")
        if attrs in self.by_attrs:
            raise ValueError(f"segment for {sorted(attrs)} already cached")
        skyline = set(skyline)
        parents = list(dict.fromkeys(parents))
        for p in parents:
            if not attrs < p.attrs:
                raise ValueError(f"{p.label()} is not a strict superset of {sorted(attrs)}")
        seg = Segment(seg_id if seg_id is not None else self.new_id(), attrs)
        seg.beta = len(skyline)

        if not self.linked:
            parents, kids = [], []
        else:
            kids = list(dict.fromkeys(children))
            for holder in parents + [self.root]:
                kids.extend(c for c in holder.children if c.attrs < attrs)
            kids = list(dict.fromkeys(kids))
            for c in kids:
                if not c.attrs < attrs:
                    raise ValueError(f"{c.label()} is not a strict subset of {sorted(attrs)}")
            kids = self._drop_reachable(kids)

        self.segments[seg.seg_id] = seg
        self.by_attrs[attrs] = seg
        for c in kids:
            for holder in parents + [self.root]:
                if c in holder.children:
                    holder.remove_child(c)
            seg.add_child(c)
        for p in parents or [self.root]:
            p.add_child(seg)

        below: set[int] = set()
        for c in kids:
            below |= self.reconstruct(c)
        seg.residual = skyline - below
        self.used += len(seg.residual)
        for sid in self.ancestors(seg):
            anc = self.segments[sid]
            before = len(anc.residual)
            anc.residual -= skyline
            self.used -= before - len(anc.residual)
        return seg

    def _drop_reachable(self, kids: list[Segment]) -> list[Segment]:
        keep = []
        for c in kids:
            if not any(o is not c and c in self.descendants(o) for o in kids):
                keep.append(c)
        return keep

    def link(self, parent: Segment, child: Segment) -> None:
        """Add an edge ``parent -> child`` between existing segments."""
        if not child.attrs < parent.attrs:
            raise ValueError(f"{child.label()} is not a strict subset of {parent.label()}")
        if child in parent.children or child in self.descendants(parent):
            return
        if child.is_root:
            self.root.remove_child(child)
        parent.add_child(child)
        below = self.reconstruct(child)
        for sid in self.ancestors(child):
            anc = self.segments[sid]
            before = len(anc.residual)
            anc.residual -= below
            self.used -= before - len(anc.residual)

    def delete_root(self, seg_id: int) -> None:
        """Drop a root and its residual; orphaned children become roots."""
        seg = self.get(seg_id)
        if not seg.is_root:
            raise ValueError(f"{seg.label()} is not a root")
        self.root.remove_child(seg)
        for c in list(seg.children):
            seg.remove_child(c)
            if not c.parents:
                self.root.add_child(c)
        self.used -= len(seg.residual)
        del self.segments[seg_id]
        del self.by_attrs[seg.attrs]

    def evict(self, needed: int = 0, protect: Segment | None = None) -> list[int]:
        """Delete lowest-value roots until ``used + needed <= budget``.

        Ties go to the oldest segment.  ``protect`` is never chosen.
        """
        evicted = []
        while self.used + needed > self.budget:
            roots = [r for r in self.root.children if r is not protect]
            if not roots:
                break
            victim = min(roots, key=lambda r: (self.replacement_value(r), r.seg_id))
            self.delete_root(victim.seg_id)
            evicted.append(victim.seg_id)
        return evicted

    def insert_segment(self, q: Iterable[int], skyline: Iterable[int],
                       qclass: QueryClass, intersections: dict | None = None
                       ) -> tuple[Segment, list[int]]:
        """Cache the answer of ``q`` given how it was classified.

        Subset answers go below the minimal supersets found by the search.
        Partial and novel answers become roots; for a partial answer
        ``intersections`` maps each shared attribute set ``q & S`` (for a
        witness ``S`` not contained in ``q``) to ``(skyline, parents)``,
        where ``parents`` are the minimal supersets of it under ``S``.  Such a
        set is cached too, below those parents and below the new root.

        Afterwards roots are evicted until the budget holds again; returns the
        new segment and the evicted segment ids.  Raises
        :class:`CacheFullError` if the new segment cannot be kept.
        """
        q = frozenset(q)
        skyline = set(skyline)
        if qclass.kind is QueryKind.EXACT:
            raise ValueError("exact hits are not inserted")
        if len(skyline) > self.budget:
            raise CacheFullError(f"skyline of {len(skyline)} tuples exceeds budget {self.budget}")

        intersections = intersections if self.linked else None
        if qclass.kind is QueryKind.SUBSET and self.linked:
            seg = self.insert(q, skyline, parents=qclass.witnesses)
        elif qclass.kind is QueryKind.PARTIAL and intersections:
            existing = [self.by_attrs[s] for s in intersections if s in self.by_attrs]
            seg = self.insert(q, skyline, children=existing)
            for shared, (sub_skyline, sub_parents) in sorted(
                    intersections.items(), key=lambda kv: sorted(kv[0])):
                if shared in self.by_attrs:
                    continue
                live = [p for p in sub_parents if p.seg_id in self.segments]
                self.insert(shared, sub_skyline, parents=live + [seg])
        else:
            seg = self.insert(q, skyline)

        evicted = self.evict(protect=seg)
        if self.used > self.budget:
            # only the new segment and what hangs below it are left
            evicted += self._evict_including(seg)
            raise CacheFullError("could not keep the new segment within budget", evicted)
        return seg, evicted

    def _evict_including(self, seg: Segment) -> list[int]:
        evicted = []
        if seg.seg_id in self.segments and seg.is_root:
            self.delete_root(seg.seg_id)
            evicted.append(seg.seg_id)
        return evicted + self.evict()

    # --- inspection --------------------------------------------------------

    def dump(self, stats: bool = True) -> str:
        """Deterministic text rendering of the DAG, one node per line."""
        lines = ["root -> [%s]" % ", ".join(c.label() for c in self.root.children)]
        for sid in sorted(self.segments):
            seg = self.segments[sid]
            line = seg.label()
            if stats:
                line += " |r|=%d alpha=%d" % (len(seg.residual), seg.alpha)
            line += " -> [%s]" % ", ".join(c.label() for c in seg.children)
            lines.append(line)
        return "\n".join(lines) + "\n"

    def check(self, oracle=None) -> None:
        """Assert every structural invariant; ``oracle(attrs)`` optionally
        supplies the true skyline to compare reconstructions against."""
        ids = set(self.segments)
        reached = {s.seg_id for r in self.root.children for s in self.descendants(r)}
        if reached != ids:
            raise IndexCorruptionError(f"unreachable segments {sorted(ids - reached)}")
        if len(self.by_attrs) != len(ids) or any(
                self.by_attrs.get(s.attrs) is not s for s in self.segments.values()):
            raise IndexCorruptionError("attribute lookup out of sync")
        for node in [self.root, *self.segments.values()]:
            expect: dict[int, int] = {} if node.is_pseudo_root else {a: 0 for a in node.attrs}
            for j, c in enumerate(node.children):
                if c.seg_id not in ids:
                    raise IndexCorruptionError(f"{node.label()} points at a deleted segment")
                if node.seg_id not in c.parents:
                    raise IndexCorruptionError(f"{c.label()} lost parent {node.label()}")
                if not node.is_pseudo_root and not c.attrs < node.attrs:
                    raise IndexCorruptionError(f"edge {node.label()} -> {c.label()} not a strict subset")
                for a in c.attrs:
                    expect[a] = expect.get(a, 0) | (1 << j)
            if expect != node.bits:
                raise IndexCorruptionError(f"bit vectors of {node.label()} are stale")
            if len(set(map(id, node.children))) != len(node.children):
                raise IndexCorruptionError(f"duplicate child under {node.label()}")
        for seg in self.segments.values():
            for p in seg.parents:
                if seg not in self._node(p).children:
                    raise IndexCorruptionError(f"{seg.label()} names a non-parent S{p}")
            if not seg.parents:
                raise IndexCorruptionError(f"{seg.label()} has no parent")
            if seg.alpha < 1:
                raise IndexCorruptionError(f"{seg.label()} has alpha {seg.alpha}")
            for c in seg.children:
                if seg.residual & self.reconstruct(c):
                    raise IndexCorruptionError(f"{seg.label()} repeats tuples of {c.label()}")
            if not self.linked and (seg.children or not seg.is_root):
                raise IndexCorruptionError("flat cache holds a link")
        total = sum(len(s.residual) for s in self.segments.values())
        if total != self.used:
            raise IndexCorruptionError(f"used={self.used} but residuals hold {total}")
        if self.used > self.budget:
            raise IndexCorruptionError(f"used={self.used} over budget {self.budget}")
        if oracle is not None:
            for seg in self.segments.values():
                got = self.reconstruct(seg)
                if got != set(oracle(seg.attrs)):
                    raise IndexCorruptionError(f"{seg.label()} reconstructs a wrong skyline")
                if len(got) != seg.beta:
                    raise IndexCorruptionError(f"{seg.label()} has stale size {seg.beta}")


def budget_for(fraction: float, n: int) -> int:
    """Tuple budget for a cache sized as a fraction of the relation."""
    if not 0 < fraction <= 1:
        raise ValueError("cache fraction must be in (0, 1]")
    return math.ceil(fraction * n)
