"""Relations, queries, Pareto dominance and the all-pairs skyline oracle."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numba
import numpy as np


class SchemaError(ValueError):
    """Raised when an attribute id or tuple does not fit the relation schema."""


class Preference(enum.Enum):
    MIN = "min"
    MAX = "max"

    @classmethod
    def parse(cls, token: str | Preference) -> Preference:
        if isinstance(token, Preference):
            return token
        try:
            return cls(token.strip().lower())
        except ValueError:
            raise SchemaError(f"unknown preference {token!r} (expected min or max)") from None


@dataclass(frozen=True)
class Tuple:
    tid: int
    values: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class Relation:
    """An immutable table of ``n`` tuples over ``d`` numeric attributes.

    The tuple id of a row is its position in ``values``.  Raw values are kept
    exactly as loaded; preferences are applied only when comparing.

    Parameters
    ----------
    values : array-like, shape (n, d)
        Attribute values. Must be finite.
    prefs : sequence of Preference, optional
        One direction per column. Defaults to MIN everywhere.
    names : sequence of str, optional
        Column names, used by the CSV round trip.
    """

    values: np.ndarray
    prefs: tuple[Preference, ...] = ()
    names: tuple[str, ...] = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim == 1 and values.size == 0:
            values = values.reshape(0, len(self.prefs) or 0)
        if values.ndim != 2:
            raise SchemaError(f"relation values must be 2-d, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise SchemaError("relation values must be finite")
        values.setflags(write=False)
        d = values.shape[1]
        prefs = tuple(Preference.parse(p) for p in self.prefs) or (Preference.MIN,) * d
        if len(prefs) != d:
            raise SchemaError(f"{len(prefs)} preferences for {d} attributes")
        names = tuple(self.names) or tuple(f"a{i}" for i in range(d))
        if len(names) != d:
            raise SchemaError(f"{len(names)} column names for {d} attributes")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "prefs", prefs)
        object.__setattr__(self, "names", names)

        # comparison view: every column oriented so that smaller is preferred
        signs = np.array([1.0 if p is Preference.MIN else -1.0 for p in prefs])
        oriented = values * signs if d else values.copy()
        oriented.setflags(write=False)
        object.__setattr__(self, "_oriented", oriented)
        if len(values):
            lo, hi = values.min(axis=0), values.max(axis=0)
        else:
            lo, hi = np.zeros(d), np.zeros(d)
        object.__setattr__(self, "_bounds", (lo, hi))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def __len__(self) -> int:
        return self.n

    def row(self, tid: int) -> Tuple:
        return Tuple(tid, tuple(float(v) for v in self.values[tid]))

    @property
    def oriented(self) -> np.ndarray:
        """Values with MAX columns negated, so smaller is always better."""
        return self._oriented

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-column (min, max) of the raw values."""
        return self._bounds

    def columns(self, attrs: Iterable[int]) -> np.ndarray:
        """Contiguous oriented sub-matrix for the given attributes."""
        cols = sorted(attrs)
        check_attrs(cols, self.d)
        return np.ascontiguousarray(self._oriented[:, cols])


def check_attrs(attrs: Iterable[int], d: int) -> None:
    for a in attrs:
        if not 0 <= a < d:
            raise SchemaError(f"attribute id {a} out of range for d={d}")


def as_query(attrs: Iterable[int], d: int | None = None) -> frozenset[int]:
    """Normalize an attribute collection into a query (a non-empty frozenset)."""
    q = frozenset(int(a) for a in attrs)
    if not q:
        raise SchemaError("a query needs at least one attribute")
    if d is not None:
        check_attrs(q, d)
    elif min(q) < 0:
        raise SchemaError(f"negative attribute id in {sorted(q)}")
    return q


def dominates(u: Sequence[float] | Tuple, v: Sequence[float] | Tuple,
              attrs: Iterable[int], prefs: Sequence[Preference]) -> bool:
    """True iff ``u`` is at least as good as ``v`` on every attribute in
    ``attrs`` and strictly better on one of them."""
    u = u.values if isinstance(u, Tuple) else u
    v = v.values if isinstance(v, Tuple) else v
    attrs = list(attrs)
    if not attrs:
        raise SchemaError("dominance needs at least one attribute")
    if len(u) != len(v) or len(u) != len(prefs):
        raise SchemaError("tuples do not conform to the relation schema")
    check_attrs(attrs, len(prefs))
    strict = False
    for a in attrs:
        x, y = u[a], v[a]
        if Preference.parse(prefs[a]) is Preference.MAX:
            x, y = -x, -y
        if x > y:
            return False
        if x < y:
            strict = True
    return strict


@numba.njit(cache=True)
def _undominated_mask(vals):
    # all pairs, no ordering tricks: row i survives iff no row j dominates it
    n, k = vals.shape
    keep = np.ones(n, dtype=np.bool_)
    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            worse = False
            strict = False
            for c in range(k):
                if vals[j, c] > vals[i, c]:
                    worse = True
                    break
                if vals[j, c] < vals[i, c]:
                    strict = True
            if not worse and strict:
                keep[i] = False
                break
    return keep


def brute_force_skyline(rel: Relation, q: Iterable[int]) -> frozenset[int]:
    """Skyline of ``rel`` on ``q`` by checking every ordered pair of tuples.

    This is the ground truth the rest of the package is tested against.
    """
    q = as_query(q, rel.d)
    if rel.n == 0:
        return frozenset()
    keep = _undominated_mask(rel.columns(q))
    return frozenset(np.flatnonzero(keep).tolist())


def validate_distinct_values(rel: Relation) -> list[tuple[int, int]]:
    """Pairs ``(first_tid, dup_tid)`` of rows identical on all attributes.

    An empty list means the distinct value condition holds.
    """
    seen: dict[bytes, int] = {}
    pairs = []
    for tid, row in enumerate(rel.values):
        key = (row + 0.0).tobytes()
        if key in seen:
            pairs.append((seen[key], tid))
        else:
            seen[key] = tid
    return pairs


def dedupe_rows(values: np.ndarray) -> tuple[np.ndarray, int]:
    """Drop exact duplicate rows, keeping the first occurrence, in order."""
    values = np.asarray(values, dtype=np.float64)
    if len(values) == 0:
        return values, 0
    # -0.0 and 0.0 compare equal but differ bytewise
    values = values + 0.0
    _, first = np.unique(values, axis=0, return_index=True)
    first.sort()
    return values[first], len(values) - len(first)
