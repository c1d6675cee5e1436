"""Relations and query workloads for the benchmark."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import Preference, Relation, SchemaError, as_query, dedupe_rows


@dataclass(frozen=True)
class GenSpec:
    n: int
    d: int
    distribution: str = "independent"
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be at least 1")
        if self.distribution != "independent":
            raise ValueError(f"unsupported distribution {self.distribution!r}")


@dataclass(frozen=True)
class WorkloadSpec:
    count: int
    min_attrs: int = 2
    max_attrs: int | None = None
    repeat_prob: float = 0.3
    seed: int = 0

    def bounds(self, d: int) -> tuple[int, int]:
        hi = d if self.max_attrs is None else self.max_attrs
        if not 1 <= self.min_attrs <= hi <= d:
            raise ValueError(f"need 1 <= min_attrs <= max_attrs <= d, got "
                             f"{self.min_attrs}, {hi}, {d}")
        if not 0 <= self.repeat_prob <= 1:
            raise ValueError("repeat_prob must lie in [0, 1]")
        return self.min_attrs, hi


def generate(spec: GenSpec, prefs: Sequence[Preference | str] = ()) -> Relation:
    """Independent uniform data on [0, 1)^d, duplicates removed."""
    rng = np.random.default_rng(spec.seed)
    values, dups = dedupe_rows(rng.random((spec.n, spec.d)))
    return Relation(values, tuple(prefs), meta={"duplicates": dups, "dropped": 0})


def _parse(token: str) -> float:
    x = float(token)
    if not math.isfinite(x):
        raise ValueError(token)
    return x


def load_csv(path: str | Path, columns: Sequence[str],
             prefs: Sequence[Preference | str] = ()) -> Relation:
    """Read the selected numeric columns of a CSV file with a header row.

    Rows with a missing or unparseable value in a selected column are
    dropped, then exact duplicates (keeping the first).  The counts land in
    ``relation.meta["dropped"]`` and ``relation.meta["duplicates"]``.
    """
    columns = list(columns)
    if not columns:
        raise SchemaError("no columns selected")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file, header expected") from None
        missing = [c for c in columns if c not in header]
        if missing:
            raise SchemaError(f"{path}: unknown columns {missing}")
        pos = [header.index(c) for c in columns]
        rows, dropped = [], 0
        for rec in reader:
            if not rec:
                continue
            try:
                rows.append([_parse(rec[i]) for i in pos])
            except (ValueError, IndexError):
                dropped += 1
    if not rows:
        raise SchemaError(f"{path}: no rows survive parsing")
    values, dups = dedupe_rows(np.array(rows))
    return Relation(values, tuple(prefs), tuple(columns),
                    meta={"dropped": dropped, "duplicates": dups})


def save_csv(rel: Relation, dest) -> None:
    """Write ``rel`` with a header row to a path or an open text file."""
    if isinstance(dest, (str, Path)):
        with open(dest, "w", newline="") as fh:
            return save_csv(rel, fh)
    w = csv.writer(dest, lineterminator="\n")
    w.writerow(rel.names)
    for row in rel.values:
        w.writerow([repr(float(x)) for x in row])


def make_workload(spec: WorkloadSpec, d: int) -> list[frozenset[int]]:
    """Random attribute subsets; with ``repeat_prob`` an earlier query recurs."""
    lo, hi = spec.bounds(d)
    rng = np.random.default_rng(spec.seed)
    out: list[frozenset[int]] = []
    for _ in range(spec.count):
        if out and rng.random() < spec.repeat_prob:
            out.append(out[rng.integers(len(out))])
        else:
            k = int(rng.integers(lo, hi + 1))
            out.append(frozenset(rng.choice(d, size=k, replace=False).tolist()))
    return out


def read_workload(path: str | Path, d: int | None = None) -> list[frozenset[int]]:
    """One query per line as comma-separated attribute ids; ``#`` comments."""
    out = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(as_query((int(t) for t in line.split(",") if t.strip()), d))
    return out


def write_workload(queries: Iterable[Iterable[int]], path: str | Path) -> None:
    Path(path).write_text("".join(",".join(map(str, sorted(q))) + "\n" for q in queries))
