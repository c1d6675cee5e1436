"""Benchmark harness: no cache (nc), flat cache (ni) and indexed cache (index).

Subcommands::

    skycache generate      write a synthetic relation as CSV
    skycache run           run a workload in one mode and write per-query metrics
    skycache dump-index    run a workload with the index and print the DAG
    skycache replay-fig2   the scripted nine-query insertion walkthrough

Every option can also come from ``--config FILE`` holding ``key=value`` lines
(keys spelled like the long flags); flags given on the command line win.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .cache import Mode, SkylineCache
from .core import Relation, brute_force_skyline
from .data import GenSpec, WorkloadSpec, generate, load_csv, make_workload, read_workload, save_csv
from .index import QueryKind

COLUMNS = ["queryIndex", "attrs", "class", "resultSize", "baseReads", "domTests",
           "elapsedMicros", "cacheUsed", "evictions"]

FIG2_SEQUENCE = [{1, 2}, {1, 2, 3}, {3, 4}, {5, 6}, {1, 2}, {2, 3}, {4, 5}, {6, 7}, {8, 9}]


class VerificationError(AssertionError):
    pass


@dataclass
class RunConfig:
    mode: str = "index"
    cache_frac: float = 0.05
    n: int = 100_000
    d: int = 6
    seed: int = 0
    csv: str | None = None
    columns: list[str] = field(default_factory=list)
    prefs: list[str] = field(default_factory=list)
    workload: str | None = None
    queries: int = 100
    repeat_prob: float = 0.3
    min_attrs: int = 2
    max_attrs: int | None = None
    out: str | None = None
    verify: bool = False

    def validate(self) -> None:
        Mode.parse(self.mode)
        if Mode.parse(self.mode) is not Mode.NC and not 0 < self.cache_frac <= 1:
            raise ValueError("--cache-frac must lie in (0, 1]")
        if self.csv and not self.columns:
            raise ValueError("--csv needs --columns")

    def relation(self) -> Relation:
        if self.csv:
            return load_csv(self.csv, self.columns, self.prefs)
        return generate(GenSpec(self.n, self.d, seed=self.seed), self.prefs)

    def queries_for(self, rel: Relation) -> list[frozenset[int]]:
        if self.workload:
            return read_workload(self.workload, rel.d)
        spec = WorkloadSpec(self.queries, self.min_attrs, self.max_attrs,
                            self.repeat_prob, seed=self.seed + 1)
        return make_workload(spec, rel.d)


def run_benchmark(cfg: RunConfig, rel: Relation | None = None,
                  queries: list[frozenset[int]] | None = None,
                  ) -> tuple[list[dict], SkylineCache]:
    """Run the workload sequentially; one metrics row per query.

    With ``cfg.verify`` every answer is compared with the all-pairs oracle
    and a mismatch raises :class:`VerificationError`.
    """
    cfg.validate()
    rel = rel if rel is not None else cfg.relation()
    queries = queries if queries is not None else cfg.queries_for(rel)
    cache = SkylineCache(rel, cfg.mode, cfg.cache_frac, check_seeds=cfg.verify)
    truth: dict[frozenset[int], frozenset[int]] = {}
    rows = []
    for i, q in enumerate(queries):
        ans = cache.query(q)
        if cfg.verify:
            if q not in truth:
                truth[q] = brute_force_skyline(rel, q)
            if ans.result != truth[q]:
                raise VerificationError(
                    f"query {i} {sorted(q)} ({ans.kind.name}): {len(ans.result)} tuples, "
                    f"oracle has {len(truth[q])}")
        rows.append({
            "queryIndex": i,
            "attrs": ";".join(map(str, sorted(q))),
            "class": ans.kind.name,
            "resultSize": len(ans.result),
            "baseReads": ans.metrics.base_reads,
            "domTests": ans.metrics.dom_tests,
            "elapsedMicros": round(ans.metrics.elapsed * 1e6),
            "cacheUsed": cache.index.used if cache.index is not None else 0,
            "evictions": len(ans.evicted),
        })
    return rows, cache


def mean_row(rows: list[dict]) -> dict:
    out = {"queryIndex": "mean", "attrs": "", "class": ""}
    for col in COLUMNS[3:]:
        out[col] = sum(r[col] for r in rows) / len(rows) if rows else 0.0
    return out


def write_rows(rows: list[dict], fh) -> None:
    w = csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    w.writerow(mean_row(rows))


def replay_fig2(rel: Relation | None = None, stats: bool = False
                ) -> tuple[list[QueryKind], SkylineCache]:
    """Issue the nine scripted queries against an unbounded indexed cache."""
    rel = rel if rel is not None else generate(GenSpec(1000, 10, seed=0))
    cache = SkylineCache(rel, Mode.INDEX, budget=rel.n * len(FIG2_SEQUENCE))
    kinds = [cache.query(q).kind for q in FIG2_SEQUENCE]
    return kinds, cache


# --- argument handling ------------------------------------------------------

def read_config(path: str) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _flag(text: str | bool) -> bool:
    if isinstance(text, bool):
        return text
    return text.strip().lower() in {"1", "true", "yes", "on"}


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=[m.value for m in Mode], default="index")
    p.add_argument("--n", type=int, default=100_000, help="cardinality of generated data")
    p.add_argument("--d", type=int, default=6, help="dimensionality of generated data")
    p.add_argument("--cache-frac", type=float, default=0.05,
                   help="cache budget as a fraction of the relation size")
    p.add_argument("--queries", type=int, default=100)
    p.add_argument("--repeat-prob", type=float, default=0.3)
    p.add_argument("--min-attrs", type=int, default=2)
    p.add_argument("--max-attrs", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", default=None, help="load the relation from this CSV file")
    p.add_argument("--columns", type=_csv_list, default=[])
    p.add_argument("--prefs", type=_csv_list, default=[],
                   help="min/max per column, comma-separated (default all min)")
    p.add_argument("--workload", default=None, help="file with one query per line, e.g. 1,2,3")
    p.add_argument("--out", default=None, help="output CSV (default stdout)")
    p.add_argument("--verify", action="store_true", default=False,
                   help="check every answer against the all-pairs oracle")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skycache", description=__doc__.split("\n\n")[0])
    parser.add_argument("--config", default=None, help="key=value file with option defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic relation as CSV")
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--d", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)

    p = sub.add_parser("run", help="run a workload and write per-query metrics")
    _add_run_options(p)

    p = sub.add_parser("dump-index", help="run a workload with the index and print it")
    _add_run_options(p)
    p.add_argument("--no-stats", dest="stats", action="store_false", default=True)

    p = sub.add_parser("replay-fig2", help="scripted nine-query index walkthrough")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--stats", action="store_true", default=False)
    return parser


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    parser = build_parser()
    pre, _ = parser.parse_known_args(argv)
    if pre.config:
        conf = read_config(pre.config)
        sub = parser._subparsers._group_actions[0].choices[pre.command]
        known = {a.dest: a for a in sub._actions}
        unknown = sorted(set(conf) - set(known))
        if unknown:
            parser.error(f"unknown config keys: {', '.join(unknown)}")
        defaults = {}
        for key, value in conf.items():
            action = known[key]
            if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                defaults[key] = _flag(value)
            elif action.type is not None:
                defaults[key] = action.type(value)
            else:
                defaults[key] = value
        sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def config_from(args: argparse.Namespace) -> RunConfig:
    return RunConfig(mode=args.mode, cache_frac=args.cache_frac, n=args.n, d=args.d,
                     seed=args.seed, csv=args.csv, columns=args.columns, prefs=args.prefs,
                     workload=args.workload, queries=args.queries,
                     repeat_prob=args.repeat_prob, min_attrs=args.min_attrs,
                     max_attrs=args.max_attrs, out=args.out, verify=args.verify)


def _emit(text: str, out: str | None, stdout) -> None:
    if out:
        Path(out).write_text(text)
    else:
        stdout.write(text)


def main(argv: Sequence[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = parse_args(argv)
    try:
        if args.command == "generate":
            rel = generate(GenSpec(args.n, args.d, seed=args.seed))
            save_csv(rel, args.out or stdout)
        elif args.command == "run":
            cfg = config_from(args)
            rows, _ = run_benchmark(cfg)
            buf = io.StringIO()
            write_rows(rows, buf)
            _emit(buf.getvalue(), cfg.out, stdout)
        elif args.command == "dump-index":
            cfg = config_from(args)
            cfg.mode = "index"
            _, cache = run_benchmark(cfg)
            _emit(cache.index.dump(stats=args.stats), cfg.out, stdout)
        elif args.command == "replay-fig2":
            rel = generate(GenSpec(args.n, 10, seed=args.seed))
            kinds, cache = replay_fig2(rel)
            for q, kind in zip(FIG2_SEQUENCE, kinds):
                stdout.write("{%s} %s\n" % (",".join(map(str, sorted(q))), kind.name))
            stdout.write(cache.index.dump(stats=args.stats))
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"skycache: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
