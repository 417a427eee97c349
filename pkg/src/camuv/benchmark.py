"""Repeated simulate-discover-score sweeps over prior-knowledge size or sample size."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .discovery import DiscoveryConfig, ResidualOracle, discover
from .graph import PriorKnowledge
from .metrics import score_directed, score_lag_graph
from .simulate import ScmConfig, TsScmConfig, gen_camuv_instance, gen_ts_instance
from .timeseries import discover_ts

log = logging.getLogger(__name__)

FIELDS = ("protocol", "rep", "seed", "n", "pk_count", "tp", "fp", "fn", "precision", "recall", "f_measure")
N_PK = 4


@dataclass(frozen=True)
class Row:
    protocol: str
    rep: int
    seed: int
    n: int
    pk_count: int
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f_measure: float

    def as_list(self) -> list:
        return [getattr(self, f) for f in FIELDS]


def pk_candidates(truth, seed: int, k: int = N_PK) -> list[tuple[str, str]]:
    """First ``k`` true edges of a seed-determined shuffle."""
    edges = sorted(truth.directed)
    rng = np.random.default_rng([seed, 1])
    return [edges[i] for i in rng.permutation(len(edges))[:k]]


def pk_sweep_rep(rep: int, seed: int, n: int, alpha: float = 0.01, d: int = 2) -> list[Row]:
    data, truth = gen_camuv_instance(ScmConfig(n_samples=n, seed=seed))
    known = pk_candidates(truth, seed)
    # known pairs are not scored; drop both orientations of each pair
    excluded = {e for a, b in known for e in ((a, b), (b, a))}
    oracle = ResidualOracle(data)
    rows = []
    for k in range(len(known) + 1):
        # knowing a -> b means b is not a cause of a
        prior = PriorKnowledge(frozenset((b, a) for a, b in known[:k]))
        g = discover(data, DiscoveryConfig(alpha, d, prior), oracle=oracle)
        s = score_directed(truth, g, excluded)
        rows.append(Row("pk-sweep", rep, seed, n, k, s.tp, s.fp, s.fn, s.precision, s.recall, s.f_measure))
    return rows


def ts_sweep_rep(rep: int, seed: int, n: int, alpha: float = 0.01, d: int = 2, r: int = 2) -> list[Row]:
    data, truth = gen_ts_instance(TsScmConfig(n_samples=n, seed=seed, max_lag=r))
    g = discover_ts(data, r, alpha, d)
    s = score_lag_graph(truth, g)
    return [Row("ts-sweep", rep, seed, n, 0, s.tp, s.fp, s.fn, s.precision, s.recall, s.f_measure)]


def _star(args):
    fn, a = args
    return fn(*a)


def n_workers() -> int:
    env = os.environ.get("CAMUV_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _run(tasks: Sequence[tuple[Callable, tuple]], workers: int | None) -> list[Row]:
    workers = workers or n_workers()
    if workers == 1 or len(tasks) == 1:
        results = []
        for fn, a in tasks:
            results.append(fn(*a))
            log.info("finished %s%s", fn.__name__, a[:3])
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            results = list(pool.map(_star, tasks))
    return [row for rows in results for row in rows]


def pk_sweep(reps: int, n: int = 1000, seed: int = 0, alpha: float = 0.01, d: int = 2,
             workers: int | None = None) -> list[Row]:
    if reps < 1:
        raise ValueError("reps must be at least 1")
    tasks = [(pk_sweep_rep, (rep, seed + rep, n, alpha, d)) for rep in range(reps)]
    return _run(tasks, workers)


def ts_sweep(reps: int, sizes: Sequence[int] = (200, 2000), seed: int = 0, alpha: float = 0.01,
             d: int = 2, r: int = 2, workers: int | None = None) -> list[Row]:
    if reps < 1:
        raise ValueError("reps must be at least 1")
    tasks = [(ts_sweep_rep, (rep, seed + rep, n, alpha, d, r)) for n in sizes for rep in range(reps)]
    return _run(tasks, workers)


def summarize(rows: Sequence[Row], by: str) -> dict:
    """Mean precision, recall and F-measure grouped by ``pk_count`` or ``n``."""
    out: dict = {}
    for key in sorted({getattr(r, by) for r in rows}):
        group = [r for r in rows if getattr(r, by) == key]
        out[key] = {m: float(np.mean([getattr(r, m) for r in group]))
                    for m in ("precision", "recall", "f_measure")}
        out[key]["count"] = len(group)
    return out
