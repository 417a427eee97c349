"""Precision, recall and F-measure of recovered directed edges."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable

from .graph import CausalGraph, DataError, GroundTruth
from .simulate import TsGroundTruth
from .timeseries import LagGraph


@dataclass(frozen=True)
class Score:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f_measure: float

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "Score":
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return cls(tp, fp, fn, precision, recall, f)

    def to_json(self) -> dict:
        return asdict(self)


def _count(truth: set, est: set) -> Score:
    return Score.from_counts(len(truth & est), len(est - truth), len(truth - est))


def score_directed(truth: GroundTruth, est: CausalGraph,
                   excluded: Iterable[tuple[str, str]] = ()) -> Score:
    """Edge-level scores; ordered pairs in ``excluded`` are ignored on both sides."""
    unknown = set(est.variables) - set(truth.variables)
    if unknown:
        raise DataError(f"estimate has variables missing from the truth: {sorted(unknown)}")
    excluded = set(excluded)
    for a, b in excluded:
        if a not in truth.variables or b not in truth.variables:
            raise DataError(f"excluded pair with unknown variable: ({a}, {b})")
    true_edges = truth.directed - excluded
    est_edges = set(est.directed) - excluded
    return _count(true_edges, est_edges)


def score_lag_graph(truth: TsGroundTruth | LagGraph, est: LagGraph,
                    excluded: Iterable[tuple[str, int, str]] = ()) -> Score:
    """Scores over ``(cause, lag, effect)`` triples; a wrong lag is both a miss and a false hit."""
    unknown = set(est.variables) - set(truth.variables)
    if unknown:
        raise DataError(f"estimate has variables missing from the truth: {sorted(unknown)}")
    excluded = set(excluded)
    return _count(set(truth.edges) - excluded, set(est.edges) - excluded)


def score_dashed(truth: GroundTruth, est: CausalGraph) -> Score:
    """Diagnostic: dashed pairs against the confounded and intermediate pairs."""
    hidden = set(truth.confounded_pairs) | {frozenset(p) for p in truth.intermediate_pairs}
    return _count(hidden, set(est.dashed))
