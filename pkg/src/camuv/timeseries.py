"""Time-series discovery by window embedding plus time-priority prior knowledge."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .discovery import DiscoveryConfig, discover
from .graph import CausalGraph, DataError, Dataset, PriorKnowledge

_LAG_RE = re.compile(r"^(?P<var>.+)_lag(?P<lag>\d+)$")

Node = tuple[str, int]


def lag_name(var: str, lag: int) -> str:
    return f"{var}_lag{lag}"


@dataclass(frozen=True)
class TimeEmbedding:
    variables: tuple[str, ...]
    max_lag: int

    @property
    def q(self) -> int:
        return len(self.variables)

    @property
    def r(self) -> int:
        return self.max_lag

    @property
    def column_map(self) -> dict[Node, str]:
        return {(v, lag): lag_name(v, lag) for lag in range(self.r + 1) for v in self.variables}

    @property
    def columns(self) -> tuple[str, ...]:
        # latest time slice first, then one block per lag
        return tuple(lag_name(v, lag) for lag in range(self.r + 1) for v in self.variables)

    def node(self, column: str) -> Node:
        m = _LAG_RE.match(column)
        if not m or m["var"] not in self.variables or int(m["lag"]) > self.r:
            raise KeyError(f"not an embedded column: {column!r}")
        return m["var"], int(m["lag"])


def embed(data: Dataset, r: int) -> tuple[Dataset, TimeEmbedding]:
    """Stack lagged copies: row ``s`` holds each variable at time ``s + r - lag``."""
    if r < 1:
        raise DataError("max lag must be at least 1")
    if data.n <= r:
        raise DataError(f"need more than {r} samples to embed with max lag {r}, got {data.n}")
    emb = TimeEmbedding(data.column_names, r)
    n = data.n
    blocks = [data.values[r - lag:n - lag] for lag in range(r + 1)]
    return Dataset(emb.columns, np.hstack(blocks)), emb


def de_embed(embedded: Dataset, emb: TimeEmbedding) -> np.ndarray:
    """Original rows ``r .. n-1`` recovered from the lag-0 block."""
    return embedded.select(lag_name(v, 0) for v in emb.variables).values


def build_time_prior(emb: TimeEmbedding) -> PriorKnowledge:
    """A later time slice can never cause an earlier one."""
    pairs = set()
    for lag_c in range(emb.r + 1):
        for lag_e in range(lag_c + 1, emb.r + 1):
            for a in emb.variables:
                for b in emb.variables:
                    pairs.add((lag_name(a, lag_c), lag_name(b, lag_e)))
    return PriorKnowledge(frozenset(pairs), frozenset(emb.columns))


@dataclass(frozen=True)
class LagGraph:
    """Edges ``(cause, lag, effect)`` into time ``t`` and dashed pairs of (variable, lag) nodes."""

    variables: tuple[str, ...]
    max_lag: int
    edges: frozenset[tuple[str, int, str]] = frozenset()
    dashed: frozenset[frozenset[Node]] = frozenset()
    diagnostics: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "edges", frozenset((str(a), int(lag), str(b)) for a, lag, b in self.edges))
        object.__setattr__(self, "dashed", frozenset(frozenset(tuple(x) for x in d) for d in self.dashed))

    def validate(self) -> list[str]:
        problems = []
        for a, lag, b in self.edges:
            if lag < 0 or lag > self.max_lag:
                problems.append(f"lag out of range: {a} -[{lag}]-> {b}")
            if lag == 0 and a == b:
                problems.append(f"contemporaneous self-loop on {a}")
        for pair in self.dashed:
            if len(pair) != 2 or min(lag for _, lag in pair) != 0:
                problems.append(f"dashed pair without a lag-0 member: {sorted(pair)}")
        return problems

    def contemporaneous_cycles(self) -> bool:
        adj: dict[str, set[str]] = {v: set() for v in self.variables}
        for a, lag, b in self.edges:
            if lag == 0:
                adj.setdefault(a, set()).add(b)
        state: dict[str, int] = {}

        def visit(v) -> bool:
            state[v] = 1
            for w in adj.get(v, ()):
                if state.get(w) == 1 or (w not in state and visit(w)):
                    return True
            state[v] = 2
            return False

        return any(v not in state and visit(v) for v in adj)

    def _sorted_edges(self):
        return sorted(self.edges, key=lambda e: (e[1], e[0], e[2]))

    def _sorted_dashed(self):
        return sorted((sorted(d, key=lambda x: (x[1], x[0])) for d in self.dashed),
                      key=lambda d: [(x[1], x[0]) for x in d])

    def to_json(self) -> dict:
        return {
            "variables": list(self.variables),
            "max_lag": self.max_lag,
            "edges": [{"cause": a, "lag": lag, "effect": b} for a, lag, b in self._sorted_edges()],
            "dashed": [[{"var": v, "lag": lag} for v, lag in d] for d in self._sorted_dashed()],
            "diagnostics": list(self.diagnostics),
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "LagGraph":
        try:
            edges = frozenset((e["cause"], int(e["lag"]), e["effect"]) for e in obj.get("edges", []))
            dashed = frozenset(frozenset((x["var"], int(x["lag"])) for x in d) for d in obj.get("dashed", []))
            return cls(tuple(obj["variables"]), int(obj["max_lag"]), edges, dashed)
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed lag-graph JSON: {exc}") from exc

    def to_dot(self, name: str = "G") -> str:
        def node(v, lag):
            return f'"{v}(t)"' if lag == 0 else f'"{v}(t-{lag})"'

        lines = [f"digraph {name} {{", "  rankdir=LR;"]
        for lag in range(self.max_lag, -1, -1):
            lines.append(f"  subgraph cluster_lag{lag} {{ label=\"{'t' if lag == 0 else f't-{lag}'}\"; "
                         + " ".join(f"{node(v, lag)};" for v in self.variables) + " }")
        lines += [f"  {node(a, lag)} -> {node(b, 0)};" for a, lag, b in self._sorted_edges()]
        lines += [f"  {node(*d[0])} -> {node(*d[1])} [style=dashed, dir=none];" for d in self._sorted_dashed()]
        lines.append("}")
        return "\n".join(lines) + "\n"


def collapse_to_lag_graph(window_graph: CausalGraph, emb: TimeEmbedding) -> LagGraph:
    """Keep edges into the latest slice and dashed pairs touching it."""
    edges, dashed, notes = set(), set(), []
    for parent, child in window_graph.directed:
        pv, pl = emb.node(parent)
        cv, cl = emb.node(child)
        if cl == 0:
            edges.add((pv, pl, cv))
        else:
            notes.append(f"dropped edge between lagged copies: {parent} -> {child}")
    for a, b in window_graph.dashed_pairs():
        na, nb = emb.node(a), emb.node(b)
        if na[1] == 0 or nb[1] == 0:
            dashed.add(frozenset((na, nb)))
    g = LagGraph(emb.variables, emb.r, frozenset(edges), frozenset(dashed))
    if g.contemporaneous_cycles():
        notes.append("contemporaneous edges form a cycle")
    return LagGraph(g.variables, g.max_lag, g.edges, g.dashed, tuple(notes))


def lagged_prior(extra: PriorKnowledge | Iterable[tuple[Node, Node]], emb: TimeEmbedding) -> PriorKnowledge:
    """Prior knowledge over (variable, lag) nodes, mapped to embedded column names."""
    if isinstance(extra, PriorKnowledge):
        pairs = extra.forbidden
    else:
        pairs = frozenset((lag_name(*a), lag_name(*b)) for a, b in extra)
    for pair in pairs:
        for col in pair:
            emb.node(col)
    return PriorKnowledge(frozenset(pairs), frozenset(emb.columns))


def discover_ts(
    data: Dataset,
    r: int = 2,
    alpha: float = 0.01,
    d: int = 2,
    extra_prior: PriorKnowledge | Iterable[tuple[Node, Node]] = (),
) -> LagGraph:
    """Lagged and contemporaneous causes of each series, up to ``r`` steps back."""
    embedded, emb = embed(data, r)
    prior = build_time_prior(emb) | lagged_prior(extra_prior, emb)
    window = discover(embedded, DiscoveryConfig(alpha, d, prior))
    return collapse_to_lag_graph(window, emb)
