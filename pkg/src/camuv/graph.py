"""Datasets, prior knowledge and mixed directed/dashed graphs."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np


class DataError(ValueError):
    """Malformed input data, prior knowledge or graph files."""


@dataclass(frozen=True)
class Dataset:
    column_names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        names = tuple(str(c) for c in self.column_names)
        if values.ndim != 2 or values.shape[0] == 0 or values.shape[1] == 0:
            raise DataError(f"dataset must be a non-empty 2-d matrix, got shape {values.shape}")
        if len(names) != values.shape[1]:
            raise DataError("number of column names does not match number of columns")
        if len(set(names)) != len(names):
            raise DataError("duplicate column names")
        if not np.all(np.isfinite(values)):
            raise DataError("dataset contains NaN or Inf")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.column_names.index(name)]
        except ValueError:
            raise KeyError(f"unknown column {name!r}") from None

    def as_dict(self) -> dict[str, np.ndarray]:
        return {c: self.values[:, i] for i, c in enumerate(self.column_names)}

    def select(self, names: Iterable[str]) -> "Dataset":
        names = list(names)
        idx = [self.column_names.index(c) for c in names]
        return Dataset(tuple(names), self.values[:, idx])

    @classmethod
    def from_csv(cls, path: str | Path) -> "Dataset":
        try:
            with open(path, newline="", encoding="utf-8") as fh:
                rows = list(csv.reader(fh))
        except UnicodeDecodeError as exc:
            raise DataError(f"{path}: not UTF-8 text") from exc
        rows = [r for r in rows if r]
        if len(rows) < 2:
            raise DataError(f"{path}: need a header row and at least one data row")
        header = [h.strip() for h in rows[0]]
        try:
            values = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
        except ValueError as exc:
            raise DataError(f"{path}: non-numeric value ({exc})") from exc
        if values.ndim != 2 or values.shape[1] != len(header):
            raise DataError(f"{path}: ragged rows")
        return cls(tuple(header), values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.column_names)
        for row in self.values:
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


@dataclass(frozen=True)
class PriorKnowledge:
    """Ordered pairs ``(a, b)``: ``a`` is neither a direct nor an indirect cause of ``b``."""

    forbidden: frozenset[tuple[str, str]] = frozenset()
    variables: frozenset[str] | None = None

    def __post_init__(self):
        pairs = frozenset((str(a), str(b)) for a, b in self.forbidden)
        for a, b in pairs:
            if a == b:
                raise DataError(f"prior knowledge pair with identical ends: {a!r}")
        if self.variables is not None:
            unknown = {v for pair in pairs for v in pair} - self.variables
            if unknown:
                raise DataError(f"prior knowledge refers to unknown variables: {sorted(unknown)}")
        object.__setattr__(self, "forbidden", pairs)

    def bind(self, variables: Iterable[str]) -> "PriorKnowledge":
        return PriorKnowledge(self.forbidden, frozenset(variables))

    def __or__(self, other: "PriorKnowledge") -> "PriorKnowledge":
        variables = None
        if self.variables is not None and other.variables is not None:
            variables = self.variables | other.variables
        return PriorKnowledge(self.forbidden | other.forbidden, variables)

    def __len__(self) -> int:
        return len(self.forbidden)

    def to_json(self) -> dict:
        return {"forbidden": [list(p) for p in sorted(self.forbidden)]}

    @classmethod
    def from_json(cls, obj: Mapping) -> "PriorKnowledge":
        try:
            pairs = [(a, b) for a, b in obj.get("forbidden", [])]
        except (TypeError, ValueError, AttributeError) as exc:
            raise DataError("prior knowledge must look like {'forbidden': [[cause, effect], ...]}") from exc
        return cls(frozenset(pairs))


def is_forbidden(pk: PriorKnowledge, cause: str, effect: str) -> bool:
    if pk.variables is not None:
        for v in (cause, effect):
            if v not in pk.variables:
                raise KeyError(f"unknown variable {v!r}")
    return (cause, effect) in pk.forbidden


@dataclass(frozen=True)
class CausalGraph:
    """Directed edges parent -> child plus unordered dashed pairs (UCP/UBP)."""

    variables: tuple[str, ...]
    parents: Mapping[str, frozenset[str]] = field(default_factory=dict)
    dashed: frozenset[frozenset[str]] = frozenset()

    def __post_init__(self):
        parents = {v: frozenset(self.parents.get(v, ())) for v in self.variables}
        extra = set(self.parents) - set(self.variables)
        if extra:
            raise DataError(f"parents given for unknown variables {sorted(extra)}")
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "parents", parents)
        object.__setattr__(self, "dashed", frozenset(frozenset(d) for d in self.dashed))

    @property
    def directed(self) -> list[tuple[str, str]]:
        order = {v: i for i, v in enumerate(self.variables)}
        edges = [(p, c) for c, ps in self.parents.items() for p in ps]
        return sorted(edges, key=lambda e: (order.get(e[0], -1), order.get(e[1], -1), e))

    def dashed_pairs(self) -> list[tuple[str, str]]:
        order = {v: i for i, v in enumerate(self.variables)}
        pairs = [tuple(sorted(d, key=lambda v: (order.get(v, -1), v))) for d in self.dashed]
        return sorted(pairs, key=lambda e: (order.get(e[0], -1), order.get(e[1], -1), e))

    def to_json(self) -> dict:
        return {
            "variables": list(self.variables),
            "directed": [list(e) for e in self.directed],
            "dashed": [list(e) for e in self.dashed_pairs()],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "CausalGraph":
        try:
            variables = tuple(obj["variables"])
            parents: dict[str, set[str]] = {v: set() for v in variables}
            for p, c in obj.get("directed", []):
                if c not in parents:
                    raise DataError(f"edge into unknown variable {c!r}")
                parents[c].add(p)
            dashed = frozenset(frozenset(pair) for pair in obj.get("dashed", []))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed graph JSON: {exc}") from exc
        return cls(variables, {k: frozenset(v) for k, v in parents.items()}, dashed)

    def to_dot(self, name: str = "G") -> str:
        lines = [f"digraph {name} {{"]
        lines += [f'  "{v}";' for v in self.variables]
        lines += [f'  "{p}" -> "{c}";' for p, c in self.directed]
        lines += [f'  "{a}" -> "{b}" [style=dashed, dir=none];' for a, b in self.dashed_pairs()]
        lines.append("}")
        return "\n".join(lines) + "\n"


def validate_graph(g: CausalGraph) -> list[str]:
    """Every invariant violation of ``g``; an empty list means the graph is valid."""
    problems = []
    known = set(g.variables)
    for child, ps in g.parents.items():
        if child in ps:
            problems.append(f"self-parent: {child}")
        for p in ps - known:
            problems.append(f"unknown parent {p} of {child}")
    for pair in g.dashed:
        if len(pair) != 2:
            problems.append(f"dashed pair is not a pair of distinct variables: {sorted(pair)}")
            continue
        a, b = sorted(pair)
        if not {a, b} <= known:
            problems.append(f"dashed pair with unknown variable: {a}, {b}")
        if a in g.parents.get(b, ()) or b in g.parents.get(a, ()):
            problems.append(f"edge/dashed overlap: {a}, {b}")
    return problems


@dataclass(frozen=True)
class GroundTruth:
    """Generating structure restricted to observed variables."""

    variables: tuple[str, ...]
    parents: Mapping[str, frozenset[str]]
    confounded_pairs: frozenset[frozenset[str]] = frozenset()
    intermediate_pairs: frozenset[tuple[str, str]] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "parents", {v: frozenset(self.parents.get(v, ())) for v in self.variables})
        object.__setattr__(self, "confounded_pairs", frozenset(frozenset(p) for p in self.confounded_pairs))
        object.__setattr__(self, "intermediate_pairs", frozenset(tuple(p) for p in self.intermediate_pairs))

    @property
    def directed(self) -> set[tuple[str, str]]:
        return {(p, c) for c, ps in self.parents.items() for p in ps}

    def check_disjoint(self) -> None:
        direct = {frozenset(e) for e in self.directed}
        confounded = set(self.confounded_pairs)
        intermediate = {frozenset(e) for e in self.intermediate_pairs}
        if direct & confounded or direct & intermediate or confounded & intermediate:
            raise DataError("ground-truth pair sets overlap")

    def to_json(self) -> dict:
        order = {v: i for i, v in enumerate(self.variables)}
        key = lambda e: tuple(order.get(v, -1) for v in e)  # noqa: E731
        return {
            "variables": list(self.variables),
            "directed": [list(e) for e in sorted(self.directed, key=key)],
            "confounded": sorted((sorted(p, key=order.get) for p in self.confounded_pairs), key=key),
            "intermediate": [list(e) for e in sorted(self.intermediate_pairs, key=key)],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "GroundTruth":
        try:
            variables = tuple(obj["variables"])
            parents: dict[str, set[str]] = {v: set() for v in variables}
            for p, c in obj.get("directed", []):
                parents[c].add(p)
            return cls(
                variables,
                {k: frozenset(v) for k, v in parents.items()},
                frozenset(frozenset(p) for p in obj.get("confounded", [])),
                frozenset((a, b) for a, b in obj.get("intermediate", [])),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed ground-truth JSON: {exc}") from exc


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"
