"""Synthetic additive SCMs with hidden confounders and hidden intermediates.

Every causal effect uses the bounded function
``c1 * sin(a1 * (x + b1))**3 + c2 * (sigmoid(a2 * (x + b2)) - 0.5)``
with constants drawn per edge, plus Gaussian external noise.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from itertools import combinations

import numpy as np

from .graph import Dataset, GroundTruth

# |f| <= c1 + c2 / 2 with c1, c2 <= 5
EFFECT_BOUND = 7.5


@dataclass(frozen=True)
class CausalFunction:
    a1: float
    b1: float
    c1: float
    a2: float
    b2: float
    c2: float

    @classmethod
    def sample(cls, rng: np.random.Generator) -> "CausalFunction":
        a1, a2 = rng.uniform(9, 11, 2)
        b1, b2 = rng.uniform(-0.1, 0.1, 2)
        c1, c2 = rng.uniform(3, 5, 2)
        return cls(float(a1), float(b1), float(c1), float(a2), float(b2), float(c2))

    def __call__(self, x):
        return causal_fn_eval(self, x)


def causal_fn_eval(f: CausalFunction, x):
    x = np.asarray(x, dtype=float)
    wave = np.sin(f.a1 * (x + f.b1)) ** 3 * f.c1
    # 1/(1+exp(-z)) - 0.5 == tanh(z/2)/2, which does not overflow
    step = 0.5 * np.tanh(0.5 * f.a2 * (x + f.b2)) * f.c2
    out = wave + step
    return float(out) if out.ndim == 0 else out


class InfeasibleConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScmConfig:
    n_observed: int = 10
    n_confounded_pairs: int = 4
    n_intermediate_pairs: int = 2
    n_direct_pairs: int = 10
    n_samples: int = 1000
    noise_scale: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        total = self.n_confounded_pairs + self.n_intermediate_pairs + self.n_direct_pairs
        n_pairs = self.n_observed * (self.n_observed - 1) // 2
        if self.n_observed < 1 or min(self.n_confounded_pairs, self.n_intermediate_pairs, self.n_direct_pairs) < 0:
            raise InfeasibleConfigError("counts must be non-negative and n_observed positive")
        if total > n_pairs:
            raise InfeasibleConfigError(f"{total} disjoint pairs requested but only {n_pairs} exist")
        if self.n_samples < 1 or self.noise_scale < 0:
            raise InfeasibleConfigError("n_samples must be positive and noise_scale non-negative")


def _names(p: int) -> tuple[str, ...]:
    return tuple(f"X{i + 1}" for i in range(p))


@dataclass
class _Node:
    name: str
    parents: list[tuple[str, CausalFunction]] = field(default_factory=list)


def _topological(nodes: dict[str, _Node]) -> list[str]:
    indeg = {k: len(v.parents) for k, v in nodes.items()}
    children: dict[str, list[str]] = {k: [] for k in nodes}
    for k, v in nodes.items():
        for p, _ in v.parents:
            children[p].append(k)
    ready = [k for k in nodes if indeg[k] == 0]
    order = []
    while ready:
        k = ready.pop(0)
        order.append(k)
        for c in children[k]:
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
    if len(order) != len(nodes):
        raise InfeasibleConfigError("generated structure has a cycle")
    return order


def gen_camuv_instance(cfg: ScmConfig) -> tuple[Dataset, GroundTruth]:
    """Draw a random i.i.d. CAM-UV instance and its observed-level ground truth."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    names = _names(cfg.n_observed)
    rank = {v: int(r) for v, r in zip(names, rng.permutation(cfg.n_observed))}

    pairs = list(combinations(names, 2))
    pick = rng.permutation(len(pairs))
    chosen = [pairs[k] for k in pick]

    def orient(pair):
        a, b = pair
        return (a, b) if rank[a] < rank[b] else (b, a)

    c0, c1 = cfg.n_confounded_pairs, cfg.n_confounded_pairs + cfg.n_intermediate_pairs
    confounded = chosen[:c0]
    intermediate = [orient(pr) for pr in chosen[c0:c1]]
    direct = [orient(pr) for pr in chosen[c1:c1 + cfg.n_direct_pairs]]

    nodes = {v: _Node(v) for v in names}
    for k, (a, b) in enumerate(confounded):
        u = f"U_c{k + 1}"
        nodes[u] = _Node(u)
        nodes[a].parents.append((u, CausalFunction.sample(rng)))
        nodes[b].parents.append((u, CausalFunction.sample(rng)))
    for k, (a, b) in enumerate(intermediate):
        u = f"U_i{k + 1}"
        nodes[u] = _Node(u, [(a, CausalFunction.sample(rng))])
        nodes[b].parents.append((u, CausalFunction.sample(rng)))
    for a, b in direct:
        nodes[b].parents.append((a, CausalFunction.sample(rng)))

    order = _topological(nodes)
    values: dict[str, np.ndarray] = {}
    # draw all noise up front in a fixed node order so sampling is reproducible
    noise = {k: rng.normal(0.0, cfg.noise_scale, cfg.n_samples) for k in sorted(nodes)}
    for k in order:
        v = noise[k].copy()
        for p, f in nodes[k].parents:
            v += causal_fn_eval(f, values[p])
        values[k] = v

    data = Dataset(names, np.column_stack([values[v] for v in names]))
    parents = {v: frozenset(a for a, b in direct if b == v) for v in names}
    truth = GroundTruth(names, parents, frozenset(frozenset(p) for p in confounded), frozenset(intermediate))
    truth.check_disjoint()
    return data, truth


@dataclass(frozen=True)
class TsScmConfig:
    n_observed: int = 3
    max_lag: int = 2
    n_confounded_pairs: int = 2
    n_intermediate_pairs: int = 2
    n_direct_pairs: int = 5
    n_samples: int = 1000
    noise_scale: float = 1.0
    burn_in: int = 200
    seed: int = 0

    def slots(self) -> list[tuple[str, int, str]]:
        """Distinct (cause, lag, effect) pair slots of a stationary window.

        Lag-0 slots are listed once per unordered pair (as ``(a, 0, b)`` with
        ``a < b``); their orientation is decided later.
        """
        names = _names(self.n_observed)
        out = [(a, 0, b) for a, b in combinations(names, 2)]
        out += [(a, lag, b) for lag in range(1, self.max_lag + 1) for a in names for b in names]
        return out

    def validate(self) -> None:
        total = self.n_confounded_pairs + self.n_intermediate_pairs + self.n_direct_pairs
        if self.max_lag < 0 or self.n_observed < 1:
            raise InfeasibleConfigError("max_lag must be >= 0 and n_observed >= 1")
        if min(self.n_confounded_pairs, self.n_intermediate_pairs, self.n_direct_pairs) < 0:
            raise InfeasibleConfigError("pair counts must be non-negative")
        if total > len(self.slots()):
            raise InfeasibleConfigError(f"{total} disjoint pairs requested but only {len(self.slots())} exist")
        if self.burn_in < self.max_lag:
            raise InfeasibleConfigError("burn_in must be at least max_lag")
        if self.n_samples < 1 or self.noise_scale < 0:
            raise InfeasibleConfigError("n_samples must be positive and noise_scale non-negative")


@dataclass(frozen=True)
class TsGroundTruth:
    """Stationary structure: every slot holds for all time shifts."""

    variables: tuple[str, ...]
    max_lag: int
    edges: frozenset[tuple[str, int, str]]
    confounded: frozenset[tuple[str, int, str]] = frozenset()
    intermediate: frozenset[tuple[str, int, str]] = frozenset()

    def to_json(self) -> dict:
        def rows(s):
            return [{"cause": a, "lag": lag, "effect": b} for a, lag, b in sorted(s, key=_slot_key)]

        return {
            "variables": list(self.variables),
            "max_lag": self.max_lag,
            "edges": rows(self.edges),
            "confounded": rows(self.confounded),
            "intermediate": rows(self.intermediate),
        }

    @classmethod
    def from_json(cls, obj) -> "TsGroundTruth":
        def slots(key):
            return frozenset((e["cause"], int(e["lag"]), e["effect"]) for e in obj.get(key, []))

        return cls(tuple(obj["variables"]), int(obj["max_lag"]), slots("edges"),
                   slots("confounded"), slots("intermediate"))


def _slot_key(s):
    a, lag, b = s
    return (lag, a, b)


def gen_ts_instance(cfg: TsScmConfig, max_retries: int = 100) -> tuple[Dataset, TsGroundTruth]:
    """Simulate a stationary nonlinear time series with hidden series.

    A confounded slot ``(a, l, b)`` gets a white-noise latent series ``U`` with
    ``U(t) -> a(t)`` and ``U(t) -> b(t + l)``; an intermediate slot gets
    ``a(t) -> U(t) -> b(t + l)``. Lag-0 orientations follow a random order of
    the observed variables, so the contemporaneous graph is acyclic.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    names = _names(cfg.n_observed)
    slots = cfg.slots()

    for _ in range(max_retries):
        rank = {v: int(r) for v, r in zip(names, rng.permutation(cfg.n_observed))}
        chosen = [slots[k] for k in rng.permutation(len(slots))]

        def orient(s):
            a, lag, b = s
            if lag == 0 and rank[b] < rank[a]:
                return (b, 0, a)
            return s

        c0 = cfg.n_confounded_pairs
        c1 = c0 + cfg.n_intermediate_pairs
        confounded = [orient(s) for s in chosen[:c0]]
        intermediate = [orient(s) for s in chosen[c0:c1]]
        direct = [orient(s) for s in chosen[c1:c1 + cfg.n_direct_pairs]]

        # series -> list of (parent series, lag, function)
        parents: dict[str, list[tuple[str, int, CausalFunction]]] = {v: [] for v in names}
        for k, (a, lag, b) in enumerate(confounded):
            u = f"U_c{k + 1}"
            parents[u] = []
            parents[a].append((u, 0, CausalFunction.sample(rng)))
            parents[b].append((u, lag, CausalFunction.sample(rng)))
        for k, (a, lag, b) in enumerate(intermediate):
            u = f"U_i{k + 1}"
            parents[u] = [(a, 0, CausalFunction.sample(rng))]
            parents[b].append((u, lag, CausalFunction.sample(rng)))
        for a, lag, b in direct:
            parents[b].append((a, lag, CausalFunction.sample(rng)))

        contemporaneous = {k: _Node(k, [(p, f) for p, lag, f in ps if lag == 0]) for k, ps in parents.items()}
        try:
            order = _topological(contemporaneous)
        except InfeasibleConfigError:
            continue
        break
    else:
        raise InfeasibleConfigError("could not draw an acyclic contemporaneous structure")

    total = cfg.n_samples + cfg.burn_in
    noise = {k: rng.normal(0.0, cfg.noise_scale, total) for k in sorted(parents)}
    series = {k: np.zeros(total) for k in parents}
    for t in range(total):
        for k in order:
            v = noise[k][t]
            for p, lag, f in parents[k]:
                if t - lag >= 0:
                    v += causal_fn_eval(f, series[p][t - lag])
            series[k][t] = v

    values = np.column_stack([series[v][cfg.burn_in:] for v in names])
    truth = TsGroundTruth(names, cfg.max_lag, frozenset(direct), frozenset(confounded), frozenset(intermediate))
    return Dataset(names, values), truth


def config_to_json(cfg) -> dict:
    kind = "ts" if isinstance(cfg, TsScmConfig) else "iid"
    return {"kind": kind, **asdict(cfg)}


def config_from_json(obj: dict):
    obj = dict(obj)
    kind = obj.pop("kind", "iid")
    cls = {"iid": ScmConfig, "ts": TsScmConfig}.get(kind)
    if cls is None:
        raise InfeasibleConfigError(f"unknown config kind {kind!r}")
    try:
        return cls(**obj)
    except TypeError as exc:
        raise InfeasibleConfigError(f"bad {kind} config: {exc}") from exc
