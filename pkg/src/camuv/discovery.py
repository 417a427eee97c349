"""CAM-UV structure search with forbidden-cause prior knowledge.

Phase 1 grows candidate parent sets by finding, in every variable subset
``K``, the member whose regression residual on the rest of ``K`` is most
independent of the others' residuals. Phase 2 drops candidates that are not
needed to make a variable's residual independent of them. Pairs left without
a directed edge whose residuals stay dependent are reported as dashed
(unobserved causal or backdoor path).
"""

from __future__ import annotations

import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable

import numpy as np

from .gam import fit_gam, residual
from .graph import CausalGraph, DataError, Dataset, PriorKnowledge
from .kernel_stats import CenteredKernel, gamma_test, set_kernel

log = logging.getLogger(__name__)


class WatchdogError(RuntimeError):
    """Phase 1 exceeded its reset budget."""


@dataclass(frozen=True)
class DiscoveryConfig:
    alpha: float = 0.01
    max_subset: int = 2
    prior: PriorKnowledge = field(default_factory=PriorKnowledge)

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.max_subset < 2:
            raise ValueError(f"max_subset must be at least 2, got {self.max_subset}")


@dataclass
class CandidateState:
    """Candidate parents per variable index, in insertion order."""

    M: list[list[int]]
    t: int = 2
    resets: int = 0
    sweeps: int = 0


KERNEL_CACHE_BYTES = 1 << 30


class ResidualOracle:
    """Residuals and p-values for one dataset, memoized by regressor set.

    Centered kernels of residuals are kept in an LRU cache bounded by
    ``kernel_cache_bytes``; caching never changes a result.
    """

    def __init__(self, data: Dataset, cache: bool = True, kernel_cache_bytes: int = KERNEL_CACHE_BYTES):
        self.data = data
        self.cols = [np.ascontiguousarray(data.values[:, i]) for i in range(data.p)]
        self.cache = cache
        self.kernel_cache_bytes = kernel_cache_bytes
        self._res: dict[tuple[int, frozenset[int]], np.ndarray] = {}
        self._p: dict[tuple, float] = {}
        self._kernels: OrderedDict[tuple, CenteredKernel | None] = OrderedDict()
        self._kernel_bytes = 0
        self.n_tests = 0

    def residual(self, i: int, regressors: Iterable[int]) -> np.ndarray:
        regs = frozenset(regressors)
        key = (i, regs)
        if self.cache and key in self._res:
            return self._res[key]
        names = self.data.column_names
        predictors = {names[j]: self.cols[j] for j in sorted(regs)}
        fit = fit_gam(self.cols[i], predictors, response_id=names[i])
        r = residual(fit, {**predictors, names[i]: self.cols[i]})
        if self.cache:
            self._res[key] = r
        return r

    def _kernel(self, keys: tuple[tuple[int, frozenset[int]], ...]) -> CenteredKernel | None:
        if self.cache and keys in self._kernels:
            self._kernels.move_to_end(keys)
            return self._kernels[keys]
        k = set_kernel([self.residual(i, r) for i, r in keys])
        if self.cache:
            size = k.nbytes if k is not None else 0
            self._kernels[keys] = k
            self._kernel_bytes += size
            while self._kernel_bytes > self.kernel_cache_bytes and len(self._kernels) > 1:
                _, old = self._kernels.popitem(last=False)
                self._kernel_bytes -= old.nbytes if old is not None else 0
        return k

    def p_value(self, i: int, regs_i: Iterable[int], others: Iterable[tuple[int, Iterable[int]]]) -> float:
        """p-HSIC between the residual of ``i`` and the stacked residuals of ``others``."""
        a = ((i, frozenset(regs_i)),)
        b = tuple((j, frozenset(r)) for j, r in others)
        key = (a, b)
        if self.cache and key in self._p:
            return self._p[key]
        self.n_tests += 1
        ka, kb = self._kernel(a), self._kernel(b)
        p = 1.0 if ka is None or kb is None else gamma_test(ka, kb).p_value
        if self.cache:
            self._p[key] = p
        return p


def _blocked(prior: PriorKnowledge, names, i: int, rest: tuple[int, ...]) -> bool:
    return any((names[j], names[i]) in prior.forbidden for j in rest)


def phase1_candidates(data: Dataset, cfg: DiscoveryConfig, oracle: ResidualOracle | None = None,
                      max_resets: int | None = None) -> CandidateState:
    """Candidate parent sets. Every reset follows a strict addition, so at most
    p(p-1) resets can happen; ``max_resets`` (default 10 p 2^d) is a safety net."""
    oracle = oracle or ResidualOracle(data)
    p, names, alpha = data.p, data.column_names, cfg.alpha
    state = CandidateState([[] for _ in range(p)])
    budget = 10 * p * 2**cfg.max_subset if max_resets is None else max_resets
    M = state.M

    while state.t <= cfg.max_subset:
        state.sweeps += 1
        changed = False
        for K in combinations(range(p), state.t):
            best, sink = 0.0, None
            for i in K:
                rest = tuple(j for j in K if j != i)
                if _blocked(cfg.prior, names, i, rest):
                    continue
                indep = oracle.p_value(i, set(M[i]) | set(rest), [(j, M[j]) for j in rest])
                if best < indep:
                    best, sink = indep, i
            if sink is None:
                continue
            rest = tuple(j for j in K if j != sink)
            # e: same arguments as the winning comparison above, so reuse it
            e = best
            h = max(oracle.p_value(sink, M[sink], [(j, M[j])]) for j in rest)
            if alpha < e and h < alpha:
                new = [j for j in rest if j not in M[sink]]
                if new:
                    M[sink].extend(new)
                    changed = True
                    log.debug("K=%s: add %s to parents of %s", [names[k] for k in K],
                              [names[j] for j in new], names[sink])
        if changed:
            state.t = 2
            state.resets += 1
            if state.resets > budget:
                raise WatchdogError(f"phase 1 exceeded {budget} resets")
        else:
            state.t += 1
    return state


def phase2_prune(data: Dataset, state: CandidateState, cfg: DiscoveryConfig,
                 oracle: ResidualOracle | None = None) -> list[list[int]]:
    oracle = oracle or ResidualOracle(data)
    M = [list(m) for m in state.M]
    for i in range(data.p):
        for j in list(M[i]):
            rest = [k for k in M[i] if k != j]
            if cfg.alpha < oracle.p_value(i, rest, [(j, M[j])]):
                M[i].remove(j)
    return M


def find_dashed_edges(data: Dataset, parents: list[list[int]], cfg: DiscoveryConfig,
                      oracle: ResidualOracle | None = None) -> set[frozenset[int]]:
    oracle = oracle or ResidualOracle(data)
    dashed = set()
    for i, j in combinations(range(data.p), 2):
        if i in parents[j] or j in parents[i]:
            continue
        if oracle.p_value(i, parents[i], [(j, parents[j])]) <= cfg.alpha:
            dashed.add(frozenset((i, j)))
    return dashed


def discover(data: Dataset, cfg: DiscoveryConfig | None = None, cache: bool = True,
             oracle: ResidualOracle | None = None) -> CausalGraph:
    """Directed edges and dashed (UCP/UBP) pairs among the columns of ``data``.

    An ``oracle`` built for the same dataset may be passed in to share
    memoized residuals and p-values between runs with different settings.
    """
    cfg = cfg or DiscoveryConfig()
    if data.p < 2:
        raise DataError("need at least two variables")
    names = data.column_names
    unknown = {v for pair in cfg.prior.forbidden for v in pair} - set(names)
    if unknown:
        raise DataError(f"prior knowledge refers to unknown variables: {sorted(unknown)}")

    if oracle is None:
        oracle = ResidualOracle(data, cache=cache)
    elif oracle.data is not data:
        raise ValueError("oracle was built for a different dataset")
    state = phase1_candidates(data, cfg, oracle)
    parents = phase2_prune(data, state, cfg, oracle)
    dashed = find_dashed_edges(data, parents, cfg, oracle)
    log.info("discover: p=%d n=%d resets=%d tests=%d", data.p, data.n, state.resets, oracle.n_tests)
    return CausalGraph(
        names,
        {names[i]: frozenset(names[j] for j in ps) for i, ps in enumerate(parents)},
        frozenset(frozenset(names[k] for k in pair) for pair in dashed),
    )
