"""RBF-kernel HSIC independence tests.

The gamma approximation follows the two-moment fit of the null distribution
of ``n * HSIC_b`` (Gretton et al., 2008). A permutation test is provided as
an independent oracle; discovery code only uses the gamma variant.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats
from scipy.spatial.distance import pdist, squareform


class DegenerateSampleError(ValueError):
    """Raised when a sample carries no spread to build a kernel from."""


@dataclass(frozen=True)
class HsicResult:
    statistic: float
    p_value: float
    bandwidth_x: float
    bandwidth_y: float
    n: int
    degenerate: bool = False


def _as_matrix(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError(f"expected a 1-d or 2-d sample, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("sample contains NaN or Inf")
    return x


def _sq_dists(x: np.ndarray) -> np.ndarray:
    if x.shape[1] == 1:
        col = x[:, 0]
        sq = np.subtract.outer(col, col)
        sq *= sq
        return sq
    return squareform(pdist(x, "sqeuclidean"))


def median_heuristic_bandwidth(x) -> float:
    """Median of the pairwise Euclidean distances between distinct rows."""
    x = _as_matrix(x)
    if x.shape[0] < 2:
        raise ValueError("need at least two rows")
    d = pdist(x, "euclidean")
    d = d[d > 0]
    if d.size == 0:
        raise DegenerateSampleError("degenerate sample: all rows identical")
    return float(np.median(d))


def _center(k: np.ndarray) -> np.ndarray:
    row = k.mean(axis=0)
    kc = k - row[None, :]
    kc -= row[:, None]
    kc += row.mean()
    return kc


def _gram(x: np.ndarray, bandwidth: float | None = None) -> tuple[np.ndarray, float]:
    if bandwidth is None:
        bandwidth = median_heuristic_bandwidth(x)
    elif not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    k = _sq_dists(x)
    k *= -0.5 / bandwidth**2
    np.exp(k, out=k)
    return k, bandwidth


def centered_gram(x, bandwidth: float) -> np.ndarray:
    """Gaussian Gram matrix of the rows of ``x``, doubly centered (HKH)."""
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    k, _ = _gram(_as_matrix(x), bandwidth)
    return _center(k)


@dataclass(frozen=True)
class CenteredKernel:
    """Everything the gamma test needs from one argument."""

    kc: np.ndarray
    offdiag_mean: float
    bandwidth: float

    @classmethod
    def from_sample(cls, x) -> "CenteredKernel":
        x = _as_matrix(x)
        n = x.shape[0]
        k, bw = _gram(x)
        mu = (k.sum() - np.trace(k)) / (n * (n - 1))
        return cls(_center(k), float(mu), bw)

    @property
    def n(self) -> int:
        return self.kc.shape[0]

    @property
    def nbytes(self) -> int:
        return self.kc.nbytes


def _check_pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x, y = _as_matrix(x), _as_matrix(y)
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"sample sizes differ: {x.shape[0]} vs {y.shape[0]}")
    return x, y


def hsic_statistic(x, y, bandwidth_x: float | None = None, bandwidth_y: float | None = None) -> float:
    """Biased HSIC estimate ``trace(Kc Lc) / n**2``."""
    x, y = _check_pair(x, y)
    n = x.shape[0]
    k, _ = _gram(x, bandwidth_x)
    l, _ = _gram(y, bandwidth_y)
    # sum(Kc * L) == trace(Kc Lc) because H is idempotent
    return max(float(np.sum(_center(k) * l)) / n**2, 0.0)


def gamma_test(kx: CenteredKernel, ky: CenteredKernel) -> HsicResult:
    """Gamma-approximated HSIC test on two precomputed kernels."""
    n = kx.n
    if ky.n != n:
        raise ValueError(f"sample sizes differ: {n} vs {ky.n}")
    if n < 6:
        raise ValueError("gamma approximation needs at least 6 samples")
    prod = kx.kc * ky.kc
    test_stat = float(prod.sum()) / n
    diag = np.diagonal(prod).copy()

    # null variance from the off-diagonal of (Kc o Lc / 6)^2
    prod *= prod
    var = (float(prod.sum()) - float(diag @ diag)) / 36.0 / (n * (n - 1))
    var *= 72.0 * (n - 4) * (n - 5) / (n * (n - 1) * (n - 2) * (n - 3))

    mu_x, mu_y = kx.offdiag_mean, ky.offdiag_mean
    mean = (1.0 + mu_x * mu_y - mu_x - mu_y) / n

    stat = max(test_stat, 0.0)
    if not (var > 0 and mean > 0):
        return HsicResult(stat / n, 1.0, kx.bandwidth, ky.bandwidth, n, True)
    shape = mean**2 / var
    scale = var * n / mean
    p = float(stats.gamma.sf(test_stat, shape, scale=scale))
    return HsicResult(stat / n, min(max(p, 0.0), 1.0), kx.bandwidth, ky.bandwidth, n)


def hsic_pvalue_gamma(x, y) -> HsicResult:
    """HSIC test with a gamma approximation to the null distribution.

    ``statistic`` is the biased HSIC estimate; the p-value refers to ``n * statistic``.
    If the estimated null variance is not positive the p-value falls back to 1
    and ``degenerate`` is set.
    """
    x, y = _check_pair(x, y)
    return gamma_test(CenteredKernel.from_sample(x), CenteredKernel.from_sample(y))


def hsic_pvalue_permutation(x, y, num_permutations: int = 1000, seed: int = 0) -> HsicResult:
    """Permutation test; ``p = (1 + #{perm >= observed}) / (1 + num_permutations)``."""
    if num_permutations < 100:
        raise ValueError("num_permutations must be at least 100")
    x, y = _check_pair(x, y)
    n = x.shape[0]
    k, bx = _gram(x)
    l, by = _gram(y)
    kc = _center(k)
    observed = float(np.sum(kc * l))
    rng = np.random.default_rng(seed)
    exceed = 0
    for _ in range(num_permutations):
        perm = rng.permutation(n)
        if float(np.sum(kc * l[np.ix_(perm, perm)])) >= observed:
            exceed += 1
    p = (1 + exceed) / (1 + num_permutations)
    return HsicResult(max(observed, 0.0) / n**2, p, bx, by, n)


def standardize(v) -> np.ndarray | None:
    """z-score a column; None when it is (numerically) constant."""
    v = np.asarray(v, dtype=float)
    sd = v.std()
    if not sd > 1e-12 * max(1.0, float(np.abs(v).max(initial=0.0))):
        return None
    return (v - v.mean()) / sd


def set_kernel(columns: Sequence) -> CenteredKernel | None:
    """Joint kernel of the z-scored, stacked ``columns``; None if all are constant."""
    cols = [z for z in (standardize(c) for c in columns) if z is not None]
    if not cols:
        return None
    return CenteredKernel.from_sample(np.column_stack(cols))


def p_hsic_set(a, others: Sequence) -> float:
    """p-value of the joint test between ``a`` and the stacked columns of ``others``.

    Every column is z-scored first. Constant columns carry no dependence: a
    constant ``a`` gives 1.0 and constant members of ``others`` are dropped.
    """
    if len(others) == 0:
        raise ValueError("others must be non-empty")
    n = len(a)
    if any(len(b) != n for b in others):
        raise ValueError("all columns must have equal length")
    ka, kb = set_kernel([a]), set_kernel(others)
    if ka is None or kb is None:
        return 1.0
    return gamma_test(ka, kb).p_value
