"""Additive regression by backfitting penalized cubic B-spline smoothers."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.interpolate import BSpline

DEGREE = 3
DEFAULT_N_BASIS = 10
DEFAULT_PENALTY = 0.1
MAX_SWEEPS = 100
TOL = 1e-6


@dataclass(frozen=True)
class SplineTerm:
    knots: np.ndarray
    coef: np.ndarray
    penalty: float
    lower: float
    upper: float

    def basis(self, x: np.ndarray) -> np.ndarray:
        x = np.clip(np.asarray(x, dtype=float), self.lower, self.upper)
        return BSpline.design_matrix(x, self.knots, DEGREE).toarray()

    def __call__(self, x) -> np.ndarray:
        return self.basis(x) @ self.coef


@dataclass(frozen=True)
class GamFit:
    """Fitted ``y ~ intercept + sum_m g_m(x_m)``."""

    intercept: float
    terms: tuple[SplineTerm, ...]
    predictor_ids: tuple[str, ...]
    response_id: str = "y"
    n_sweeps: int = 0

    def term_values(self, data: Mapping[str, np.ndarray]) -> list[np.ndarray]:
        out = []
        for pid, term in zip(self.predictor_ids, self.terms):
            if pid not in data:
                raise KeyError(f"missing predictor column {pid!r}")
            out.append(term(data[pid]))
        return out

    def predict(self, data: Mapping[str, np.ndarray], n: int | None = None) -> np.ndarray:
        if not self.terms:
            if n is None:
                raise ValueError("n is required for a fit without predictors")
            return np.full(n, self.intercept)
        return self.intercept + np.sum(self.term_values(data), axis=0)


def _knots(x: np.ndarray, n_basis: int) -> np.ndarray:
    lo, hi = float(x.min()), float(x.max())
    n_inner = n_basis - DEGREE - 1
    inner = np.quantile(x, np.linspace(0, 1, n_inner + 2)[1:-1]) if n_inner > 0 else np.empty(0)
    # quantile knots may collide on tied data; keep them strictly inside (lo, hi)
    inner = np.unique(inner[(inner > lo) & (inner < hi)])
    return np.concatenate([np.repeat(lo, DEGREE + 1), inner, np.repeat(hi, DEGREE + 1)])


def _diff_penalty(k: int) -> np.ndarray:
    d = np.diff(np.eye(k), n=2, axis=0)
    return d.T @ d


def _columns(predictors: Mapping[str, np.ndarray] | Sequence[np.ndarray], n: int):
    if isinstance(predictors, Mapping):
        ids = list(predictors)
        cols = [np.asarray(predictors[i], dtype=float) for i in ids]
    else:
        cols = [np.asarray(c, dtype=float) for c in predictors]
        ids = [f"x{i}" for i in range(len(cols))]
    for c in cols:
        if c.shape != (n,):
            raise ValueError("predictor length differs from response")
        if not np.all(np.isfinite(c)):
            raise ValueError("predictor contains NaN or Inf")
    return ids, cols


def fit_gam(
    y,
    predictors: Mapping[str, np.ndarray] | Sequence[np.ndarray] = (),
    n_basis: int = DEFAULT_N_BASIS,
    penalty: float = DEFAULT_PENALTY,
    response_id: str = "y",
) -> GamFit:
    """Fit an additive model by backfitting.

    ``predictors`` maps variable ids to columns (terms are fitted in the
    mapping's order) or is a plain sequence of columns. Each term is a cubic B-spline
    with quantile knots and a second-difference ridge penalty; terms are
    centred so the intercept stays ``mean(y)``.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or not np.all(np.isfinite(y)):
        raise ValueError("response must be a finite 1-d array")
    n = y.shape[0]
    ids, cols = _columns(predictors, n)
    intercept = float(y.mean())
    if not cols:
        return GamFit(intercept, (), (), response_id)
    if n < 10 * (1 + len(cols)):
        warnings.warn(f"only {n} samples for {len(cols)} predictors", stacklevel=2)

    n_coef = n_basis * len(cols)
    pen = penalty
    if n < n_coef:
        pen = penalty * 10.0 * n_coef / n
        warnings.warn(f"{n} samples < {n_coef} coefficients; penalty raised to {pen:g}", stacklevel=2)

    bases, solvers, knots, ranges = [], [], [], []
    for c in cols:
        lo, hi = float(c.min()), float(c.max())
        if hi <= lo:
            # a constant predictor explains nothing; keep a flat term
            t = np.concatenate([np.repeat(lo - 0.5, DEGREE + 1), np.repeat(lo + 0.5, DEGREE + 1)])
            b = BSpline.design_matrix(np.full(n, lo), t, DEGREE).toarray()
            knots.append(t)
            ranges.append((lo - 0.5, lo + 0.5))
        else:
            t = _knots(c, n_basis)
            b = BSpline.design_matrix(c, t, DEGREE).toarray()
            knots.append(t)
            ranges.append((lo, hi))
        k = b.shape[1]
        gram = b.T @ b + pen * _diff_penalty(k)
        bases.append(b)
        solvers.append(np.linalg.pinv(gram, hermitian=True) @ b.T)

    centred = y - intercept
    coefs = [np.zeros(b.shape[1]) for b in bases]
    fitted = [np.zeros(n) for _ in bases]
    total = np.zeros(n)
    sweeps = 0
    for sweeps in range(1, MAX_SWEEPS + 1):
        delta = 0.0
        for m, b in enumerate(bases):
            partial = centred - total + fitted[m]
            beta = solvers[m] @ partial
            f = b @ beta
            shift = f.mean()
            # B-splines sum to one, so a constant shift moves every coefficient
            beta = beta - shift
            f = f - shift
            delta = max(delta, float(np.max(np.abs(beta - coefs[m]))))
            total += f - fitted[m]
            coefs[m], fitted[m] = beta, f
        if len(bases) == 1 or delta < TOL:
            break

    terms = tuple(
        SplineTerm(t, beta, pen, lo, hi) for t, beta, (lo, hi) in zip(knots, coefs, ranges)
    )
    return GamFit(intercept, terms, tuple(ids), response_id, sweeps)


def residual(fit: GamFit, data) -> np.ndarray:
    """Response minus prediction; predictor values are clamped to the training range.

    ``data`` is a :class:`~camuv.graph.Dataset` or a mapping of column arrays
    holding the response and every predictor.
    """
    if hasattr(data, "as_dict"):
        data = data.as_dict()
    if fit.response_id not in data:
        raise KeyError(f"missing response column {fit.response_id!r}")
    y = np.asarray(data[fit.response_id], dtype=float)
    return y - fit.predict(data, n=y.shape[0])
