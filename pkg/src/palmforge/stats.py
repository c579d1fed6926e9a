"""Small statistical helpers: weighted empirical CDFs and a weighted
two-sample Kolmogorov-Smirnov test.

The weighted test reduces to the classical asymptotic two-sample KS test
for unit weights; weights enter through the ECDFs and through effective
sample sizes n_eff = (sum w)^2 / sum w^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import kstwobign

__all__ = ["KsResult", "weighted_ecdf", "weighted_ks_2samp", "effective_size"]


@dataclass(frozen=True)
class KsResult:
    statistic: float
    pvalue: float
    n_eff: float


def effective_size(weights: np.ndarray) -> float:
    w = np.asarray(weights, dtype=float)
    return float(w.sum() ** 2 / (w ** 2).sum())


def weighted_ecdf(values, weights, eval_points) -> np.ndarray:
    """Weighted ECDF F(v) = sum of weights of samples <= v, normalized."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    v = values[order]
    cw = np.cumsum(np.asarray(weights, dtype=float)[order])
    total = cw[-1]
    idx = np.searchsorted(v, eval_points, side="right")
    out = np.where(idx > 0, cw[np.maximum(idx - 1, 0)], 0.0)
    return out / total


def weighted_ks_2samp(x1, x2, w1=None, w2=None) -> KsResult:
    """Two-sample KS test with weighted ECDFs and asymptotic p-value.

    The p-value uses the Kolmogorov limit law at the pooled effective
    size with the usual small-sample correction; for tied/discrete data
    it is conservative.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    w1 = np.ones(len(x1)) if w1 is None else np.asarray(w1, dtype=float)
    w2 = np.ones(len(x2)) if w2 is None else np.asarray(w2, dtype=float)
    grid = np.concatenate((x1, x2))
    f1 = weighted_ecdf(x1, w1, grid)
    f2 = weighted_ecdf(x2, w2, grid)
    d = float(np.abs(f1 - f2).max())
    n1, n2 = effective_size(w1), effective_size(w2)
    n_eff = n1 * n2 / (n1 + n2)
    root = math.sqrt(n_eff)
    p = float(kstwobign.sf((root + 0.12 + 0.11 / root) * d))
    return KsResult(d, min(1.0, max(0.0, p)), n_eff)
