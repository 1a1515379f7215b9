"""Goodness-of-fit helpers shared by the Monte Carlo harnesses."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats


def chi_square_gof(counts, expected_probs) -> tuple[float, float]:
    """Pearson goodness-of-fit; cells with zero expectation must be empty.

    Any count in a zero-probability cell is an outright contradiction and
    yields ``(inf, 0.0)``.
    """
    counts = np.asarray(counts, dtype=float)
    expected_probs = np.asarray(expected_probs, dtype=float)
    zero = expected_probs <= 0
    if np.any(counts[zero] > 0):
        return math.inf, 0.0
    live = ~zero
    if live.sum() <= 1:
        return 0.0, 1.0
    n = counts[live].sum()
    res = stats.chisquare(counts[live], expected_probs[live] / expected_probs[live].sum() * n)
    return float(res.statistic), float(res.pvalue)


def two_sample_chi_square(counts_a, counts_b) -> tuple[float, float]:
    """Homogeneity test between two count vectors over the same categories."""
    table = np.vstack([counts_a, counts_b]).astype(float)
    table = table[:, table.sum(axis=0) > 0]
    if table.shape[1] <= 1:
        return 0.0, 1.0
    res = stats.chi2_contingency(table, correction=False)
    return float(res.statistic), float(res.pvalue)


def binomial_sigma(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n)


def within_sigmas(observed: float, expected: float, n: int, k: float = 4.0) -> bool:
    """``|observed - expected| <= k * sqrt(p(1-p)/n)``; exact match when ``p`` is 0 or 1."""
    return abs(observed - expected) <= k * binomial_sigma(expected, n)
