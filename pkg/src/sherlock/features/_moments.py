"""Shared moment conventions for count aggregations.

Population variance throughout; skewness m3/m2^1.5 and excess kurtosis
m4/m2^2 - 3, both defined as 0.0 whenever the variance is 0.
"""

from __future__ import annotations

import numpy as np


def skew_kurtosis(counts: np.ndarray, axis: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Return (skewness, excess kurtosis) along ``axis`` with the zero-variance
    convention applied elementwise."""
    counts = np.asarray(counts, dtype=np.float64)
    mean = counts.mean(axis=axis, keepdims=True)
    dev = counts - mean
    m2 = np.mean(dev**2, axis=axis)
    m3 = np.mean(dev**3, axis=axis)
    m4 = np.mean(dev**4, axis=axis)
    nonzero = m2 > 0.0
    skew = np.where(nonzero, m3 / np.where(nonzero, m2, 1.0) ** 1.5, 0.0)
    kurt = np.where(nonzero, m4 / np.where(nonzero, m2, 1.0) ** 2 - 3.0, 0.0)
    return skew, kurt


def mode_smallest(values: np.ndarray) -> float:
    """Most frequent value; ties broken by the smallest value."""
    uniq, counts = np.unique(np.asarray(values, dtype=np.float64), return_counts=True)
    return float(uniq[np.argmax(counts)])
