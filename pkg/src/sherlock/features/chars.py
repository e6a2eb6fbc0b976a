"""Aggregated character-distribution features (960 values).

Roster: the 96 codepoints 32..127 (space through DEL). For each roster
character the per-value occurrence counts are aggregated with 10 statistics
in AGGREGATIONS order, character-major: slot 10*c + a. Non-roster characters
contribute nothing.
"""

from __future__ import annotations

import numpy as np

from ..corpus import Column
from ._moments import skew_kurtosis

ROSTER_START = 32
N_ROSTER = 96
ROSTER_CODEPOINTS: tuple[int, ...] = tuple(range(ROSTER_START, ROSTER_START + N_ROSTER))

AGGREGATIONS: tuple[str, ...] = (
    "any", "all", "mean", "variance", "min", "max", "median", "sum",
    "kurtosis", "skewness",
)

N_CHAR_FEATURES = N_ROSTER * len(AGGREGATIONS)


def char_count_matrix(values: tuple[str, ...]) -> np.ndarray:
    """Per-value roster-character counts, shape (n_values, 96).

    Single pass over each value's characters (O(total characters))."""
    out = np.zeros((len(values), N_ROSTER), dtype=np.float64)
    for i, v in enumerate(values):
        if not v:
            continue
        codes = np.fromiter(map(ord, v), dtype=np.int64, count=len(v))
        codes = codes[(codes >= ROSTER_START) & (codes < ROSTER_START + N_ROSTER)]
        if codes.size:
            out[i] = np.bincount(codes - ROSTER_START, minlength=N_ROSTER)
    return out


def extract_char_features(column: Column) -> np.ndarray:
    """Compute the 960 character-distribution features, character-major."""
    counts = char_count_matrix(column.values)
    skew, kurt = skew_kurtosis(counts, axis=0)
    aggs = np.empty((N_ROSTER, len(AGGREGATIONS)), dtype=np.float64)
    aggs[:, 0] = (counts > 0).any(axis=0)
    aggs[:, 1] = (counts > 0).all(axis=0)
    aggs[:, 2] = counts.mean(axis=0)
    aggs[:, 3] = counts.var(axis=0)
    aggs[:, 4] = counts.min(axis=0)
    aggs[:, 5] = counts.max(axis=0)
    aggs[:, 6] = np.median(counts, axis=0)
    aggs[:, 7] = counts.sum(axis=0)
    aggs[:, 8] = kurt
    aggs[:, 9] = skew
    return aggs.reshape(-1)
