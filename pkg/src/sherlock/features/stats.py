"""Global statistical features of a column (27 values).

Character classes are ASCII-only: numeric '0'-'9', alphabetic 'a'-'z'/'A'-'Z',
special = any other non-whitespace character. A word is a maximal run of
non-whitespace. A cell counts as a "none" value when, trimmed and case-folded,
it is one of NONE_VALUES.

The published feature table reads as 28 slots; the any/all pair over value
lengths is collapsed here into a single "any nonzero length" flag so the
roster lands on exactly 27. See GLOBAL_STAT_NAMES for the auditable order.
"""

from __future__ import annotations

from collections import Counter

import numpy as np

from ..corpus import Column
from ._moments import mode_smallest, skew_kurtosis

NONE_VALUES = frozenset({"", "none", "null", "n/a", "na", "-"})

GLOBAL_STAT_NAMES: tuple[str, ...] = (
    "n_values",
    "entropy",
    "frac_unique",
    "frac_cells_numeric",
    "frac_cells_alpha",
    "numeric_char_count_mean",
    "numeric_char_count_std",
    "alpha_char_count_mean",
    "alpha_char_count_std",
    "special_char_count_mean",
    "special_char_count_std",
    "word_count_mean",
    "word_count_std",
    "none_frac",
    "none_count",
    "none_all",
    "none_any",
    "length_mean",
    "length_std",
    "length_sum",
    "length_min",
    "length_max",
    "length_median",
    "length_mode",
    "length_kurtosis",
    "length_skewness",
    "length_any_nonzero",
)

N_GLOBAL_STATS = len(GLOBAL_STAT_NAMES)


def _is_none_value(value: str) -> bool:
    return value.strip().casefold() in NONE_VALUES


def extract_global_stats(column: Column) -> np.ndarray:
    """Compute the 27 global statistics in GLOBAL_STAT_NAMES order."""
    values = column.values
    n = len(values)

    counts = Counter(values)
    probs = np.array([c / n for c in counts.values()])
    entropy = float(-np.sum(probs * np.log(probs)))
    frac_unique = sum(1 for c in counts.values() if c == 1) / n

    numeric = np.empty(n)
    alpha = np.empty(n)
    special = np.empty(n)
    words = np.empty(n)
    lengths = np.empty(n)
    has_numeric = 0
    has_alpha = 0
    none_count = 0
    for i, v in enumerate(values):
        num = sum(1 for ch in v if "0" <= ch <= "9")
        alp = sum(1 for ch in v if "a" <= ch <= "z" or "A" <= ch <= "Z")
        spec = sum(1 for ch in v if not ch.isspace()) - num - alp
        numeric[i] = num
        alpha[i] = alp
        special[i] = spec
        words[i] = len(v.split())
        lengths[i] = len(v)
        has_numeric += num > 0
        has_alpha += alp > 0
        none_count += _is_none_value(v)

    len_skew, len_kurt = skew_kurtosis(lengths)
    return np.array([
        float(n),
        entropy,
        frac_unique,
        has_numeric / n,
        has_alpha / n,
        numeric.mean(),
        numeric.std(),
        alpha.mean(),
        alpha.std(),
        special.mean(),
        special.std(),
        words.mean(),
        words.std(),
        none_count / n,
        float(none_count),
        1.0 if none_count == n else 0.0,
        1.0 if none_count > 0 else 0.0,
        lengths.mean(),
        lengths.std(),
        lengths.sum(),
        lengths.min(),
        lengths.max(),
        float(np.median(lengths)),
        mode_smallest(lengths),
        float(len_kurt),
        float(len_skew),
        1.0 if lengths.max() > 0 else 0.0,
    ])
