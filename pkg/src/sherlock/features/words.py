"""Pretrained word-vector loading and word-embedding aggregate features.

The word table is a plain text file, one token per line followed by
`dimension` floats, all space-separated (the format used by widely published
50-dimensional embedding files). Features are 4 componentwise aggregations
(mean, mode, median, variance) over the per-value vectors, aggregation-major,
plus one extraction-success flag.

Missing features are marked with NaN and replaced downstream by mean
imputation.
"""

from __future__ import annotations

import string
from pathlib import Path

import numpy as np

from ..corpus import Column
from ..errors import DataError
from ._moments import mode_smallest

N_AGGS = 4  # mean, mode, median, variance

_STRIP_CHARS = string.punctuation


def tokenize_value(value: str) -> list[str]:
    """Whitespace-split, strip surrounding ASCII punctuation, case-fold."""
    toks = []
    for raw in value.split():
        tok = raw.strip(_STRIP_CHARS).casefold()
        if tok:
            toks.append(tok)
    return toks


class WordVectorTable:
    """Immutable token -> fixed-dimension vector map."""

    def __init__(self, entries: dict[str, np.ndarray], dimension: int):
        self.entries = entries
        self.dimension = dimension

    def __contains__(self, token: str) -> bool:
        return token in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, token: str) -> np.ndarray | None:
        return self.entries.get(token)


def load_word_vectors(path: str | Path) -> WordVectorTable:
    """Parse a word-vector text file; duplicate tokens keep the first entry."""
    path = Path(path)
    entries: dict[str, np.ndarray] = {}
    dimension: int | None = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                raise DataError(f"{path}:{lineno}: expected token plus floats")
            token = parts[0].casefold()
            try:
                vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: unparseable float: {exc}") from exc
            if dimension is None:
                dimension = vec.size
            elif vec.size != dimension:
                raise DataError(
                    f"{path}:{lineno}: dimension {vec.size} != {dimension} from first line"
                )
            if token not in entries:
                entries[token] = vec
    if dimension is None:
        raise DataError(f"{path}: empty word-vector file")
    return WordVectorTable(entries, dimension)


def value_vectors(column: Column, table: WordVectorTable) -> np.ndarray:
    """One vector per value that produced at least one in-vocabulary token.

    Each value is represented by the mean of its distinct found token
    vectors; duplicate tokens within a value contribute once."""
    vecs = []
    for value in column.values:
        found = []
        seen: set[str] = set()
        for tok in tokenize_value(value):
            if tok in seen:
                continue
            seen.add(tok)
            v = table.get(tok)
            if v is not None:
                found.append(v)
        if found:
            vecs.append(np.mean(found, axis=0))
    if not vecs:
        return np.empty((0, table.dimension))
    return np.stack(vecs)


def extract_word_features(column: Column, table: WordVectorTable) -> np.ndarray:
    """200 aggregate slots (aggregation-major) followed by the success flag.

    Returns an array of length 4*dimension + 1; all aggregate slots are NaN
    and the flag is 0.0 when no value yielded a vector."""
    d = table.dimension
    vecs = value_vectors(column, table)
    out = np.empty(N_AGGS * d + 1)
    if vecs.shape[0] == 0:
        out[:-1] = np.nan
        out[-1] = 0.0
        return out
    out[0:d] = vecs.mean(axis=0)
    out[d:2 * d] = [mode_smallest(vecs[:, j]) for j in range(d)]
    out[2 * d:3 * d] = np.median(vecs, axis=0)
    out[3 * d:4 * d] = vecs.var(axis=0)
    out[-1] = 1.0
    return out
