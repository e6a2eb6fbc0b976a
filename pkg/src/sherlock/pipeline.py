"""Feature assembly: the canonical 1,588-slot schema, mean imputation, and
feature-matrix persistence.

Slot layout: stats (27) | chars (960) | word aggregates (200) |
word-extraction flag (1) | paragraph vector (400). Missing values (NaN)
arise only from the word-embedding slots and are replaced by training-split
means at both train and predict time.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .corpus import Column, Corpus
from .errors import DataError
from .features.chars import AGGREGATIONS, N_CHAR_FEATURES, ROSTER_CODEPOINTS, extract_char_features
from .features.paragraph import ParagraphVectorModel, infer_paragraph_vector
from .features.stats import GLOBAL_STAT_NAMES, N_GLOBAL_STATS, extract_global_stats
from .features.words import WordVectorTable, extract_word_features
from .semtypes import normalize_header, type_name

WORD_DIM = 50
PARAGRAPH_DIM = 400
WORD_AGGS = ("mean", "mode", "median", "variance")

STATS_SLICE = slice(0, N_GLOBAL_STATS)
CHARS_SLICE = slice(27, 27 + N_CHAR_FEATURES)
WORDS_SLICE = slice(987, 987 + len(WORD_AGGS) * WORD_DIM)
FLAG_INDEX = 1187
WORDS_FLAG_SLICE = slice(987, 1188)  # aggregates plus the flag (201 slots)
PARAGRAPH_SLICE = slice(1188, 1188 + PARAGRAPH_DIM)

N_FEATURES = 1588

FAMILY_SLICES = {
    "stats": STATS_SLICE,
    "chars": CHARS_SLICE,
    "words": WORDS_FLAG_SLICE,
    "paragraph": PARAGRAPH_SLICE,
}


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered (name, category) pairs for every feature slot."""

    names: tuple[str, ...]
    categories: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.names)

    def sha256(self) -> str:
        return hashlib.sha256("\n".join(self.names).encode()).hexdigest()


def build_schema() -> FeatureSchema:
    names: list[str] = []
    categories: list[str] = []

    names.extend(GLOBAL_STAT_NAMES)
    categories.extend(["stats"] * N_GLOBAL_STATS)

    for cp in ROSTER_CODEPOINTS:
        for agg in AGGREGATIONS:
            names.append(f"char_{cp}_{agg}")
            categories.append("chars")

    for agg in WORD_AGGS:
        for i in range(WORD_DIM):
            names.append(f"word_{agg}_{i}")
            categories.append("words")
    names.append("word_extract_ok")
    categories.append("words_flag")

    for i in range(PARAGRAPH_DIM):
        names.append(f"par_{i}")
        categories.append("paragraph")

    assert len(names) == N_FEATURES and len(set(names)) == N_FEATURES
    return FeatureSchema(tuple(names), tuple(categories))


SCHEMA = build_schema()


def assemble_features(column: Column, word_table: WordVectorTable,
                      pv_model: ParagraphVectorModel,
                      pv_seed: int | None = None) -> np.ndarray:
    """Concatenate the four feature families in schema order (length 1,588)."""
    if word_table.dimension != WORD_DIM:
        raise DataError(
            f"word table dimension {word_table.dimension} != schema dimension {WORD_DIM}"
        )
    if pv_model.dimension != PARAGRAPH_DIM:
        raise DataError(
            f"paragraph model dimension {pv_model.dimension} != schema dimension {PARAGRAPH_DIM}"
        )
    return np.concatenate([
        extract_global_stats(column),
        extract_char_features(column),
        extract_word_features(column, word_table),
        infer_paragraph_vector(pv_model, column, seed=pv_seed),
    ])


def extract_matrix(corpus: Corpus, word_table: WordVectorTable,
                   pv_model: ParagraphVectorModel,
                   pv_seed: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Feature matrix plus label vector (-1 for unlabeled columns)."""
    X = np.empty((len(corpus), N_FEATURES))
    for i, col in enumerate(corpus):
        X[i] = assemble_features(col, word_table, pv_model, pv_seed=pv_seed)
    return X, corpus.labels()


@dataclass(frozen=True)
class Imputer:
    """Per-feature training means, computed ignoring missing markers."""

    means: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.array(X, dtype=np.float64)
        mask = np.isnan(X)
        if X.ndim == 1:
            X[mask] = self.means[mask]
        else:
            X[mask] = np.broadcast_to(self.means, X.shape)[mask]
        return X


def fit_imputer(train_matrix: np.ndarray) -> Imputer:
    """Columnwise means over non-missing entries; all-missing features
    impute 0.0."""
    if train_matrix.size == 0:
        raise DataError("cannot fit imputer on an empty matrix")
    counts = np.sum(~np.isnan(train_matrix), axis=0)
    sums = np.nansum(train_matrix, axis=0)
    means = np.where(counts > 0, sums / np.maximum(counts, 1), 0.0)
    return Imputer(means)


def apply_imputer(imputer: Imputer, vector: np.ndarray) -> np.ndarray:
    return imputer.apply(vector)


def save_matrix(X: np.ndarray, labels: np.ndarray, path: str | Path,
                schema: FeatureSchema = SCHEMA) -> None:
    """CSV with schema names as header, a final "label" column of canonical
    type names, and missing markers serialized as empty fields."""
    df = pd.DataFrame(X, columns=list(schema.names))
    df["label"] = ["" if y < 0 else type_name(int(y)) for y in labels]
    df.to_csv(path, index=False, na_rep="")


def load_matrix(path: str | Path,
                schema: FeatureSchema = SCHEMA) -> tuple[np.ndarray, np.ndarray]:
    path = Path(path)
    df = pd.read_csv(path, dtype={"label": str}, keep_default_na=True,
                     na_values=[""])
    if list(df.columns) != list(schema.names) + ["label"]:
        raise DataError(f"{path}: header does not match the feature schema")
    raw_labels = df["label"]
    labels = np.empty(len(df), dtype=np.int64)
    for i, val in enumerate(raw_labels):
        if not isinstance(val, str) or not val:
            labels[i] = -1
            continue
        tid = normalize_header(val)
        if tid is None:
            raise DataError(f"{path}: row {i}: unknown label {val!r}")
        labels[i] = tid
    X = df[list(schema.names)].to_numpy(dtype=np.float64)
    return X, labels
