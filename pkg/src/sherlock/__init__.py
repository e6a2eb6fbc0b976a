"""Semantic column-type detection toolkit.

Extracts 1,588 features from raw data columns (global statistics, character
distributions, word-embedding aggregates, paragraph vectors), trains a
multi-input feedforward classifier over a 78-type vocabulary, and benchmarks
it against tree-based and matching-based baselines.
"""

from .corpus import Column, Corpus, SplitSpec, filter_corpus, load_corpus, split
from .pipeline import SCHEMA, assemble_features, fit_imputer
from .semtypes import N_TYPES, SEMANTIC_TYPES, normalize_header

__all__ = [
    "Column", "Corpus", "SplitSpec", "filter_corpus", "load_corpus", "split",
    "SCHEMA", "assemble_features", "fit_imputer",
    "N_TYPES", "SEMANTIC_TYPES", "normalize_header",
]

__version__ = "0.1.0"
