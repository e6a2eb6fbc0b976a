"""Matching-based benchmarks: dictionary and regex majority vote.

Both models sample up to 1,000 column values (seeded, without replacement);
each sampled value votes for every type whose dictionary contains it / whose
pattern matches the full value. The most-voted type wins (ties to the
smaller type index); zero votes means abstain, reported as ABSTAIN.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Column, Corpus
from .errors import DataError
from .semtypes import N_TYPES, normalize_header, type_name

ABSTAIN = -1


@dataclass
class DictionaryModel:
    """Per type, the k most frequent training values with counts."""

    entries: dict[int, list[tuple[str, int]]]

    def __post_init__(self) -> None:
        self._value_to_types: dict[str, list[int]] = {}
        for tid in sorted(self.entries):
            for value, _count in self.entries[tid]:
                self._value_to_types.setdefault(value, []).append(tid)

    def types_for(self, value: str) -> list[int]:
        return self._value_to_types.get(value, [])

    def n_pairs(self) -> int:
        return sum(len(v) for v in self.entries.values())

    def to_json(self) -> str:
        return json.dumps({
            type_name(tid): [[v, c] for v, c in pairs]
            for tid, pairs in sorted(self.entries.items())
        }, ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> "DictionaryModel":
        raw = json.loads(text)
        entries: dict[int, list[tuple[str, int]]] = {}
        for name, pairs in raw.items():
            tid = normalize_header(name)
            if tid is None:
                raise DataError(f"dictionary names unknown type {name!r}")
            entries[tid] = [(str(v), int(c)) for v, c in pairs]
        return cls(entries)


def build_dictionary(train_corpus: Corpus, k: int = 1000) -> DictionaryModel:
    """Count exact value strings per type and keep the top k (ties broken
    lexicographically)."""
    counts: dict[int, dict[str, int]] = {}
    for col in train_corpus:
        if col.label is None:
            continue
        per_type = counts.setdefault(col.label, {})
        for value in col.values:
            per_type[value] = per_type.get(value, 0) + 1
    entries = {}
    for tid, per_type in counts.items():
        ranked = sorted(per_type.items(), key=lambda kv: (-kv[1], kv[0]))
        entries[tid] = ranked[:k]
    return DictionaryModel(entries)


def _sample_values(column: Column, sample_size: int, seed: int) -> list[str]:
    n = len(column.values)
    if n <= sample_size:
        return list(column.values)
    rng = np.random.default_rng(seed)
    idx = rng.choice(n, size=sample_size, replace=False)
    return [column.values[i] for i in idx]


def _majority(votes: np.ndarray) -> int:
    if votes.sum() == 0:
        return ABSTAIN
    return int(votes.argmax())


def predict_dictionary(model: DictionaryModel, column: Column,
                       sample_size: int = 1000, seed: int = 0) -> int:
    """Most-voted type over sampled values, or ABSTAIN on zero hits."""
    votes = np.zeros(N_TYPES, dtype=np.int64)
    for value in _sample_values(column, sample_size, seed):
        for tid in model.types_for(value):
            votes[tid] += 1
    return _majority(votes)


@dataclass
class RegexRuleSet:
    """One externally supplied pattern per type; full-string matching."""

    patterns: dict[int, str]

    def __post_init__(self) -> None:
        self._compiled: dict[int, re.Pattern] = {}
        for tid, pattern in self.patterns.items():
            try:
                self._compiled[tid] = re.compile(pattern)
            except re.error as exc:
                raise DataError(
                    f"invalid pattern for type {type_name(tid)!r}: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "RegexRuleSet":
        raw = json.loads(text)
        patterns: dict[int, str] = {}
        for name, pattern in raw.items():
            tid = normalize_header(name)
            if tid is None:
                raise DataError(f"rules file names unknown type {name!r}")
            patterns[tid] = str(pattern)
        return cls(patterns)

    @classmethod
    def load(cls, path: str | Path) -> "RegexRuleSet":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def to_json(self) -> str:
        return json.dumps({type_name(tid): pat
                           for tid, pat in sorted(self.patterns.items())},
                          ensure_ascii=False)


def predict_regex(rules: RegexRuleSet, column: Column,
                  sample_size: int = 1000, seed: int = 0) -> int:
    """Majority vote over full-string pattern matches, or ABSTAIN."""
    votes = np.zeros(N_TYPES, dtype=np.int64)
    for value in _sample_values(column, sample_size, seed):
        for tid, pattern in rules._compiled.items():
            if pattern.fullmatch(value):
                votes[tid] += 1
    return _majority(votes)
