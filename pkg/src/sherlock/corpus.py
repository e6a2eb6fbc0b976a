"""Corpus ingestion, filtering and stratified splitting.

A corpus is a flat list of labeled columns. The JSON Lines ingestion format
is one object per line with a required "values" array of strings plus either
an explicit "label" or a raw "header" that gets normalized onto the 78-type
vocabulary.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from .semtypes import N_TYPES, normalize_header, type_name

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Column:
    """An ordered list of raw cell values with an optional type label."""

    values: tuple[str, ...]
    label: int | None = None
    source_header: str | None = None

    def __post_init__(self) -> None:
        if len(self.values) < 1:
            raise DataError("column must have at least one value")
        if self.label is not None and not 0 <= self.label < N_TYPES:
            raise DataError(f"label {self.label} outside the type vocabulary")


@dataclass
class Corpus:
    columns: list[Column] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.columns)

    def __iter__(self):
        return iter(self.columns)

    def per_type_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for col in self.columns:
            if col.label is not None:
                counts[col.label] = counts.get(col.label, 0) + 1
        return counts

    def labels(self) -> np.ndarray:
        return np.array([-1 if c.label is None else c.label for c in self.columns])


@dataclass(frozen=True)
class SplitSpec:
    ratios: tuple[float, float, float] = (0.6, 0.2, 0.2)
    seed: int = 0

    def __post_init__(self) -> None:
        if any(r < 0 for r in self.ratios):
            raise DataError("split ratios must be non-negative")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise DataError(f"split ratios must sum to 1, got {sum(self.ratios)}")


def load_corpus(path: str | Path) -> Corpus:
    """Read a JSON Lines corpus file.

    Lines carrying a "header" but no "label" are labeled via
    ``normalize_header``; lines that end up unlabeled are dropped with a
    counted warning. Malformed JSON or an empty file raise DataError.
    """
    path = Path(path)
    columns: list[Column] = []
    dropped = 0
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: malformed JSON line: {exc}") from exc
            if not isinstance(obj, dict) or "values" not in obj:
                raise DataError(f"{path}:{lineno}: missing required 'values' field")
            values = obj["values"]
            if not isinstance(values, list) or not all(isinstance(v, str) for v in values):
                raise DataError(f"{path}:{lineno}: 'values' must be an array of strings")
            if not values:
                raise DataError(f"{path}:{lineno}: empty 'values' array")

            label: int | None = None
            header = obj.get("header")
            if "label" in obj:
                label = normalize_header(str(obj["label"]))
                if label is None:
                    raise DataError(
                        f"{path}:{lineno}: label {obj['label']!r} is not one of the 78 types"
                    )
            elif header is not None:
                label = normalize_header(str(header))

            if label is None:
                dropped += 1
                continue
            columns.append(Column(tuple(values), label, header))

    if not columns and dropped == 0:
        raise DataError(f"{path}: empty corpus file")
    if dropped:
        logger.warning("%s: dropped %d unlabeled/unmatched lines", path, dropped)
    if not columns:
        raise DataError(f"{path}: no usable columns (all {dropped} lines dropped)")
    return Corpus(columns)


def filter_corpus(
    corpus: Corpus,
    cap: int = 15_000,
    min_count: int = 1_000,
    coverage_threshold: float = 0.15,
    vocab=None,
    seed: int = 0,
) -> Corpus:
    """Apply the three corpus-level filters.

    1. drop types where at least ``coverage_threshold`` of columns contain no
       token found in ``vocab`` (skipped when vocab is None);
    2. drop types with fewer than ``min_count`` columns;
    3. down-sample types above ``cap`` uniformly at random (seeded).
    """
    from .features.words import tokenize_value

    if not (cap >= min_count >= 1):
        raise DataError(f"need cap >= min_count >= 1, got cap={cap} min_count={min_count}")
    if not 0.0 <= coverage_threshold <= 1.0:
        raise DataError("coverage_threshold must be in [0, 1]")

    by_type: dict[int, list[Column]] = {}
    for col in corpus:
        if col.label is not None:
            by_type.setdefault(col.label, []).append(col)

    def column_has_vocab_token(col: Column) -> bool:
        for value in col.values:
            for tok in tokenize_value(value):
                if tok in vocab:
                    return True
        return False

    if vocab is not None:
        kept = {}
        for tid, cols in by_type.items():
            uncovered = sum(1 for c in cols if not column_has_vocab_token(c))
            if uncovered / len(cols) >= coverage_threshold:
                logger.info("dropping type %r: %.1f%% of columns have no vocab token",
                            type_name(tid), 100.0 * uncovered / len(cols))
            else:
                kept[tid] = cols
        by_type = kept

    by_type = {tid: cols for tid, cols in by_type.items() if len(cols) >= min_count}

    rng = np.random.default_rng(seed)
    out: list[Column] = []
    for tid in sorted(by_type):
        cols = by_type[tid]
        if len(cols) > cap:
            idx = rng.choice(len(cols), size=cap, replace=False)
            cols = [cols[i] for i in sorted(idx)]
        out.extend(cols)

    if not out:
        raise DataError("filtering removed every column")
    return Corpus(out)


def _split_counts(n: int, ratios: tuple[float, float, float]) -> list[int]:
    """Largest-remainder apportionment of n items over three ratios."""
    exact = [n * r for r in ratios]
    counts = [int(np.floor(e)) for e in exact]
    remainder = n - sum(counts)
    order = sorted(range(3), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in order[:remainder]:
        counts[i] += 1
    return counts


def split(corpus: Corpus, spec: SplitSpec) -> tuple[Corpus, Corpus, Corpus]:
    """Per-type stratified shuffle split; deterministic for a given seed."""
    by_type: dict[int, list[Column]] = {}
    for col in corpus:
        by_type.setdefault(col.label if col.label is not None else -1, []).append(col)

    rng = np.random.default_rng(spec.seed)
    parts: tuple[list[Column], ...] = ([], [], [])
    for tid in sorted(by_type):
        cols = by_type[tid]
        perm = rng.permutation(len(cols))
        counts = _split_counts(len(cols), spec.ratios)
        start = 0
        for part, k in zip(parts, counts):
            part.extend(cols[i] for i in perm[start:start + k])
            start += k
    return Corpus(parts[0]), Corpus(parts[1]), Corpus(parts[2])


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus back out in the JSON Lines ingestion format."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for col in corpus:
            obj: dict = {"values": list(col.values)}
            if col.label is not None:
                obj["label"] = type_name(col.label)
            if col.source_header is not None:
                obj["header"] = col.source_header
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
