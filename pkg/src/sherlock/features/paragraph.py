"""Distributed bag-of-words paragraph vectors over columns.

Each column is a paragraph and each (trimmed, case-folded) cell value is one
token. Training maximizes the negative-sampling objective of predicting a
column's tokens from the column's paragraph vector; token output weights and
paragraph vectors are updated jointly. Inference freezes the token weights
and fits a fresh paragraph vector with the same schedule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..corpus import Column, Corpus
from ..errors import DataError


@dataclass(frozen=True)
class PVHyperparams:
    dimension: int = 400
    epochs: int = 20
    window: int = 5
    negative: int = 5
    alpha: float = 0.025
    min_alpha: float = 1e-4
    min_count: int = 2
    noise_power: float = 0.75
    seed: int = 0


def column_tokens(column: Column) -> list[str]:
    return [v.strip().casefold() for v in column.values]


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -30.0, 30.0)))


class ParagraphVectorModel:
    def __init__(self, hyperparams: PVHyperparams, vocab: dict[str, int],
                 token_weights: np.ndarray, paragraph_vectors: np.ndarray,
                 noise_cdf: np.ndarray, epoch_losses: list[float]):
        self.hyperparams = hyperparams
        self.vocab = vocab
        self.token_weights = token_weights
        self.paragraph_vectors = paragraph_vectors
        self.noise_cdf = noise_cdf
        self.epoch_losses = epoch_losses

    @property
    def dimension(self) -> int:
        return self.hyperparams.dimension

    def token_ids(self, column: Column) -> np.ndarray:
        ids = [self.vocab[t] for t in column_tokens(column) if t in self.vocab]
        return np.array(ids, dtype=np.int64)


def _build_vocab(columns: list[Column], min_count: int,
                 noise_power: float) -> tuple[dict[str, int], np.ndarray]:
    freq: dict[str, int] = {}
    for col in columns:
        for tok in column_tokens(col):
            freq[tok] = freq.get(tok, 0) + 1
    kept = sorted(tok for tok, c in freq.items() if c >= min_count)
    if not kept:
        raise DataError(
            f"empty vocabulary: no token occurs at least {min_count} times"
        )
    vocab = {tok: i for i, tok in enumerate(kept)}
    weights = np.array([freq[tok] for tok in kept], dtype=np.float64) ** noise_power
    cdf = np.cumsum(weights / weights.sum())
    return vocab, cdf


def _init_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    return rng.uniform(-0.5 / dim, 0.5 / dim, size=dim)


def _train_column_pass(paragraph: np.ndarray, token_ids: np.ndarray,
                       weights: np.ndarray, noise_cdf: np.ndarray,
                       rng: np.random.Generator, lr: float, negative: int,
                       window: int, update_weights: bool) -> float:
    """One training visit of a column: a window of targets, one negative-
    sampling gradient step each. Returns the summed pre-update loss."""
    n = token_ids.size
    k = min(window, n)
    start = int(rng.integers(0, n - k + 1))
    loss = 0.0
    for target in token_ids[start:start + k]:
        negs = np.searchsorted(noise_cdf, rng.random(negative))
        negs = np.minimum(negs, noise_cdf.size - 1)
        negs = negs[negs != target]
        indices = np.concatenate(([target], negs))
        labels = np.zeros(indices.size)
        labels[0] = 1.0
        vecs = weights[indices]
        f = _sigmoid(vecs @ paragraph)
        eps = 1e-12
        loss -= float(np.log(f[0] + eps) + np.sum(np.log(1.0 - f[1:] + eps)))
        g = lr * (labels - f)
        grad_p = g @ vecs
        if update_weights:
            np.add.at(weights, indices, np.outer(g, paragraph))
        paragraph += grad_p
    return loss


def train_pvdbow(train_columns: Corpus | list[Column],
                 hyperparams: PVHyperparams = PVHyperparams()) -> ParagraphVectorModel:
    """Train the model; deterministic for a given seed (single-threaded)."""
    columns = list(train_columns)
    if len(columns) < 2:
        raise DataError("need at least 2 training columns")
    hp = hyperparams
    vocab, noise_cdf = _build_vocab(columns, hp.min_count, hp.noise_power)

    rng = np.random.default_rng(hp.seed)
    weights = np.zeros((len(vocab), hp.dimension))
    paragraphs = np.stack([_init_vector(rng, hp.dimension) for _ in columns])
    ids_per_col = [
        np.array([vocab[t] for t in column_tokens(c) if t in vocab], dtype=np.int64)
        for c in columns
    ]

    total_visits = hp.epochs * len(columns)
    visit = 0
    epoch_losses: list[float] = []
    for _epoch in range(hp.epochs):
        epoch_loss = 0.0
        steps = 0
        for i, ids in enumerate(ids_per_col):
            lr = hp.alpha - (hp.alpha - hp.min_alpha) * (visit / max(1, total_visits - 1))
            visit += 1
            if ids.size == 0:
                continue
            epoch_loss += _train_column_pass(
                paragraphs[i], ids, weights, noise_cdf, rng, lr,
                hp.negative, hp.window, update_weights=True)
            steps += min(hp.window, ids.size)
        epoch_losses.append(epoch_loss / max(1, steps))

    return ParagraphVectorModel(hp, vocab, weights, paragraphs, noise_cdf, epoch_losses)


def infer_paragraph_vector(model: ParagraphVectorModel, column: Column,
                           seed: int | None = None) -> np.ndarray:
    """Fit a fresh, seeded paragraph vector against frozen token weights.

    A column with zero in-vocabulary tokens returns the seeded
    initialization unchanged."""
    hp = model.hyperparams
    rng = np.random.default_rng(hp.seed if seed is None else seed)
    paragraph = _init_vector(rng, hp.dimension)
    ids = model.token_ids(column)
    if ids.size == 0:
        return paragraph
    for epoch in range(hp.epochs):
        lr = hp.alpha - (hp.alpha - hp.min_alpha) * (epoch / max(1, hp.epochs - 1))
        _train_column_pass(paragraph, ids, model.token_weights, model.noise_cdf,
                           rng, lr, hp.negative, hp.window, update_weights=False)
    return paragraph
