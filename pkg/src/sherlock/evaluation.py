"""Metrics: per-class precision/recall/F1, support-weighted F1, confusion
matrix, rejection curves and bootstrap confidence intervals.

Predictions may be -1 (abstain/reject). Those count as wrong for recall but
never enter any class's precision denominator; the confusion matrix carries
them in a dedicated trailing column.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .semtypes import N_TYPES, type_name


@dataclass
class EvaluationReport:
    precision: np.ndarray          # (n_classes,)
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    weighted_f1: float
    confusion: np.ndarray          # (n_classes, n_classes + 1), last col = abstain
    runtime_per_sample: float | None = None
    model_size_bytes: int | None = None

    def to_dict(self) -> dict:
        per_class = {}
        for c in range(N_TYPES):
            if self.support[c] == 0:
                continue
            per_class[type_name(c)] = {
                "precision": float(self.precision[c]),
                "recall": float(self.recall[c]),
                "f1": float(self.f1[c]),
                "support": int(self.support[c]),
            }
        out = {
            "weighted_f1": self.weighted_f1,
            "per_class": per_class,
            "confusion": self.confusion.tolist(),
        }
        if self.runtime_per_sample is not None:
            out["runtime_per_sample_s"] = self.runtime_per_sample
        if self.model_size_bytes is not None:
            out["model_size_bytes"] = self.model_size_bytes
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def evaluate(predictions, truths) -> EvaluationReport:
    """Per-class metrics with the 0/0 -> 0 convention, plus support-weighted
    F1 over classes present in the truth set."""
    pred = np.asarray(predictions, dtype=np.int64)
    truth = np.asarray(truths, dtype=np.int64)
    if pred.shape != truth.shape or pred.size == 0:
        raise DataError(
            f"predictions/truths must be equal-length and non-empty "
            f"({pred.size} vs {truth.size})")

    confusion = np.zeros((N_TYPES, N_TYPES + 1), dtype=np.int64)
    for p, t in zip(pred, truth):
        confusion[t, N_TYPES if p < 0 else p] += 1

    support = confusion.sum(axis=1)
    tp = np.diag(confusion[:, :N_TYPES]).astype(np.float64)
    predicted = confusion[:, :N_TYPES].sum(axis=0).astype(np.float64)

    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(predicted > 0, tp / np.where(predicted > 0, predicted, 1), 0.0)
        recall = np.where(support > 0, tp / np.where(support > 0, support, 1), 0.0)
        denom = precision + recall
        f1 = np.where(denom > 0, 2.0 * precision * recall / np.where(denom > 0, denom, 1), 0.0)

    total_support = support.sum()
    weighted_f1 = float(np.sum(support * f1) / total_support)
    return EvaluationReport(precision, recall, f1, support, weighted_f1, confusion)


@dataclass
class RejectionCurve:
    """(retained_fraction, weighted F1) pairs, retained fraction increasing;
    the final point at retention 1.0 equals the unrejected weighted F1."""

    points: list[tuple[float, float]]

    def to_csv(self) -> str:
        lines = ["retained_fraction,weighted_f1"]
        lines += [f"{f},{v}" for f, v in self.points]
        return "\n".join(lines) + "\n"


def rejection_curve(probabilities, truths, fractions) -> RejectionCurve:
    """Weighted F1 over the top ceil(f*n) most confident samples for each
    retained fraction f."""
    probs = np.atleast_2d(np.asarray(probabilities, dtype=np.float64))
    truth = np.asarray(truths, dtype=np.int64)
    fractions = sorted(set(float(f) for f in fractions))
    if not fractions:
        raise DataError("need at least one retained fraction")
    if any(not 0.0 < f <= 1.0 for f in fractions):
        raise DataError("retained fractions must be in (0, 1]")
    if not np.allclose(probs.sum(axis=1), 1.0, atol=1e-6):
        raise DataError("probability rows must sum to 1")

    n = probs.shape[0]
    confidence = probs.max(axis=1)
    order = np.argsort(-confidence, kind="mergesort")
    pred = probs.argmax(axis=1)

    points = []
    for f in fractions:
        k = math.ceil(f * n)
        keep = order[:k]
        points.append((f, evaluate(pred[keep], truth[keep]).weighted_f1))
    return RejectionCurve(points)


def rejection_curve_by_threshold(probabilities, truths, thresholds) -> RejectionCurve:
    """Alternative axis: keep samples whose top probability reaches each
    threshold. Points are (retained_fraction, weighted F1)."""
    probs = np.atleast_2d(np.asarray(probabilities, dtype=np.float64))
    truth = np.asarray(truths, dtype=np.int64)
    confidence = probs.max(axis=1)
    pred = probs.argmax(axis=1)
    points = []
    for thr in sorted(set(float(t) for t in thresholds)):
        keep = confidence >= thr
        if not keep.any():
            continue
        points.append((float(keep.mean()), evaluate(pred[keep], truth[keep]).weighted_f1))
    points.sort()
    return RejectionCurve(points)


def bootstrap_f1(predictions, truths, n_iterations: int = 1000,
                 seed: int = 0) -> tuple[float, tuple[float, float]]:
    """Resample (prediction, truth) pairs with replacement; return the mean
    weighted F1 and its 2.5th/97.5th percentiles."""
    pred = np.asarray(predictions, dtype=np.int64)
    truth = np.asarray(truths, dtype=np.int64)
    if n_iterations < 1:
        raise DataError("n_iterations must be >= 1")
    rng = np.random.default_rng(seed)
    n = pred.size
    scores = np.empty(n_iterations)
    for i in range(n_iterations):
        idx = rng.integers(0, n, size=n)
        scores[i] = evaluate(pred[idx], truth[idx]).weighted_f1
    lo, hi = np.percentile(scores, [2.5, 97.5])
    return float(scores.mean()), (float(lo), float(hi))
