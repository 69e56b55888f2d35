"""Confusion counts, thresholded scores and rank-based AUC."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .errors import ContractError

THRESHOLD = 0.5
METRIC_NAMES = ("loss", "accuracy", "precision", "recall", "f1", "auc")


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def degenerate(self) -> bool:
        """True when precision or recall had to be guarded against 0/0."""
        return self.tp + self.fp == 0 or self.tp + self.fn == 0


class Scores(NamedTuple):
    accuracy: float
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class FoldMetrics:
    loss: float
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float
    flagged: bool = False  # a zero-division guard fired

    def values(self) -> tuple:
        return tuple(getattr(self, name) for name in METRIC_NAMES)

    def to_dict(self) -> dict:
        return asdict(self)


def confusion(probs, labels, threshold: float = THRESHOLD) -> Confusion:
    """Count outcomes, predicting positive iff ``probs[:, 1] >= threshold``."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels)
    if probs.ndim != 2 or probs.shape[0] == 0:
        raise ContractError("confusion needs at least one (B, 2) probability row")
    if labels.shape != (probs.shape[0],):
        raise ContractError(f"{labels.shape[0]} labels for {probs.shape[0]} rows")
    if not 0.0 < threshold < 1.0:
        raise ContractError(f"threshold must lie in (0, 1), got {threshold}")
    pred = probs[:, 1] >= threshold
    pos = labels == 1
    return Confusion(
        tp=int(np.sum(pred & pos)),
        fp=int(np.sum(pred & ~pos)),
        tn=int(np.sum(~pred & ~pos)),
        fn=int(np.sum(~pred & pos)),
    )


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def classification_metrics(c: Confusion) -> Scores:
    if c.total == 0:
        raise ContractError("no samples in confusion matrix")
    precision = _ratio(c.tp, c.tp + c.fp)
    recall = _ratio(c.tp, c.tp + c.fn)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return Scores((c.tp + c.tn) / c.total, precision, recall, f1)


def auc(scores, labels) -> float:
    """ROC AUC as the Mann-Whitney statistic with average ranks for ties.

    Equals P(score of a random positive > score of a random negative), with
    ties counted as one half.
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if scores.shape != labels.shape:
        raise ContractError(f"{scores.size} scores for {labels.size} labels")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0:
        raise ContractError("AUC is undefined without positive (label 1) samples")
    if n_neg == 0:
        raise ContractError("AUC is undefined without negative (label 0) samples")

    order = np.argsort(scores, kind="mergesort")
    sorted_scores = scores[order]
    # average 1-based rank of each run of equal scores
    boundaries = np.flatnonzero(np.diff(sorted_scores)) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [scores.size]))
    run_rank = (starts + ends + 1) / 2.0
    ranks = np.empty(scores.size)
    ranks[order] = np.repeat(run_rank, ends - starts)

    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def average(rows) -> FoldMetrics:
    """Unweighted column means; flagged if any row is."""
    rows = list(rows)
    if not rows:
        raise ContractError("cannot average zero folds")
    cols = np.array([r.values() for r in rows], dtype=np.float64)
    return FoldMetrics(*(float(v) for v in cols.mean(axis=0)), flagged=any(r.flagged for r in rows))
