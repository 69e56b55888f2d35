"""Stratified k-fold cross-validation and the variant x feature-category grid."""

from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .dataio import Category, Dataset, apply_standardizer, fit_standardizer, select_features
from .errors import ContractError
from .metrics import FoldMetrics, average, auc, classification_metrics, confusion
from .model import ModelSpec, TrainedModel, Variant, cross_entropy, forward, one_hot, train
from .numkernel import SeededRng

DEFAULT_K = 10


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: np.ndarray  # fold index per sample

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


def stratified_kfold(ds, k: int = DEFAULT_K, seed: int = 0) -> FoldPlan:
    """Shuffle each class with ``seed`` and deal its indices round-robin into ``k`` folds.

    Classes are dealt in label order and the dealer does not restart between
    classes, so fold totals also differ by at most one. ``ds`` may be a
    Dataset or a bare label array.
    """
    y = np.asarray(ds.y if isinstance(ds, Dataset) else ds)
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 2:
        raise ContractError(f"k must be an integer >= 2, got {k!r}")
    rng = SeededRng(seed)
    assignments = np.full(y.shape[0], -1, dtype=np.int64)
    next_fold = 0
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        if members.size < k:
            raise ContractError(f"class {cls} has {members.size} samples, fewer than k={k}")
        shuffled = members[rng.permutation(members.size)]
        assignments[shuffled] = (next_fold + np.arange(members.size)) % k
        next_fold = (next_fold + members.size) % k
    return FoldPlan(int(k), assignments)


@dataclass
class CvReport:
    rows: list
    average: FoldMetrics
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "meta": self.meta,
            "rows": [r.to_dict() for r in self.rows],
            "average": self.average.to_dict(),
        }


@dataclass
class AblationReport:
    grid: dict  # (Variant, Category) -> CvReport
    plan: FoldPlan


def evaluate(model: TrainedModel, x, y) -> FoldMetrics:
    probs = forward(model, x)
    c = confusion(probs, y)
    scores = classification_metrics(c)
    return FoldMetrics(
        loss=cross_entropy(probs, one_hot(y)),
        accuracy=scores.accuracy,
        precision=scores.precision,
        recall=scores.recall,
        f1=scores.f1,
        auc=auc(probs[:, 1], y),
        flagged=c.degenerate,
    )


def run_fold(ds: Dataset, spec: ModelSpec, plan: FoldPlan, fold: int) -> FoldMetrics:
    """Standardise on the training folds, train a fresh model, score the held-out fold."""
    train_idx = plan.train_indices(fold)
    test_idx = plan.test_indices(fold)
    try:
        std = fit_standardizer(ds.x[train_idx])
        x_train = apply_standardizer(std, ds.x[train_idx])
        x_test = apply_standardizer(std, ds.x[test_idx])
        rng = SeededRng(spec.seed).split(fold)
        model, _ = train(spec, x_train, ds.y[train_idx], rng)
        return evaluate(model, x_test, ds.y[test_idx])
    except ValueError as exc:
        raise type(exc)(f"fold {fold}: {exc}") from exc


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def cross_validate(
    ds: Dataset,
    spec: ModelSpec,
    k: int = DEFAULT_K,
    seed: int = 0,
    plan: Optional[FoldPlan] = None,
    workers: int = 1,
    category: Category = Category.ALL,
) -> CvReport:
    """k-fold CV of ``spec`` on ``ds``; one FoldMetrics row per fold plus the mean.

    ``seed`` fixes the fold plan; each fold's model draws from
    ``SeededRng(spec.seed).split(fold)``. Pass ``plan`` to reuse folds.
    """
    if plan is None:
        plan = stratified_kfold(ds, k, seed)
    elif plan.assignments.shape[0] != len(ds):
        raise ContractError(f"fold plan covers {plan.assignments.shape[0]} rows, dataset has {len(ds)}")
    rows = _map(lambda f: run_fold(ds, spec, plan, f), range(plan.k), workers)
    meta = {
        "variant": spec.variant.value,
        "category": Category(category).value,
        "k": plan.k,
        "seed": seed,
        "model_seed": spec.seed,
        "dataset_fingerprint": ds.fingerprint(),
    }
    return CvReport(rows, average(rows), meta)


def ablate(
    ds: Dataset,
    base_spec: ModelSpec,
    categories: Iterable = (Category.ALL, Category.GENOMIC, Category.EPIGENOMIC),
    variants: Iterable = (Variant.DPNN, Variant.CONV1D),
    k: int = DEFAULT_K,
    seed: int = 0,
    workers: int = 1,
) -> AblationReport:
    """Cross-validate every (variant, category) cell on one shared fold plan."""
    categories = [Category(c) for c in categories]
    variants = [Variant(v) for v in variants]
    plan = stratified_kfold(ds, k, seed)
    subsets = {c: select_features(ds, c) for c in categories}
    grid = {}
    for v in variants:
        spec = dataclasses.replace(base_spec, variant=v)
        for c in categories:
            try:
                grid[(v, c)] = cross_validate(subsets[c], spec, plan.k, seed, plan, workers, c)
            except ValueError as exc:
                raise type(exc)(f"cell ({v.value}, {c.value}): {exc}") from exc
    return AblationReport(grid, plan)
