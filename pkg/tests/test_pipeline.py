import json
from unittest import mock

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import senn.pipeline as pipeline
from senn.dataio import Category, SynthConfig, gen_synthetic
from senn.errors import ContractError
from senn.model import ModelSpec, Variant
from senn.pipeline import ablate, cross_validate, stratified_kfold

FAST = ModelSpec(epochs=5, seed=2)


def check_plan(y, plan):
    y = np.asarray(y)
    assert plan.assignments.shape == y.shape
    assert set(plan.assignments.tolist()) <= set(range(plan.k))
    folds = [plan.test_indices(f) for f in range(plan.k)]
    assert sorted(np.concatenate(folds).tolist()) == list(range(y.size))
    for cls in np.unique(y):
        total = np.sum(y == cls)
        for idx in folds:
            assert abs(np.sum(y[idx] == cls) - total / plan.k) <= 1
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1


@given(st.integers(2, 12), st.integers(0, 200), st.integers(0, 200), st.integers(0, 2**32))
@settings(max_examples=100, deadline=None)
def test_fold_plan_partitions_and_stratifies(k, extra_pos, extra_neg, seed):
    y = np.array([1] * (k + extra_pos) + [0] * (k + extra_neg))
    check_plan(y, stratified_kfold(y, k, seed))


def test_fold_plan_exact_division():
    y = np.array([1] * 20 + [0] * 20)
    plan = stratified_kfold(y, 10, 0)
    for f in range(10):
        idx = plan.test_indices(f)
        assert len(idx) == 4 and y[idx].sum() == 2


def test_fold_plan_5168_per_class():
    y = np.array([1] * 5168 + [0] * 5168)
    plan = stratified_kfold(y, 10, 3)
    for f in range(10):
        idx = plan.test_indices(f)
        assert len(idx) in (1033, 1034)
        assert y[idx].sum() in (516, 517) and (1 - y[idx]).sum() in (516, 517)


def test_fold_plan_determinism_and_errors():
    y = np.array([0, 1] * 30)
    assert np.array_equal(stratified_kfold(y, 5, 8).assignments, stratified_kfold(y, 5, 8).assignments)
    assert not np.array_equal(stratified_kfold(y, 5, 8).assignments, stratified_kfold(y, 5, 9).assignments)
    with pytest.raises(ContractError, match="fewer than k"):
        stratified_kfold(np.array([0] * 20 + [1] * 3), 5, 0)
    with pytest.raises(ContractError):
        stratified_kfold(y, 1, 0)


@pytest.fixture(scope="module")
def small():
    return gen_synthetic(SynthConfig(n_per_class=60, separation=3.0, seed=5))


def test_cross_validate_structure(small):
    rep = cross_validate(small, FAST, k=3, seed=1)
    assert len(rep.rows) == 3
    cols = np.array([r.values() for r in rep.rows])
    assert np.all(np.abs(cols.mean(axis=0) - np.array(rep.average.values())) <= 1e-12)
    assert rep.meta["k"] == 3 and rep.meta["dataset_fingerprint"] == small.fingerprint()
    assert rep.average.auc > 0.5


def test_cross_validate_is_deterministic_and_thread_safe(small):
    a = cross_validate(small, FAST, k=4, seed=1)
    b = cross_validate(small, FAST, k=4, seed=1, workers=4)
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())


def test_cross_validate_attaches_fold_index(small):
    def boom(*args, **kwargs):
        raise ContractError("bad batch")

    with mock.patch.object(pipeline, "train", boom):
        with pytest.raises(ContractError, match="fold 0: bad batch"):
            cross_validate(small, FAST, k=3, seed=1)


def test_standardizer_is_fit_per_fold(small):
    seen = []
    real = pipeline.fit_standardizer

    def spy(x):
        seen.append(x.shape[0])
        return real(x)

    with mock.patch.object(pipeline, "fit_standardizer", spy):
        cross_validate(small, ModelSpec(epochs=1), k=4, seed=0)
    assert seen == [90] * 4  # 120 rows, 3 of 4 folds each time


def test_ablate_grid_is_paired(small):
    plans = []
    real = pipeline.run_fold

    def spy(ds, spec, plan, fold):
        plans.append(plan.assignments)
        return real(ds, spec, plan, fold)

    with mock.patch.object(pipeline, "run_fold", spy):
        rep = ablate(small, FAST, k=3, seed=4)
    assert len(rep.grid) == 6
    assert set(rep.grid) == {(v, c) for v in Variant for c in (Category.ALL, Category.GENOMIC, Category.EPIGENOMIC)}
    assert all(np.array_equal(p, plans[0]) for p in plans)
    assert rep.grid[(Variant.CONV1D, Category.GENOMIC)].meta["category"] == "genomic"


def test_ablate_single_cell(small):
    rep = ablate(small, FAST, categories=["all"], variants=["dpnn"], k=3, seed=4)
    assert list(rep.grid) == [(Variant.DPNN, Category.ALL)]


def test_ablate_orders_signal_category_first():
    ds = gen_synthetic(SynthConfig(n_per_class=80, separation=2.0, signal_category="epigenomic", seed=6))
    rep = ablate(ds, FAST, categories=["genomic", "epigenomic"], k=4, seed=0)
    for v in Variant:
        assert rep.grid[(v, Category.EPIGENOMIC)].average.auc > rep.grid[(v, Category.GENOMIC)].average.auc


def test_auc_rises_with_separation():
    aucs = []
    for sep in (0.0, 1.0, 2.0, 4.0):
        ds = gen_synthetic(SynthConfig(n_per_class=200, separation=sep, seed=11))
        aucs.append(cross_validate(ds, ModelSpec(seed=11), k=10, seed=11).average.auc)
    assert all(b >= a - 0.02 for a, b in zip(aucs, aucs[1:]))
    assert abs(aucs[0] - 0.5) < 0.1 and aucs[-1] >= 0.99
