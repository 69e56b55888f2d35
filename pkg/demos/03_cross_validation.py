# %% [markdown]
# Ten-fold cross-validation
# -------------------------
# Stratified folds, a standardiser fitted inside each fold, and a table with
# one row per fold plus the average, in the same layout as the published
# result tables.

# %%
from senn.dataio import Category, SynthConfig, gen_synthetic, select_features
from senn.model import ModelSpec, Variant
from senn.pipeline import cross_validate, stratified_kfold
from senn.report import format_fold_table

ds = gen_synthetic(SynthConfig(n_per_class=500, separation=0.5, seed=3))

plan = stratified_kfold(ds, k=10, seed=3)
print("fold sizes:", [len(plan.test_indices(f)) for f in range(10)])

# %%
for category in (Category.ALL, Category.GENOMIC):
    subset = select_features(ds, category)
    rep = cross_validate(subset, ModelSpec(variant=Variant.DPNN, seed=3), k=10, seed=3, category=category)
    print(f"\nDPNN, {category.value} features ({subset.x.shape[1]} columns)")
    print(format_fold_table(rep))
