# %% [markdown]
# Training one model
# ------------------
# Generate a synthetic stand-in for the 45-feature dataset, standardise it
# and train both architectures with the default settings (20 epochs, Adam).

# %%
from senn.dataio import SynthConfig, apply_standardizer, fit_standardizer, gen_synthetic
from senn.metrics import auc
from senn.model import ModelSpec, Variant, forward, train

ds = gen_synthetic(SynthConfig(n_per_class=300, separation=1.0, signal_category="epigenomic", seed=1))
x = apply_standardizer(fit_standardizer(ds), ds.x)
print("dataset:", ds.x.shape, "positives:", int(ds.y.sum()))

# %%
for variant in Variant:
    model, history = train(ModelSpec(variant=variant, seed=1), x, ds.y)
    shapes = [layer.weights.shape for layer in model.layers]
    print(f"\n{variant.value}: layer weight shapes {shapes}")
    for epoch in (0, 4, 9, 19):
        print(f"  epoch {epoch + 1:2d}  loss {history.per_epoch_loss[epoch]:.4f}"
              f"  acc {history.per_epoch_accuracy[epoch]:.4f}")
    print("  training AUC:", round(auc(forward(model, x)[:, 1], ds.y), 4))
