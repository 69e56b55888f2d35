"""Command-line entry point: ``senn {gen,cv,ablate,gradcheck}``.

Settings resolve as flags > ``--config`` file > built-in defaults. The config
file is flat ``key = value`` lines (``#`` starts a comment) using the
:class:`RunConfig` field names.

Exit codes: 0 success, 1 validation/contract error, 2 I/O error,
3 gradient check failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import report
from .dataio import (
    Category,
    SynthConfig,
    apply_standardizer,
    default_manifest,
    fit_standardizer,
    gen_synthetic,
    load_csv,
    load_manifest,
    save_manifest,
    select_features,
    write_csv,
)
from .errors import ConfigError
from .model import ModelSpec, Variant, backward, grad_check, model_to_json, one_hot, train
from .numkernel import SeededRng
from .pipeline import ablate, cross_validate

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_VERIFY = 0, 1, 2, 3
GRADCHECK_TOLERANCE = 1e-6
DATASET_FILE = "dataset.csv"
MANIFEST_FILE = "manifest.json"


@dataclass
class RunConfig:
    data: Optional[str] = None
    manifest: Optional[str] = None
    out: str = "."
    seed: int = 0
    k: int = 10
    variant: Optional[str] = None  # comma list; cv default dpnn, ablate default all
    category: Optional[str] = None  # comma list; cv default all, ablate default all three
    epochs: int = 20
    batch_size: int = 32
    hidden_units: int = 16
    hidden_layers: int = 1
    conv_filters: int = 16
    conv_kernel_width: int = 3
    learning_rate: float = 0.001
    n_per_class: int = 500
    separation: float = 4.0
    signal: str = "epigenomic"
    noise_stddev: float = 1.0
    save_model: bool = False
    workers: int = 1
    seeds: int = 10
    corrupt_gradient: bool = False

    def model_spec(self, variant=Variant.DPNN) -> ModelSpec:
        return ModelSpec(
            variant=variant,
            hidden_units=self.hidden_units,
            hidden_layers=self.hidden_layers,
            conv_filters=self.conv_filters,
            conv_kernel_width=self.conv_kernel_width,
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            seed=self.seed,
        )

    def recorded(self) -> dict:
        """Settings that determine the results (output location excluded)."""
        d = dataclasses.asdict(self)
        d.pop("out")
        return d


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(name: str, raw: str):
    kind = _FIELDS[name].type
    try:
        if "bool" in kind:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if "int" in kind:
            return int(raw)
        if "float" in kind:
            return float(raw)
    except ValueError:
        raise ConfigError(f"config key {name!r}: cannot parse {raw!r} as {kind}") from None
    return raw.strip()


def read_config_file(path) -> dict:
    values = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELDS:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = _coerce(key, raw)
    return values


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    for name in _FIELDS:
        v = getattr(args, name, None)
        if v is None:
            continue
        if isinstance(v, list):
            v = ",".join(v)
        values[name] = v
    return RunConfig(**values)


def _choices(raw: Optional[str], enum_cls, default):
    if raw is None:
        return list(default)
    try:
        return [enum_cls(part.strip().lower()) for part in raw.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _load_dataset(cfg: RunConfig):
    if not cfg.data:
        raise ConfigError("--data is required")
    manifest = load_manifest(cfg.manifest) if cfg.manifest else default_manifest()
    return load_csv(cfg.data, manifest)


def cmd_gen(cfg: RunConfig) -> int:
    synth = SynthConfig(
        n_per_class=cfg.n_per_class,
        separation=cfg.separation,
        signal_category=_choices(cfg.signal, Category, [Category.EPIGENOMIC])[0],
        noise_stddev=cfg.noise_stddev,
        seed=cfg.seed,
    )
    ds = gen_synthetic(synth)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(ds, out / DATASET_FILE)
    save_manifest(ds.manifest, out / MANIFEST_FILE)
    print(f"wrote {len(ds)} rows to {out / DATASET_FILE} and {out / MANIFEST_FILE}")
    return EXIT_OK


def _model_dump(ds, spec: ModelSpec) -> str:
    std = fit_standardizer(ds)
    model, _ = train(spec, apply_standardizer(std, ds.x), ds.y, SeededRng(spec.seed))
    doc = model_to_json(model)
    doc["input_standardizer"] = {"mean": [float(v) for v in std.mean], "std": [float(v) for v in std.std]}
    return report.dumps(doc)


def cmd_cv(cfg: RunConfig) -> int:
    variants = _choices(cfg.variant, Variant, [Variant.DPNN])
    categories = _choices(cfg.category, Category, [Category.ALL])
    if len(variants) != 1 or len(categories) != 1:
        raise ConfigError("cv takes exactly one --variant and one --category (use ablate for grids)")
    variant, category = variants[0], categories[0]
    full = _load_dataset(cfg)
    ds = select_features(full, category)
    spec = cfg.model_spec(variant)
    rep = cross_validate(ds, spec, cfg.k, cfg.seed, workers=cfg.workers, category=category)

    files = {report.fold_table_name(variant, category): report.format_fold_table(rep)}
    if cfg.save_model:
        files[f"model_{report.cell_name(variant, category)}.json"] = _model_dump(ds, spec)
    files["run.json"] = report.dumps(
        report.run_manifest("cv", cfg.recorded(), full.fingerprint(), [rep])
    )
    report.write_bundle(cfg.out, files)
    print(report.format_fold_table(rep), end="")
    return EXIT_OK


def cmd_ablate(cfg: RunConfig) -> int:
    variants = _choices(cfg.variant, Variant, Variant)
    categories = _choices(cfg.category, Category, (Category.ALL, Category.GENOMIC, Category.EPIGENOMIC))
    full = _load_dataset(cfg)
    result = ablate(full, cfg.model_spec(), categories, variants, cfg.k, cfg.seed, cfg.workers)

    files = {}
    for (variant, category), rep in result.grid.items():
        files[report.fold_table_name(variant, category)] = report.format_fold_table(rep)
        if cfg.save_model:
            spec = cfg.model_spec(variant)
            files[f"model_{report.cell_name(variant, category)}.json"] = _model_dump(
                select_features(full, category), spec
            )
    summary = report.ablation_summary(result)
    files["ablation_summary.json"] = report.dumps(summary)
    files["run.json"] = report.dumps(
        report.run_manifest("ablate", cfg.recorded(), full.fingerprint(), result.grid.values())
    )
    report.write_bundle(cfg.out, files)
    for name, cell in summary["cells"].items():
        avg = cell["average"]
        print(f"{name:<20} acc {avg['accuracy']:.4f}  auc {avg['auc']:.4f}  f1 {avg['f1']:.4f}")
    return EXIT_OK


# (input width, batch size) per variant for the gradient check
GRADCHECK_SHAPES = {Variant.DPNN: (45, 4), Variant.CONV1D: (9, 2)}


def gradcheck_errors(seed: int = 0, n_seeds: int = 10, corrupt: bool = False) -> dict:
    """Worst relative gradient error per variant over ``n_seeds`` random instances."""

    def corrupted(model, x, targets):
        grads = backward(model, x, targets)
        gw, gb = grads[0]
        return [(gw + 1e-3, gb)] + list(grads[1:])

    fn = corrupted if corrupt else backward
    worst = {}
    for variant, (width, batch) in GRADCHECK_SHAPES.items():
        errs = []
        for s in range(seed, seed + n_seeds):
            rng = SeededRng(s)
            x = rng.normal(batch * width).reshape(batch, width)
            labels = (rng.uniform(batch) < 0.5).astype(np.int64)
            spec = ModelSpec(variant=variant, seed=s)
            errs.append(grad_check(spec, x, one_hot(labels), 1e-5, backward_fn=fn))
        worst[variant] = max(errs)
    return worst


def cmd_gradcheck(cfg: RunConfig) -> int:
    worst = gradcheck_errors(cfg.seed, cfg.seeds, cfg.corrupt_gradient)
    ok = True
    for variant, err in worst.items():
        passed = err < GRADCHECK_TOLERANCE
        ok &= passed
        print(f"{variant.value:<7} max relative error {err:.3e} over {cfg.seeds} seeds "
              f"[{'PASS' if passed else 'FAIL'}]")
    return EXIT_OK if ok else EXIT_VERIFY


COMMANDS = {"gen": cmd_gen, "cv": cmd_cv, "ablate": cmd_ablate, "gradcheck": cmd_gradcheck}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="senn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value settings file")
    common.add_argument("--out", help="output directory (default: current directory)")
    common.add_argument("--seed", type=int)

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--data", help="dataset CSV")
    data.add_argument("--manifest", help="feature manifest JSON (default: built-in 45 features)")
    data.add_argument("--k", type=int, help="number of folds (default 10)")
    data.add_argument("--variant", action="append", help="dpnn or conv1d (comma list allowed)")
    data.add_argument("--category", action="append", help="all, genomic or epigenomic")
    data.add_argument("--epochs", type=int)
    data.add_argument("--batch-size", dest="batch_size", type=int)
    data.add_argument("--hidden-units", dest="hidden_units", type=int)
    data.add_argument("--hidden-layers", dest="hidden_layers", type=int)
    data.add_argument("--conv-filters", dest="conv_filters", type=int)
    data.add_argument("--conv-kernel-width", dest="conv_kernel_width", type=int)
    data.add_argument("--learning-rate", dest="learning_rate", type=float)
    data.add_argument("--workers", type=int, help="folds trained concurrently")
    data.add_argument("--save-model", dest="save_model", action="store_true", default=None,
                      help="also dump a model trained on the full dataset per cell")

    gen = sub.add_parser("gen", parents=[common], help="write a synthetic dataset + manifest")
    gen.add_argument("--n-per-class", dest="n_per_class", type=int)
    gen.add_argument("--separation", type=float)
    gen.add_argument("--signal", help="genomic, epigenomic or all")
    gen.add_argument("--noise-stddev", dest="noise_stddev", type=float)

    sub.add_parser("cv", parents=[common, data], help="cross-validate one model on one feature set")
    sub.add_parser("ablate", parents=[common, data], help="cross-validate the variant x category grid")

    gc = sub.add_parser("gradcheck", parents=[common], help="compare backprop with finite differences")
    gc.add_argument("--seeds", type=int, help="number of random instances per variant (default 10)")
    gc.add_argument("--corrupt-gradient", dest="corrupt_gradient", action="store_true", default=None,
                    help="debug: perturb the analytic gradient so the check must fail")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except OSError as exc:
        print(f"senn: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"senn: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
