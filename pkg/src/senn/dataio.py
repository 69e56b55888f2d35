"""Feature schema, CSV/JSON ingestion, standardisation and synthetic data."""

from __future__ import annotations

import csv
import enum
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError, ContractError, ParseError, SchemaError
from .numkernel import SeededRng, Tensor, as_tensor

LABEL_COLUMN = "label"
STD_FLOOR = 1e-8


class Group(str, enum.Enum):
    CHROMATIN = "chromatin"
    TF = "tf"
    MOTIF = "motif"
    SEQUENCE = "sequence"


class Category(str, enum.Enum):
    """Feature category. ``ALL`` (alias ``BOTH``) selects every feature."""

    ALL = "all"
    BOTH = "all"
    GENOMIC = "genomic"
    EPIGENOMIC = "epigenomic"


DEFAULT_GROUP_SIZES = ((Group.CHROMATIN, 20), (Group.TF, 11), (Group.MOTIF, 11), (Group.SEQUENCE, 3))

DEFAULT_CATEGORY_MAP = {
    Group.CHROMATIN: Category.EPIGENOMIC,
    Group.TF: Category.EPIGENOMIC,
    Group.MOTIF: Category.GENOMIC,
    Group.SEQUENCE: Category.GENOMIC,
}


@dataclass(frozen=True)
class FeatureManifest:
    features: tuple  # ((name, Group), ...)
    category_map: dict  # Group -> Category

    def __post_init__(self):
        feats = tuple((str(name), Group(group)) for name, group in self.features)
        cmap = {Group(g): Category(c) for g, c in self.category_map.items()}
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "category_map", cmap)
        names = [n for n, _ in feats]
        if len(set(names)) != len(names):
            raise SchemaError("feature names must be unique")
        if LABEL_COLUMN in names:
            raise SchemaError(f"{LABEL_COLUMN!r} is reserved for the label column")
        for g, c in cmap.items():
            if c is Category.ALL:
                raise SchemaError(f"group {g.value} must map to genomic or epigenomic")
        missing = {g for _, g in feats} - set(cmap)
        if missing:
            raise SchemaError(f"groups without a category: {sorted(g.value for g in missing)}")

    @property
    def names(self) -> list:
        return [n for n, _ in self.features]

    def __len__(self):
        return len(self.features)

    def columns(self, category: Category) -> list:
        """Column indices belonging to ``category``."""
        category = Category(category)
        if category is Category.ALL:
            return list(range(len(self.features)))
        return [i for i, (_, g) in enumerate(self.features) if self.category_map[g] is category]

    def restrict(self, columns) -> "FeatureManifest":
        return FeatureManifest(tuple(self.features[i] for i in columns), self.category_map)

    def to_json(self) -> dict:
        return {
            "features": [{"name": n, "group": g.value} for n, g in self.features],
            "categories": {g.value: c.value for g, c in self.category_map.items()},
        }

    @classmethod
    def from_json(cls, doc) -> "FeatureManifest":
        if not isinstance(doc, dict) or set(doc) != {"features", "categories"}:
            raise SchemaError("manifest must be an object with exactly 'features' and 'categories'")
        try:
            feats = tuple((f["name"], Group(f["group"])) for f in doc["features"])
            cmap = {Group(g): Category(c) for g, c in doc["categories"].items()}
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed manifest: {exc}") from exc
        return cls(feats, cmap)


def default_manifest() -> FeatureManifest:
    """The 45-feature layout: 20 chromatin, 11 TF, 11 motif, 3 sequence."""
    feats = tuple(
        (f"{group.value}_{i:02d}", group)
        for group, count in DEFAULT_GROUP_SIZES
        for i in range(1, count + 1)
    )
    return FeatureManifest(feats, dict(DEFAULT_CATEGORY_MAP))


def load_manifest(path) -> FeatureManifest:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc
    return FeatureManifest.from_json(doc)


def save_manifest(manifest: FeatureManifest, path) -> None:
    Path(path).write_text(json.dumps(manifest.to_json(), indent=2) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class Dataset:
    x: Tensor
    y: np.ndarray
    manifest: FeatureManifest

    def __post_init__(self):
        x = as_tensor(self.x)
        if x.ndim != 2:
            raise ContractError(f"feature matrix must be 2-D, got shape {x.shape}")
        y = np.asarray(self.y, dtype=np.int64).reshape(-1)
        if x.shape[0] != y.shape[0]:
            raise ContractError(f"{x.shape[0]} rows but {y.shape[0]} labels")
        if x.shape[1] != len(self.manifest):
            raise ContractError(f"{x.shape[1]} columns but {len(self.manifest)} manifest features")
        if not np.isfinite(x).all():
            raise ContractError("feature values must be finite")
        if not np.isin(y, (0, 1)).all():
            raise ContractError("labels must be 0 or 1")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.y.shape[0]

    def subset(self, rows) -> "Dataset":
        return Dataset(self.x[rows], self.y[rows], self.manifest)

    def fingerprint(self) -> str:
        """SHA-256 over feature names, values and labels."""
        h = hashlib.sha256()
        h.update("\x1f".join(self.manifest.names).encode())
        h.update(np.ascontiguousarray(self.x).tobytes())
        h.update(np.ascontiguousarray(self.y).tobytes())
        return h.hexdigest()


def load_csv(path, manifest: Optional[FeatureManifest] = None) -> Dataset:
    """Read a dataset whose header is the manifest's feature names then ``label``.

    Row numbers in errors count data rows from 1 (the header is row 0).
    """
    manifest = manifest or default_manifest()
    expected = manifest.names + [LABEL_COLUMN]
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty file, expected a header row")
        for i in range(max(len(header), len(expected))):
            want = expected[i] if i < len(expected) else None
            got = header[i] if i < len(header) else None
            if want != got:
                if want is None:
                    raise SchemaError(f"{path}: unexpected extra column {i + 1} {got!r}")
                if got is None:
                    raise SchemaError(f"{path}: missing column {i + 1} {want!r}")
                raise SchemaError(f"{path}: column {i + 1} should be {want!r}, found {got!r}")

        rows, labels = [], []
        for r, record in enumerate(reader, start=1):
            if len(record) != len(expected):
                raise ParseError(f"{path}: row {r} has {len(record)} cells, expected {len(expected)}")
            values = []
            for name, cell in zip(manifest.names, record):
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(f"{path}: row {r}, column {name!r}: not a number: {cell!r}") from None
                if not math.isfinite(v):
                    raise ParseError(f"{path}: row {r}, column {name!r}: non-finite value {cell!r}")
                values.append(v)
            if record[-1].strip() not in ("0", "1"):
                raise ParseError(f"{path}: row {r}, column {LABEL_COLUMN!r}: label must be 0 or 1, got {record[-1]!r}")
            rows.append(values)
            labels.append(int(record[-1]))
    x = np.array(rows, dtype=np.float64).reshape(len(rows), len(manifest))
    return Dataset(x, np.array(labels, dtype=np.int64), manifest)


def write_csv(ds: Dataset, path) -> None:
    """Write ``ds`` so that :func:`load_csv` reads it back bit for bit."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ds.manifest.names + [LABEL_COLUMN])
        for row, label in zip(ds.x, ds.y):
            w.writerow([repr(float(v)) for v in row] + [str(int(label))])


def select_features(ds: Dataset, category: Category) -> Dataset:
    category = Category(category)
    cols = ds.manifest.columns(category)
    if not cols:
        raise ConfigError(f"no features in category {category.value!r} under this manifest")
    return Dataset(ds.x[:, cols], ds.y, ds.manifest.restrict(cols))


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray


def fit_standardizer(ds) -> Standardizer:
    """Per-feature mean and population stddev, stddev floored at 1e-8."""
    x = ds.x if isinstance(ds, Dataset) else as_tensor(ds)
    if x.shape[0] < 2:
        raise ContractError(f"need at least 2 rows to fit a standardizer, got {x.shape[0]}")
    return Standardizer(x.mean(axis=0), np.maximum(x.std(axis=0), STD_FLOOR))


def apply_standardizer(std: Standardizer, ds):
    """z-score ``ds`` (a Dataset or a bare array) with already-fitted statistics."""
    if isinstance(ds, Dataset):
        return Dataset((ds.x - std.mean) / std.std, ds.y, ds.manifest)
    return (as_tensor(ds) - std.mean) / std.std


@dataclass(frozen=True)
class SynthConfig:
    """Class-balanced Gaussian data on the default 45-feature manifest.

    Each feature in ``signal_category`` has class means ``+-separation/2``
    noise-stddevs apart from zero, so the per-feature class gap is
    ``separation`` in standardised units. Other features are pure noise.
    """

    n_per_class: int = 500
    separation: float = 4.0
    signal_category: Category = Category.EPIGENOMIC
    noise_stddev: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "signal_category", Category(self.signal_category))
        if isinstance(self.n_per_class, bool) or not isinstance(self.n_per_class, int) or self.n_per_class < 1:
            raise ConfigError(f"n_per_class must be a positive integer, got {self.n_per_class!r}")
        if not (math.isfinite(self.separation) and self.separation >= 0):
            raise ConfigError(f"separation must be a finite nonnegative number, got {self.separation!r}")
        if not (math.isfinite(self.noise_stddev) and self.noise_stddev > 0):
            raise ConfigError(f"noise_stddev must be positive, got {self.noise_stddev!r}")


def gen_synthetic(config: SynthConfig) -> Dataset:
    manifest = default_manifest()
    rng = SeededRng(config.seed)
    n = 2 * config.n_per_class
    y = np.repeat(np.array([1, 0]), config.n_per_class)[rng.permutation(n)]
    x = config.noise_stddev * rng.normal(n * len(manifest)).reshape(n, len(manifest))
    cols = manifest.columns(config.signal_category)
    shift = (y - 0.5) * config.separation * config.noise_stddev
    x[:, cols] += shift[:, None]
    return Dataset(x, y, manifest)
