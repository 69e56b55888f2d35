"""Fold tables, ablation summaries and run manifests.

Fold tables are CSV files laid out like the published result tables: one
row per fold, then an ``Ave`` row, numbers to 4 decimals. JSON documents
keep full float precision.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from . import __version__
from .metrics import METRIC_NAMES
from .pipeline import AblationReport, CvReport

TABLE_HEADER = ("Folds", "Loss", "Acc", "Precision", "Recall", "F1-score", "Auc")
AVERAGE_LABEL = "Ave"

# best random-forest scores reported for the source dataset; quoted, never recomputed
RANDOM_FOREST_REFERENCE = {"precision": 0.89, "recall": 0.82, "f1": 0.85, "auc": 0.97}


def cell_name(variant, category) -> str:
    return f"{variant.value}_{category.value}"


def fold_table_name(variant, category) -> str:
    return f"cv_{cell_name(variant, category)}.csv"


def format_fold_table(report: CvReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_HEADER)
    for i, row in enumerate(report.rows, start=1):
        w.writerow([str(i)] + [f"{v:.4f}" for v in row.values()])
    w.writerow([AVERAGE_LABEL] + [f"{v:.4f}" for v in report.average.values()])
    return buf.getvalue()


def parse_fold_table(text: str) -> dict:
    """Inverse of :func:`format_fold_table` (up to the 4-decimal rounding).

    Returns ``{"rows": [[loss, acc, ...], ...], "average": [...]}``.
    """
    records = list(csv.reader(io.StringIO(text)))
    if not records or tuple(records[0]) != TABLE_HEADER:
        raise ValueError(f"fold table header must be {','.join(TABLE_HEADER)}")
    body = records[1:]
    if not body or body[-1][0] != AVERAGE_LABEL:
        raise ValueError(f"fold table must end with an {AVERAGE_LABEL!r} row")
    rows = []
    for i, rec in enumerate(body[:-1], start=1):
        if rec[0] != str(i):
            raise ValueError(f"expected fold {i}, found {rec[0]!r}")
        rows.append([float(v) for v in rec[1:]])
    return {"rows": rows, "average": [float(v) for v in body[-1][1:]]}


def read_fold_table(path) -> dict:
    return parse_fold_table(Path(path).read_text(encoding="utf-8"))


def dumps(doc) -> str:
    """Deterministic JSON text; floats use Python's exact round-trip repr."""
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _metrics_dict(fm) -> dict:
    return {name: getattr(fm, name) for name in METRIC_NAMES}


def ablation_summary(ablation: AblationReport) -> dict:
    """Averaged metrics per (variant, category) cell: the data behind the comparison plots."""
    cells = {}
    for (variant, category), rep in ablation.grid.items():
        cells[cell_name(variant, category)] = {
            "variant": variant.value,
            "category": category.value,
            "table": fold_table_name(variant, category),
            "average": _metrics_dict(rep.average),
            "flagged_folds": [i + 1 for i, r in enumerate(rep.rows) if r.flagged],
        }
    return {
        "k": ablation.plan.k,
        "cells": cells,
        "random_forest_reference": dict(RANDOM_FOREST_REFERENCE),
    }


def run_manifest(command: str, config: dict, fingerprint: str, reports=()) -> dict:
    return {
        "artifact": "senn",
        "artifact_version": __version__,
        "command": command,
        "config": config,
        "seeds": {"fold_plan": config.get("seed"), "model": config.get("seed")},
        "dataset_fingerprint": fingerprint,
        "flagged_folds": {
            f"{r.meta['variant']}_{r.meta['category']}": [i + 1 for i, row in enumerate(r.rows) if row.flagged]
            for r in reports
        },
    }


def write_bundle(out_dir, files: dict) -> list:
    """Write ``{filename: text}`` into ``out_dir`` (created if needed)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in files.items():
        path = out / name
        path.write_text(text, encoding="utf-8")
        written.append(path)
    return written
