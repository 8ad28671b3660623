"""Model persistence: JSON files holding counts, never probabilities.

Storing raw counts plus the prior spec lets a loaded model reproduce its
predictions exactly; mixture weights are recomputed from the stored tables
on load.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .classifiers import (
    ANBClassifier,
    DiagnosticClassifier,
    MixtureClassifier,
    NBClassifier,
)
from .data import DatasetEncoder, Schema
from .errors import DataError
from .scoring import CountTable, PriorSpec, log_sml
from .search import validate_partition

FORMAT_VERSION = 1


def model_to_json_dict(model, encoder: DatasetEncoder) -> dict:
    if isinstance(model, MixtureClassifier):
        prior = model.components[0].prior
    else:
        prior = model.prior
    base = {
        "format_version": FORMAT_VERSION,
        "encoder": encoder.to_json_dict(),
        "prior": prior.to_json_dict(),
    }
    if isinstance(model, NBClassifier):
        base.update(
            kind="nb",
            schema=model.schema.to_json_dict(),
            class_counts=model.class_counts.tolist(),
            tables=[t.tolist() for t in model.tables],
        )
    elif isinstance(model, ANBClassifier):
        base.update(
            kind="anb",
            schema=model.schema.to_json_dict(),
            partition=[list(b) for b in model.partition],
            class_counts=model.class_counts.tolist(),
            block_tables=[t.to_json_dict() for t in model.block_tables],
        )
    elif isinstance(model, MixtureClassifier):
        base.update(
            kind="mixture",
            tables=[c.table.to_json_dict() for c in model.components],
        )
    elif isinstance(model, DiagnosticClassifier):
        base.update(kind="diagnostic", table=model.table.to_json_dict())
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return base


def model_from_json_dict(d: dict):
    """Rebuild (model, encoder) from a model file dictionary."""
    if d.get("format_version") != FORMAT_VERSION:
        raise DataError(f"unsupported model format version {d.get('format_version')!r}")
    encoder = DatasetEncoder.from_json_dict(d["encoder"])
    prior = PriorSpec.from_json_dict(d["prior"])
    kind = d["kind"]
    if kind == "nb":
        schema = Schema.from_json_dict(d["schema"])
        model = NBClassifier(
            schema,
            np.array(d["class_counts"], dtype=np.int64),
            tuple(np.array(t, dtype=np.int64) for t in d["tables"]),
            prior,
        )
    elif kind == "anb":
        schema = Schema.from_json_dict(d["schema"])
        tables = tuple(CountTable.from_json_dict(t) for t in d["block_tables"])
        model = ANBClassifier(
            schema,
            validate_partition(d["partition"], schema.n_predictors),
            np.array(d["class_counts"], dtype=np.int64),
            tables,
            prior,
        )
    elif kind == "mixture":
        tables = [CountTable.from_json_dict(t) for t in d["tables"]]
        scores = np.array([log_sml(t, prior) for t in tables])
        model = MixtureClassifier(
            tuple(DiagnosticClassifier(t, prior) for t in tables),
            scores - logsumexp(scores),
        )
    elif kind == "diagnostic":
        model = DiagnosticClassifier(CountTable.from_json_dict(d["table"]), prior)
    else:
        raise DataError(f"unknown model kind {kind!r}")
    return model, encoder


def save_model(model, encoder: DatasetEncoder, path: str | Path) -> None:
    payload = json.dumps(model_to_json_dict(model, encoder), sort_keys=True, indent=2)
    Path(path).write_text(payload + "\n", encoding="utf-8")


def load_model(path: str | Path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read model file {path}: {exc}") from exc
    try:
        return model_from_json_dict(json.loads(text))
    except (KeyError, ValueError) as exc:
        raise DataError(f"malformed model file {path}: {exc}") from exc
