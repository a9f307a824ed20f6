"""On-disk formats: model checkpoints, prediction CSVs and the metrics file.

Checkpoints are JSON documents. Each parameter is stored as its shape plus
the base64 of its little-endian float64 bytes, so save/load is bit-exact and
identical inputs always serialize to identical bytes.
"""
from __future__ import annotations

import base64
import csv
import dataclasses
import json
import math
from pathlib import Path

import numpy as np

from .data import Standardizer
from .recurrent import ArchConfig, ModelParams

CHECKPOINT_FORMAT = "physforecast-checkpoint/1"


def _encode(arr: np.ndarray) -> dict:
    raw = np.ascontiguousarray(arr, dtype="<f8").tobytes()
    return {"shape": list(arr.shape), "dtype": "<f8", "data": base64.b64encode(raw).decode("ascii")}


def _decode(entry: dict) -> np.ndarray:
    raw = base64.b64decode(entry["data"])
    return np.frombuffer(raw, dtype=entry.get("dtype", "<f8")).astype(np.float64).reshape(entry["shape"])


def _dump(obj, path):
    text = json.dumps(obj, sort_keys=True, indent=1, allow_nan=False) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def save_checkpoint(path, params: ModelParams, standardizer: Standardizer | None = None,
                    seed: int | None = None, extra: dict | None = None) -> None:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "arch": dataclasses.asdict(params.config),
        "cell_kind": params.config.cell_kind,
        "params": {name: _encode(params[name]) for name in params.names()},
        "standardizer": None if standardizer is None else {"mu": standardizer.mu, "sigma": standardizer.sigma},
        "seed": seed,
        "extra": extra or {},
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    _dump(doc, path)


def load_checkpoint(path):
    """Returns ``(params, standardizer, seed, extra)``."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a {CHECKPOINT_FORMAT} file")
    config = ArchConfig(**doc["arch"])
    params = ModelParams(config, {k: _decode(v) for k, v in doc["params"].items()})
    std = doc.get("standardizer")
    standardizer = Standardizer(std["mu"], std["sigma"]) if std else None
    return params, standardizer, doc.get("seed"), doc.get("extra", {})


PREDICTION_HEADER = ("date", "observed_c", "predicted_c", "model", "city")


def write_predictions(path, dates, observed, predicted, model: str, city: str) -> None:
    """``observed`` may be shorter than ``predicted``; missing cells are left empty."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PREDICTION_HEADER)
        for k, (d, p) in enumerate(zip(dates, predicted)):
            obs = repr(float(observed[k])) if observed is not None and k < len(observed) else ""
            w.writerow([d.isoformat(), obs, repr(float(p)), model, city])


def read_predictions(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


class MetricsFile:
    """JSON file with ``stats``, ``baselines`` and ``evaluations`` sections.

    Entries are keyed so that re-running a command overwrites its own rows.
    """

    SECTIONS = {"stats": ("city", "split"), "baselines": ("city",), "evaluations": ("city", "model")}

    def __init__(self, path):
        self.path = Path(path)
        self.doc = {name: [] for name in self.SECTIONS}
        if self.path.exists():
            loaded = json.loads(self.path.read_text(encoding="utf-8"))
            for name in self.SECTIONS:
                self.doc[name] = loaded.get(name, [])

    def upsert(self, section: str, record: dict) -> None:
        keys = self.SECTIONS[section]
        rows = [r for r in self.doc[section] if tuple(r[k] for k in keys) != tuple(record[k] for k in keys)]
        rows.append(record)
        rows.sort(key=lambda r: tuple(str(r[k]) for k in keys))
        self.doc[section] = rows

    def get(self, section: str, **key):
        for r in self.doc[section]:
            if all(r.get(k) == v for k, v in key.items()):
                return r
        return None

    def save(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        _dump(_finite_or_none(self.doc), self.path)


def _finite_or_none(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite_or_none(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite_or_none(v) for v in obj]
    return obj
