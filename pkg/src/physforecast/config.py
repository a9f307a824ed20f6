"""Experiment configuration (JSON).

Example::

    {
      "cities": {"seoul": "data/seoul.csv"},
      "split": {"train": [2008, 2012], "val": [2013, 2015], "test": [2016, 2018]},
      "arch": {"hidden_dim": 64, "num_layers": 2, "dropout": 0.1, "seq_len": 90, "pred_len": 30},
      "training": {"lr": 0.001, "epochs": 1000, "lambda_data": 1.0, "lambda_physics": 0.001,
                   "omega": 0.017214206321039962, "window_stride": 1},
      "grid": {"cells": ["rnn", "lstm", "gru"], "variants": ["plain", "physics"]},
      "seed": 0,
      "out_dir": "runs",
      "horizon_days": null
    }

Keys may use hyphens or underscores. Relative paths resolve against the
directory holding the config file.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .data import SplitSpec
from .recurrent import CELL_KINDS, ArchConfig
from .training import LossWeights

VARIANTS = ("plain", "physics")
BASELINE = "baseline"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.001
    epochs: int = 1000
    lambda_data: float = 1.0
    lambda_physics: float = 0.001
    omega: float = 2 * math.pi / 365
    dt: float = 1.0
    window_stride: int = 1
    keep_best: bool = False

    def weights(self, variant: str) -> LossWeights:
        lam = self.lambda_physics if variant == "physics" else 0.0
        return LossWeights(self.lambda_data, lam, self.omega, self.dt)


@dataclass
class ExperimentConfig:
    cities: dict
    split: SplitSpec = field(default_factory=SplitSpec)
    arch: dict = field(default_factory=dict)
    training: TrainConfig = field(default_factory=TrainConfig)
    cells: tuple = CELL_KINDS
    variants: tuple = VARIANTS
    seed: int = 0
    out_dir: Path = Path("runs")
    horizon_days: int | None = None

    def __post_init__(self):
        if not self.cities:
            raise ConfigError("config lists no cities")
        if not self.cells or not self.variants:
            raise ConfigError("model grid is empty")
        for c in self.cells:
            if c not in CELL_KINDS:
                raise ConfigError(f"unknown cell kind {c!r}; expected one of {CELL_KINDS}")
        for v in self.variants:
            if v not in VARIANTS:
                raise ConfigError(f"unknown variant {v!r}; expected one of {VARIANTS}")

    def arch_for(self, cell: str) -> ArchConfig:
        return ArchConfig(cell_kind=cell, **self.arch)

    def grid(self) -> list:
        return [f"{c}-{v}" for c in self.cells for v in self.variants]

    def city_path(self, city: str) -> Path:
        if city not in self.cities:
            raise ConfigError(f"unknown city {city!r}; configured: {sorted(self.cities)}")
        return Path(self.cities[city])

    def run_dir(self, city: str, model: str) -> Path:
        return self.out_dir / city / model

    @classmethod
    def from_dict(cls, raw: dict, base: Path = Path(".")) -> "ExperimentConfig":
        raw = _normalize(raw)
        try:
            cities = {k: str(_resolve(base, v)) for k, v in raw.get("cities", {}).items()}
            split_raw = raw.get("split", {})
            split = SplitSpec(**{k: tuple(v) for k, v in split_raw.items()})
            arch = dict(raw.get("arch", {}))
            arch.pop("cell_kind", None)
            ArchConfig(**arch)  # validate early
            training = TrainConfig(**raw.get("training", {}))
            grid = raw.get("grid", {})
            return cls(
                cities=cities,
                split=split,
                arch=arch,
                training=training,
                cells=tuple(grid.get("cells", CELL_KINDS)),
                variants=tuple(grid.get("variants", VARIANTS)),
                seed=int(raw.get("seed", 0)),
                out_dir=_resolve(base, raw.get("out_dir", "runs")),
                horizon_days=raw.get("horizon_days"),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid config: {exc}") from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(raw, path.parent)

    def to_dict(self) -> dict:
        return {
            "cities": dict(self.cities),
            "split": {k: list(v) for k, v in self.split.items()},
            "arch": dict(self.arch),
            "training": dataclasses.asdict(self.training),
            "grid": {"cells": list(self.cells), "variants": list(self.variants)},
            "seed": self.seed,
            "out_dir": str(self.out_dir),
            "horizon_days": self.horizon_days,
        }


def parse_model(name: str) -> tuple:
    """``"lstm-physics"`` -> ``("lstm", "physics")``; ``"baseline"`` -> ``("baseline", None)``."""
    if name == BASELINE:
        return BASELINE, None
    cell, _, variant = name.partition("-")
    if cell not in CELL_KINDS or variant not in VARIANTS:
        raise ConfigError(f"bad model selector {name!r}; use <cell>-<variant>, e.g. lstm-physics, or baseline")
    return cell, variant


def _normalize(obj):
    if isinstance(obj, dict):
        return {k.replace("-", "_"): (v if k in ("cities",) else _normalize(v)) for k, v in obj.items()}
    return obj


def _resolve(base: Path, p) -> Path:
    p = Path(p)
    return p if p.is_absolute() else base / p
