"""Experiment steps shared by the command line and the demo scripts.

Each function reads inputs named by an :class:`ExperimentConfig`, writes its
artifacts under ``config.out_dir`` and returns what it wrote.

Layout::

    <out_dir>/metrics.json
    <out_dir>/compare.csv
    <out_dir>/<city>/<model>/checkpoint.json
    <out_dir>/<city>/<model>/train_report.csv
    <out_dir>/<city>/<model>/predictions.csv
"""
from __future__ import annotations

import csv
import dataclasses
import datetime as dt
import logging
from dataclasses import dataclass

from . import harmonic
from .artifacts import MetricsFile, load_checkpoint, save_checkpoint, write_predictions
from .config import BASELINE, ConfigError, ExperimentConfig, parse_model
from .data import DailySeries, Standardizer, load_csv, make_windows, split
from .evaluation import autoregressive_rollout, evaluate
from .training import train

log = logging.getLogger(__name__)


@dataclass
class CityData:
    series: DailySeries
    train: DailySeries
    val: DailySeries
    test: DailySeries
    standardizer: Standardizer


def load_city(config: ExperimentConfig, city: str) -> CityData:
    series = load_csv(config.city_path(city), city=city)
    tr, va, te = split(series, config.split)
    return CityData(series, tr, va, te, Standardizer.fit(tr))


def metrics_file(config: ExperimentConfig) -> MetricsFile:
    return MetricsFile(config.out_dir / "metrics.json")


def _cities(config, city):
    return [city] if city else list(config.cities)


def _models(config, model, with_baseline=False):
    if model:
        parse_model(model)
        return [model]
    return config.grid() + ([BASELINE] if with_baseline else [])


def stats(config: ExperimentConfig, city: str | None = None) -> list:
    """Mean and population std per (city, split), in degrees C."""
    mf = metrics_file(config)
    rows = []
    for c in _cities(config, city):
        d = load_city(config, c)
        for name, part in (("train", d.train), ("val", d.val), ("test", d.test)):
            (lo, hi) = dict(config.split.items())[name]
            row = {
                "city": c,
                "split": name,
                "years": f"{lo}-{hi}",
                "days": len(part),
                "mean": float(part.temps.mean()),
                "std": float(part.temps.std()),
            }
            mf.upsert("stats", row)
            rows.append(row)
    mf.save()
    return rows


def fit_baseline(config: ExperimentConfig, city: str) -> harmonic.HarmonicFit:
    d = load_city(config, city)
    fit = harmonic.fit_series(d.train, d.standardizer, t0=d.train.start, omega=config.training.omega)
    mf = metrics_file(config)
    mf.upsert("baselines", fit.to_record())
    mf.save()
    return fit


def train_model(config: ExperimentConfig, city: str, model: str, seed: int | None = None):
    cell, variant = parse_model(model)
    if cell == BASELINE:
        return fit_baseline(config, city)
    seed = config.seed if seed is None else seed
    d = load_city(config, city)
    arch = config.arch_for(cell)
    tc = config.training
    stride = tc.window_stride
    train_w = make_windows(d.standardizer.apply(d.train.temps), arch.seq_len, arch.pred_len, stride)
    val_w = make_windows(d.standardizer.apply(d.val.temps), arch.seq_len, arch.pred_len, stride)
    weights = tc.weights(variant)
    log.info("training %s/%s on %d windows for %d epochs", city, model, len(train_w), tc.epochs)
    report = train(arch, train_w, weights, seed, tc.epochs, tc.lr, val=val_w, keep_best=tc.keep_best)
    out = config.run_dir(city, model)
    extra = {"city": city, "model": model, "loss_weights": dataclasses.asdict(weights)}
    save_checkpoint(out / "checkpoint.json", report.params, d.standardizer, seed, extra)
    if report.best_params is not None:
        save_checkpoint(out / "best_checkpoint.json", report.best_params, d.standardizer, seed,
                        dict(extra, best_epoch=report.best_epoch))
    report.to_csv(out / "train_report.csv")
    return report


def evaluate_model(config: ExperimentConfig, city: str, model: str, horizon_days: int | None = None):
    horizon_days = horizon_days if horizon_days is not None else config.horizon_days
    d = load_city(config, city)
    if model == BASELINE:
        fit = harmonic.fit_series(d.train, d.standardizer, t0=d.train.start, omega=config.training.omega)
        descriptor = fit.to_record()
        ev = evaluate(fit, d.test, d.standardizer, horizon_days, config.arch.get("seq_len", 90),
                      model_name=model, descriptor=descriptor)
        mf = metrics_file(config)
        mf.upsert("baselines", descriptor)
    else:
        parse_model(model)
        ckpt = config.run_dir(city, model) / "checkpoint.json"
        if not ckpt.is_file():
            raise ConfigError(f"no checkpoint for {city}/{model} at {ckpt}; run train first")
        params, standardizer, seed, extra = load_checkpoint(ckpt)
        descriptor = {"cell_kind": params.config.cell_kind, "seed": seed, **extra.get("loss_weights", {})}
        ev = evaluate(params, d.test, standardizer, horizon_days, model_name=model, descriptor=descriptor)
        mf = metrics_file(config)
    write_predictions(config.run_dir(city, model) / "predictions.csv", ev.dates, ev.observed_c,
                      ev.predicted_c, model, city)
    mf.upsert("evaluations", ev.report.to_record())
    mf.save()
    return ev


def rollout_model(config: ExperimentConfig, city: str, model: str, horizon_days: int):
    """Roll out from the first test days for any horizon; observations fill in where available."""
    d = load_city(config, city)
    if model == BASELINE:
        raise ConfigError("rollout applies to neural models; use evaluate for the baseline")
    parse_model(model)
    ckpt = config.run_dir(city, model) / "checkpoint.json"
    if not ckpt.is_file():
        raise ConfigError(f"no checkpoint for {city}/{model} at {ckpt}; run train first")
    params, standardizer, _, _ = load_checkpoint(ckpt)
    seq = params.config.seq_len
    seed = standardizer.apply(d.test.temps[:seq])
    result = autoregressive_rollout(params, seed, horizon_days, standardizer, d.test.dates[:seq])
    start = d.test.start
    dates = [start + dt.timedelta(days=seq + k) for k in range(horizon_days)]
    observed = d.test.temps[seq:seq + horizon_days]
    path = config.run_dir(city, model) / f"rollout_{horizon_days}.csv"
    write_predictions(path, dates, observed, result.predicted_c, model, city)
    return path, result


def compare(config: ExperimentConfig, city: str | None = None) -> list:
    """Plain-vs-physics table per cell kind plus a baseline row, per city."""
    mf = metrics_file(config)
    rows = []
    for c in _cities(config, city):
        for cell in config.cells:
            entry = {"city": c, "model": cell}
            got = {}
            for variant in ("plain", "physics"):
                rec = mf.get("evaluations", city=c, model=f"{cell}-{variant}")
                if rec is None:
                    raise ConfigError(f"missing evaluation for {c}/{cell}-{variant}; run evaluate first")
                got[variant] = rec
            entry["rmse"] = got["plain"]["rmse"]
            entry["rmse_physics"] = got["physics"]["rmse"]
            entry["corr"] = got["plain"]["corr"]
            entry["corr_physics"] = got["physics"]["corr"]
            entry["delta_rmse"] = entry["rmse_physics"] - entry["rmse"]
            entry["delta_corr"] = entry["corr_physics"] - entry["corr"]
            entry["horizon_days"] = got["physics"]["horizon_days"]
            rows.append(entry)
        base = mf.get("evaluations", city=c, model=BASELINE)
        if base is None:
            raise ConfigError(f"missing evaluation for {c}/{BASELINE}; run evaluate first")
        rows.append({
            "city": c,
            "model": BASELINE,
            "rmse": base["rmse"],
            "corr": base["corr"],
            "beta1": base["descriptor"]["beta1"],
            "beta2": base["descriptor"]["beta2"],
            "horizon_days": base["horizon_days"],
        })
    _write_compare(config.out_dir / "compare.csv", rows)
    return rows


COMPARE_COLUMNS = ("city", "model", "rmse", "rmse_physics", "delta_rmse", "corr", "corr_physics",
                   "delta_corr", "beta1", "beta2", "horizon_days")


def _write_compare(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=COMPARE_COLUMNS, lineterminator="\n", restval="")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


def format_table(rows, columns) -> str:
    def cell(v):
        if isinstance(v, float):
            return f"{v:.4f}"
        return "" if v is None else str(v)
    body = [[cell(r.get(c)) for c in columns] for r in rows]
    widths = [max(len(c), *(len(b[i]) for b in body)) if body else len(c) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(b, widths)) for b in body]
    return "\n".join(lines)


def run_all(config: ExperimentConfig) -> list:
    """Stats, baselines, the whole training grid, evaluation and comparison."""
    stats(config)
    for c in config.cities:
        fit_baseline(config, c)
        for m in config.grid():
            train_model(config, c, m)
            evaluate_model(config, c, m)
        evaluate_model(config, c, BASELINE)
    return compare(config)

