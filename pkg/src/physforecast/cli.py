"""Command line entry point: ``physforecast <command> --config exp.json ...``

Exit codes: 0 success, 2 input or configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import pipeline
from .config import ConfigError, ExperimentConfig
from .data import DataError, synth_generate, write_csv
from .evaluation import RolloutDivergence
from .recurrent import CELL_KINDS, ArchConfig, init_params
from .training import LossWeights, TrainingDivergence, model_grad_check

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3



def _config(args) -> ExperimentConfig:
    if not args.config:
        raise ConfigError("--config is required for this command")
    cfg = ExperimentConfig.load(args.config)
    if getattr(args, "out_dir", None):
        cfg.out_dir = Path(args.out_dir)
    return cfg


def cmd_stats(args):
    rows = pipeline.stats(_config(args), args.city)
    print(pipeline.format_table(rows, ("city", "split", "years", "days", "mean", "std")))


def cmd_generate(args):
    series = synth_generate(
        amplitude=args.amplitude, phase=args.phase, omega=args.omega, noise_sigma=args.noise_sigma,
        days=args.days, seed=args.seed, start=dt.date.fromisoformat(args.start), offset=args.offset,
        city=args.city or "synthetic",
    )
    write_csv(series, args.out)
    print(f"wrote {len(series)} days ({series.start}..{series.end}) to {args.out}")


def cmd_fit_baseline(args):
    cfg = _config(args)
    for city in pipeline._cities(cfg, args.city):
        fit = pipeline.fit_baseline(cfg, city)
        print(f"{city}: beta1={fit.beta1:.4f} beta2={fit.beta2:.4f} t0={fit.t0}")


def cmd_train(args):
    cfg = _config(args)
    for city in pipeline._cities(cfg, args.city):
        for model in pipeline._models(cfg, args.model):
            report = pipeline.train_model(cfg, city, model, args.seed)
            print(f"{city}/{model}: final train loss {report.total[-1]:.6g}")


def cmd_evaluate(args):
    cfg = _config(args)
    rows = []
    for city in pipeline._cities(cfg, args.city):
        for model in pipeline._models(cfg, args.model, with_baseline=True):
            rows.append(pipeline.evaluate_model(cfg, city, model, args.horizon_days).report.to_record())
    print(pipeline.format_table(rows, ("city", "model", "rmse", "corr", "horizon_days")))


def cmd_rollout(args):
    cfg = _config(args)
    if not args.model:
        raise ConfigError("rollout needs --model")
    horizon = args.horizon_days or cfg.horizon_days or 730
    for city in pipeline._cities(cfg, args.city):
        path, result = pipeline.rollout_model(cfg, city, args.model, horizon)
        print(f"{city}/{args.model}: {horizon} days in {result.iterations} model calls -> {path}")


def cmd_compare(args):
    cfg = _config(args)
    rows = pipeline.compare(cfg, args.city)
    print(pipeline.format_table(rows, pipeline.COMPARE_COLUMNS))


def cmd_run(args):
    cfg = _config(args)
    rows = pipeline.run_all(cfg)
    print(pipeline.format_table(rows, pipeline.COMPARE_COLUMNS))


def gradcheck_errors(seed: int = 0) -> dict:
    """Max relative autodiff-vs-finite-difference error of the total loss per cell kind."""
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=(2, 12)), rng.normal(size=(2, 6))
    out = {}
    for kind in CELL_KINDS:
        arch = ArchConfig(cell_kind=kind, hidden_dim=4, seq_len=12, pred_len=6, dropout=0.0)
        out[kind] = model_grad_check(init_params(arch, seed), x, y, LossWeights(lambda_physics=0.001))
    return out


def cmd_gradcheck(args):
    errors = gradcheck_errors(seed=args.seed or 0)
    worst = 0.0
    for kind, err in errors.items():
        print(f"{kind}: max relative error {err:.3e}")
        worst = max(worst, err)
    if not worst < 1e-3:
        raise FloatingPointError(f"gradient check failed: worst error {worst:.3e} >= 1e-3")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="physforecast", description="Physics-regularized recurrent temperature forecasting.",
                                epilog="exit codes: 0 ok, 2 input or configuration error, 3 numerical failure")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, model=True):
        sp.add_argument("--config", help="experiment JSON file")
        sp.add_argument("--city")
        sp.add_argument("--out-dir")
        if model:
            sp.add_argument("--model", help="<cell>-<variant> or 'baseline'")
        return sp

    common(sub.add_parser("stats", help="per-split mean/std table"), model=False).set_defaults(fn=cmd_stats)

    g = sub.add_parser("generate-synthetic", help="write a noisy sinusoid CSV")
    g.add_argument("--out", required=True)
    g.add_argument("--days", type=int, default=4018)
    g.add_argument("--amplitude", type=float, default=1.0)
    g.add_argument("--phase", type=float, default=0.0)
    g.add_argument("--omega", type=float, default=2 * math.pi / 365)
    g.add_argument("--noise-sigma", type=float, default=0.3)
    g.add_argument("--offset", type=float, default=0.0)
    g.add_argument("--start", default="2008-01-01")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--city")
    g.set_defaults(fn=cmd_generate)

    common(sub.add_parser("fit-baseline", help="harmonic regression on the training years"),
           model=False).set_defaults(fn=cmd_fit_baseline)

    t = common(sub.add_parser("train", help="train grid cells (or one --model)"))
    t.add_argument("--seed", type=int)
    t.set_defaults(fn=cmd_train)

    e = common(sub.add_parser("evaluate", help="rollout + RMSE/CORR on the test years"))
    e.add_argument("--horizon-days", type=int)
    e.set_defaults(fn=cmd_evaluate)

    r = common(sub.add_parser("rollout", help="write an autoregressive forecast CSV"))
    r.add_argument("--horizon-days", type=int)
    r.set_defaults(fn=cmd_rollout)

    common(sub.add_parser("compare", help="plain vs physics table"), model=False).set_defaults(fn=cmd_compare)
    common(sub.add_parser("run", help="stats, baseline, train, evaluate and compare every cell"),
           model=False).set_defaults(fn=cmd_run)

    gc = sub.add_parser("gradcheck", help="autodiff vs finite differences on a small model")
    gc.add_argument("--seed", type=int, default=0)
    gc.set_defaults(fn=cmd_gradcheck)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.fn(args)
    except (TrainingDivergence, RolloutDivergence, FloatingPointError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, DataError, FileNotFoundError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
