"""Autoregressive rollout and RMSE / Pearson-correlation scoring."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import harmonic
from .recurrent import ModelParams, predict_window

DIVERGENCE_LIMIT = 10.0
MAX_HORIZON = 730


class RolloutDivergence(FloatingPointError):
    def __init__(self, message, iteration):
        super().__init__(f"rollout iteration {iteration}: {message}")
        self.iteration = iteration


class UndefinedCorrelation(ValueError):
    """Correlation requested for a constant series."""


@dataclass
class RolloutResult:
    predicted: np.ndarray          # standardized
    predicted_c: np.ndarray | None
    iterations: int
    seed_dates: list = field(default_factory=list)
    inputs: list | None = None     # per-iteration input windows, if recorded


def _as_predictor(model):
    if isinstance(model, ModelParams):
        return lambda window: predict_window(model, window, mode="eval"), model.config.seq_len
    if callable(model):
        return model, None
    raise TypeError(f"cannot roll out {type(model).__name__}")


def autoregressive_rollout(model, seed_window, horizon_days: int, standardizer=None,
                           seed_dates=None, record_inputs: bool = False) -> RolloutResult:
    """Forecast ``horizon_days`` values by feeding predictions back as input.

    Each iteration predicts one block from the trailing ``len(seed_window)``
    values of the growing series. ``model`` is a :class:`ModelParams` or any
    callable mapping a window to a block of predictions.
    """
    if horizon_days < 1:
        raise ValueError("horizon_days must be >= 1")
    predictor, seq_len = _as_predictor(model)
    series = [float(v) for v in np.asarray(seed_window, dtype=np.float64)]
    seq_len = seq_len or len(series)
    if len(series) != seq_len:
        raise ValueError(f"seed window has {len(series)} values, model expects {seq_len}")
    history = list(series)
    produced, inputs, k = 0, [], 0
    while produced < horizon_days:
        window = np.array(history[-seq_len:])
        if record_inputs:
            inputs.append(window.copy())
        block = np.asarray(predictor(window), dtype=np.float64).ravel()
        if block.size == 0:
            raise ValueError("model returned an empty block")
        if not np.all(np.isfinite(block)):
            raise RolloutDivergence("non-finite prediction", k)
        if np.max(np.abs(block)) > DIVERGENCE_LIMIT:
            raise RolloutDivergence(
                f"|prediction| {np.max(np.abs(block)):.3g} exceeds {DIVERGENCE_LIMIT} standardized units", k
            )
        history.extend(block.tolist())
        produced += block.size
        k += 1
    predicted = np.array(history[seq_len:seq_len + horizon_days])
    predicted_c = standardizer.invert(predicted) if standardizer is not None else None
    return RolloutResult(predicted, predicted_c, k, list(seed_dates or []), inputs if record_inputs else None)


def rmse(observed, predicted) -> float:
    y, yh = np.asarray(observed, dtype=np.float64), np.asarray(predicted, dtype=np.float64)
    if y.shape != yh.shape:
        raise ValueError(f"length mismatch: {y.shape} vs {yh.shape}")
    if y.size == 0:
        raise ValueError("rmse of empty input")
    d = y - yh
    return float(np.sqrt(np.mean(d * d)))


def corr(observed, predicted) -> float:
    y, yh = np.asarray(observed, dtype=np.float64), np.asarray(predicted, dtype=np.float64)
    if y.shape != yh.shape:
        raise ValueError(f"length mismatch: {y.shape} vs {yh.shape}")
    if y.size < 2:
        raise ValueError("correlation needs at least 2 samples")
    dy, dyh = y - y.mean(), yh - yh.mean()
    syy, shh = dy @ dy, dyh @ dyh
    if syy == 0 or shh == 0:
        which = "observed" if syy == 0 else "predicted"
        raise UndefinedCorrelation(f"{which} series is constant; correlation is undefined")
    return float(np.clip((dy @ dyh) / math.sqrt(syy * shh), -1.0, 1.0))


@dataclass
class MetricsReport:
    city: str
    model: str
    rmse: float
    corr: float
    horizon_days: int
    descriptor: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "city": self.city,
            "model": self.model,
            "rmse": self.rmse,
            "corr": self.corr,
            "horizon_days": self.horizon_days,
            "descriptor": self.descriptor,
        }


@dataclass
class Evaluation:
    report: MetricsReport
    dates: list
    observed_c: np.ndarray
    predicted_c: np.ndarray
    iterations: int = 0


def default_horizon(test_len: int, seq_len: int = 90) -> int:
    return min(test_len - seq_len, MAX_HORIZON)


def evaluate(model, test, standardizer, horizon_days: int | None = None, seq_len: int = 90,
             model_name: str = "model", descriptor: dict | None = None) -> Evaluation:
    """Score a forecaster on a test series seeded by its first ``seq_len`` days.

    Neural models (``ModelParams`` or callables) are rolled out from the
    standardized seed window; a :class:`~physforecast.harmonic.HarmonicFit`
    is evaluated at the horizon dates using its own time origin. Metrics are
    in degrees Celsius over exactly the forecast horizon.
    """
    if isinstance(model, ModelParams):
        seq_len = model.config.seq_len
    if len(test) <= seq_len:
        raise ValueError(f"test series length {len(test)} must exceed seed length {seq_len}")
    available = len(test) - seq_len
    horizon = default_horizon(len(test), seq_len) if horizon_days is None else int(horizon_days)
    if not 1 <= horizon <= available:
        raise ValueError(f"horizon {horizon} outside 1..{available} for this test series")
    dates = test.dates[seq_len:seq_len + horizon]
    observed = test.temps[seq_len:seq_len + horizon]
    iterations = 0
    if isinstance(model, harmonic.HarmonicFit):
        origin = model.t0 or test.start
        t = np.array([(d - origin).days for d in dates], dtype=np.float64)
        predicted = standardizer.invert(harmonic.predict(model, t))
    else:
        seed = standardizer.apply(test.temps[:seq_len])
        result = autoregressive_rollout(model, seed, horizon, standardizer, test.dates[:seq_len])
        predicted, iterations = result.predicted_c, result.iterations
    report = MetricsReport(
        city=test.city,
        model=model_name,
        rmse=rmse(observed, predicted),
        corr=corr(observed, predicted),
        horizon_days=horizon,
        descriptor=dict(descriptor or {}),
    )
    return Evaluation(report, dates, observed.copy(), predicted, iterations)
