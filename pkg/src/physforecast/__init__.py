"""Physics-regularized recurrent forecasters for daily temperature, in numpy."""
from .autodiff import Tape, ShapeError, grad_check
from .recurrent import ArchConfig, ModelParams, init_params, predict_window, predict_batch
from .training import LossWeights, TrainReport, TrainingDivergence, train, physics_loss, mse_loss
from .harmonic import HarmonicFit, IllConditionedFit, fit_ols
from .data import DailySeries, DataError, Standardizer, load_csv, make_windows, split, synth_generate
from .evaluation import RolloutDivergence, UndefinedCorrelation, autoregressive_rollout, corr, evaluate, rmse

__all__ = [
    "Tape",
    "ShapeError",
    "grad_check",
    "ArchConfig",
    "ModelParams",
    "init_params",
    "predict_window",
    "predict_batch",
    "LossWeights",
    "TrainReport",
    "TrainingDivergence",
    "train",
    "physics_loss",
    "mse_loss",
    "HarmonicFit",
    "IllConditionedFit",
    "fit_ols",
    "DailySeries",
    "DataError",
    "Standardizer",
    "load_csv",
    "make_windows",
    "split",
    "synth_generate",
    "RolloutDivergence",
    "UndefinedCorrelation",
    "autoregressive_rollout",
    "corr",
    "evaluate",
    "rmse",
]

__version__ = "0.1.0"
