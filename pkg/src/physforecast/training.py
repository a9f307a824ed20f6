"""Losses, Adam, and the full-batch training loop.

The oscillator prior u'' + omega^2 u = 0 is imposed on each predicted block
through central second differences at its interior points, so a block of
``pred_len`` values gives ``pred_len - 2`` residuals.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tape, as_tensor, grad_check
from .recurrent import ArchConfig, ModelParams, encoder_forward, init_params, param_leaves, predict_batch

log = logging.getLogger(__name__)

OMEGA_ANNUAL = 2.0 * math.pi / 365.0


class TrainingDivergence(FloatingPointError):
    """Raised when a loss or gradient becomes non-finite."""

    def __init__(self, message, epoch):
        super().__init__(f"epoch {epoch}: {message}")
        self.epoch = epoch


@dataclass(frozen=True)
class LossWeights:
    lambda_data: float = 1.0
    lambda_physics: float = 0.001
    omega: float = OMEGA_ANNUAL
    dt: float = 1.0

    def __post_init__(self):
        if self.lambda_data < 0 or self.lambda_physics < 0:
            raise ValueError("loss weights must be non-negative")
        if not self.omega > 0 or not self.dt > 0:
            raise ValueError("omega and dt must be positive")


# --- losses -------------------------------------------------------------------

def mse_node(tape: Tape, pred: int, target: int) -> int:
    return tape.mean(tape.square(tape.sub(pred, target)))


def physics_residual_node(tape: Tape, yhat: int, weights: LossWeights = LossWeights()) -> int:
    """Residuals along the last axis of ``yhat``; shape (..., n - 2)."""
    n = tape.value(yhat).shape[-1]
    if n < 3:
        raise ValueError(f"physics residual needs at least 3 predicted steps, got {n}")
    lead = (slice(None),) * (tape.value(yhat).ndim - 1)
    prev = tape.slice(yhat, lead + (slice(0, n - 2),))
    mid = tape.slice(yhat, lead + (slice(1, n - 1),))
    nxt = tape.slice(yhat, lead + (slice(2, n),))
    second = tape.sub(tape.add(nxt, prev), tape.scale(mid, 2.0))
    if weights.dt != 1.0:
        second = tape.scale(second, 1.0 / weights.dt ** 2)
    return tape.add(second, tape.scale(mid, weights.omega ** 2))


def physics_loss_node(tape: Tape, yhat: int, weights: LossWeights = LossWeights()) -> int:
    return tape.mean(tape.square(physics_residual_node(tape, yhat, weights)))


def mse_loss(pred, target) -> float:
    pred, target = as_tensor(pred), as_tensor(target)
    if pred.shape != target.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {target.shape}")
    if pred.size == 0:
        raise ValueError("mse of empty input")
    tape = Tape()
    return float(tape.value(mse_node(tape, tape.leaf(pred), tape.leaf(target))))


def physics_residuals(yhat, weights: LossWeights = LossWeights()) -> np.ndarray:
    tape = Tape()
    return tape.value(physics_residual_node(tape, tape.leaf(yhat), weights)).copy()


def physics_loss(yhat, weights: LossWeights = LossWeights()) -> float:
    tape = Tape()
    return float(tape.value(physics_loss_node(tape, tape.leaf(yhat), weights)))


def total_loss(data_loss: float, phys_loss: float, weights: LossWeights = LossWeights()) -> float:
    if not (math.isfinite(data_loss) and math.isfinite(phys_loss)):
        raise ValueError(f"non-finite loss component: data={data_loss}, physics={phys_loss}")
    if data_loss < 0 or phys_loss < 0:
        raise ValueError("loss components must be non-negative")
    return weights.lambda_data * data_loss + weights.lambda_physics * phys_loss


# --- optimizer --------------------------------------------------------------------

@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, arrays: dict, **hyper) -> "AdamState":
        return cls(
            m={k: np.zeros_like(a) for k, a in arrays.items()},
            v={k: np.zeros_like(a) for k, a in arrays.items()},
            **hyper,
        )


def adam_step(state: AdamState, params: dict, grads: dict, epoch=None):
    """One bias-corrected Adam update. Returns ``(new_state, new_params)``."""
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise TrainingDivergence(f"non-finite gradient for {name}", epoch)
    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    m, v, out = {}, {}, {}
    for name, theta in params.items():
        g = grads[name]
        if g.shape != theta.shape:
            raise ValueError(f"{name}: gradient shape {g.shape} != parameter shape {theta.shape}")
        m[name] = b1 * state.m[name] + (1.0 - b1) * g
        v[name] = b2 * state.v[name] + (1.0 - b2) * (g * g)
        m_hat = m[name] / (1.0 - b1 ** t)
        v_hat = v[name] / (1.0 - b2 ** t)
        out[name] = theta - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    new_state = AdamState(m, v, t, state.lr, state.beta1, state.beta2, state.eps)
    return new_state, out


# --- training loop -------------------------------------------------------------------

@dataclass
class TrainReport:
    total: list = field(default_factory=list)
    data: list = field(default_factory=list)
    physics: list = field(default_factory=list)
    val_data: list = field(default_factory=list)
    params: ModelParams | None = None
    best_params: ModelParams | None = None
    best_epoch: int | None = None

    @property
    def epochs(self) -> int:
        return len(self.total)

    def rows(self):
        for k in range(self.epochs):
            val = self.val_data[k] if self.val_data else float("nan")
            yield k + 1, self.total[k], self.data[k], self.physics[k], val

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "train_total", "train_data", "train_physics", "val_data"])
            for row in self.rows():
                w.writerow([row[0]] + [repr(float(x)) for x in row[1:]])


def loss_and_grads(params: ModelParams, inputs, targets, weights: LossWeights,
                   mode="train", rng=None):
    """Full-batch total loss, its parts, and gradients keyed by parameter name."""
    tape = Tape()
    nodes = param_leaves(tape, params)
    yhat = encoder_forward(tape, nodes, params.config, inputs, mode, rng)
    data = mse_node(tape, yhat, tape.leaf(targets, validate=False))
    total = tape.scale(data, weights.lambda_data)
    if weights.lambda_physics > 0:
        phys = physics_loss_node(tape, yhat, weights)
        total = tape.add(total, tape.scale(phys, weights.lambda_physics))
        phys_value = float(tape.value(phys))
    else:
        # reported only; not part of the differentiated graph
        side = Tape()
        phys = physics_loss_node(side, side.leaf(tape.value(yhat), validate=False), weights)
        phys_value = float(side.value(phys))
    grads = tape.backward(total)
    named = {name: grads[node] for name, node in nodes.items()}
    return float(tape.value(total)), float(tape.value(data)), phys_value, named


def train(arch: ArchConfig, dataset, weights: LossWeights = LossWeights(), seed: int = 0,
          epochs: int = 1000, lr: float = 0.001, val=None, keep_best: bool = False,
          init: ModelParams | None = None) -> TrainReport:
    """Full-batch Adam training for a fixed number of epochs.

    ``dataset`` and ``val`` are :class:`~physforecast.data.WindowedDataset`
    objects. The final-epoch weights are always returned in ``report.params``;
    with ``keep_best`` the lowest-validation-loss weights are kept as well.
    """
    if len(dataset) == 0:
        raise ValueError("training dataset is empty")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    params = init if init is not None else init_params(arch, seed)
    dropout_rng = np.random.default_rng([seed, 1])
    state = AdamState.zeros_like(params.arrays, lr=lr)
    report = TrainReport()
    best = math.inf
    for epoch in range(1, epochs + 1):
        total, data, phys, grads = loss_and_grads(
            params, dataset.inputs, dataset.targets, weights, "train", dropout_rng
        )
        if not (math.isfinite(total) and math.isfinite(data) and math.isfinite(phys)):
            raise TrainingDivergence(f"non-finite loss total={total} data={data} physics={phys}", epoch)
        if val is not None and len(val):
            val_loss = float(np.mean((predict_batch(params, val.inputs) - val.targets) ** 2))
            report.val_data.append(val_loss)
            if keep_best and val_loss < best:
                best, report.best_params, report.best_epoch = val_loss, params.copy(), epoch
        report.total.append(total)
        report.data.append(data)
        report.physics.append(phys)
        state, arrays = adam_step(state, params.arrays, grads, epoch)
        for name, arr in arrays.items():
            if not np.all(np.isfinite(arr)):
                raise TrainingDivergence(f"non-finite parameter {name} after update", epoch)
        params = ModelParams(arch, arrays)
        if epoch == 1 or epoch % 100 == 0:
            log.info("epoch %d total %.6g data %.6g physics %.3g", epoch, total, data, phys)
    report.params = params
    return report


def pack_params(params: ModelParams):
    """Stack every parameter as a 2-D block of one zero-padded matrix.

    Returns ``(matrix, index)`` where ``index[name]`` slices that parameter
    back out (biases come back as ``(1, n)`` rows, which broadcast the same
    way as ``(n,)``).
    """
    blocks = [(name, np.atleast_2d(params[name])) for name in params.names()]
    width = max(b.shape[1] for _, b in blocks)
    rows = sum(b.shape[0] for _, b in blocks)
    packed = np.zeros((rows, width))
    index, r = {}, 0
    for name, b in blocks:
        packed[r:r + b.shape[0], :b.shape[1]] = b
        index[name] = (slice(r, r + b.shape[0]), slice(0, b.shape[1]))
        r += b.shape[0]
    return packed, index


def model_grad_check(params: ModelParams, inputs, targets, weights: LossWeights = LossWeights(),
                     eps: float = 1e-5) -> float:
    """:func:`~physforecast.autodiff.grad_check` of the eval-mode total loss
    over every parameter of ``params``."""
    packed, index = pack_params(params)
    config = params.config

    def loss(tape, node):
        nodes = {name: tape.slice(node, idx) for name, idx in index.items()}
        yhat = encoder_forward(tape, nodes, config, inputs, "eval")
        total = tape.scale(mse_node(tape, yhat, tape.leaf(targets)), weights.lambda_data)
        if weights.lambda_physics > 0:
            total = tape.add(total, tape.scale(physics_loss_node(tape, yhat, weights), weights.lambda_physics))
        return total

    return grad_check(loss, packed, eps)
