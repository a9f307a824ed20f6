"""Recurrent cells, a stacked encoder and a linear forecast head.

All weights multiply from the right (``x @ W``), so an input-to-hidden
matrix has shape ``(in_dim, gates * hidden)``. Gate blocks are laid out
column-wise in this order:

* rnn:  (candidate,)
* lstm: (input, forget, output, candidate)
* gru:  (update, reset, candidate)

The GRU update gate weights the candidate: ``h = (1 - z) * h_prev + z * h_new``,
and the reset gate is applied before the recurrent product of the candidate.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tape, as_tensor

CELL_KINDS = ("rnn", "lstm", "gru")
GATES = {"rnn": 1, "lstm": 4, "gru": 3}


@dataclass(frozen=True)
class ArchConfig:
    cell_kind: str = "lstm"
    input_dim: int = 1
    hidden_dim: int = 64
    num_layers: int = 2
    dropout: float = 0.1
    seq_len: int = 90
    pred_len: int = 30

    def __post_init__(self):
        if self.cell_kind not in CELL_KINDS:
            raise ValueError(f"cell_kind must be one of {CELL_KINDS}, got {self.cell_kind!r}")
        if self.hidden_dim <= 0 or self.input_dim <= 0:
            raise ValueError("hidden_dim and input_dim must be positive")
        if self.num_layers < 1:
            raise ValueError("num_layers must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.seq_len < 1 or self.pred_len < 1:
            raise ValueError("seq_len and pred_len must be >= 1")

    @property
    def gates(self) -> int:
        return GATES[self.cell_kind]

    def param_shapes(self) -> dict:
        """Parameter name -> shape, in a fixed order."""
        h, g = self.hidden_dim, self.gates
        shapes = {}
        for layer in range(self.num_layers):
            in_dim = self.input_dim if layer == 0 else h
            shapes[f"layer{layer}.w_ih"] = (in_dim, g * h)
            shapes[f"layer{layer}.w_hh"] = (h, g * h)
            shapes[f"layer{layer}.b"] = (g * h,)
        shapes["head.w"] = (h, self.pred_len)
        shapes["head.b"] = (self.pred_len,)
        return shapes


@dataclass
class ModelParams:
    config: ArchConfig
    arrays: dict = field(default_factory=dict)

    def __post_init__(self):
        expected = self.config.param_shapes()
        if set(expected) != set(self.arrays):
            missing = set(expected) ^ set(self.arrays)
            raise ValueError(f"parameter names do not match architecture: {sorted(missing)}")
        for name, shape in expected.items():
            arr = as_tensor(self.arrays[name])
            if arr.shape != shape:
                raise ValueError(f"{name}: shape {arr.shape}, expected {shape}")
            self.arrays[name] = arr

    def __getitem__(self, name):
        return self.arrays[name]

    def names(self):
        return list(self.config.param_shapes())

    def copy(self) -> "ModelParams":
        return ModelParams(self.config, {k: v.copy() for k, v in self.arrays.items()})

    def flat(self) -> np.ndarray:
        return np.concatenate([self.arrays[k].ravel() for k in self.names()])

    def with_flat(self, vector) -> "ModelParams":
        out, pos = {}, 0
        for name, shape in self.config.param_shapes().items():
            n = int(np.prod(shape))
            out[name] = np.asarray(vector[pos:pos + n], dtype=np.float64).reshape(shape)
            pos += n
        if pos != len(vector):
            raise ValueError(f"flat vector has {len(vector)} entries, architecture needs {pos}")
        return ModelParams(self.config, out)


def init_params(config: ArchConfig, seed: int) -> ModelParams:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases."""
    rng = np.random.default_rng(seed)
    arrays = {}
    for name, shape in config.param_shapes().items():
        if len(shape) == 1:
            arrays[name] = np.zeros(shape)
        else:
            bound = 1.0 / np.sqrt(shape[0])
            arrays[name] = rng.uniform(-bound, bound, size=shape)
    return ModelParams(config, arrays)


def param_leaves(tape: Tape, params: ModelParams) -> dict:
    return {name: tape.leaf(params[name], validate=False) for name in params.names()}


# --- single steps -----------------------------------------------------------
# ``xw`` is the already-projected input x @ W_ih + b, so the encoder can
# project a whole sequence with one matmul.

def _rnn_update(tape, xw, h_prev, w_hh):
    return tape.tanh(tape.add(xw, tape.matmul(h_prev, w_hh)))


def _lstm_update(tape, xw, h_prev, c_prev, w_hh, hidden):
    pre = tape.add(xw, tape.matmul(h_prev, w_hh))
    sig = tape.sigmoid(tape.slice(pre, (slice(None), slice(0, 3 * hidden))))
    i = tape.slice(sig, (slice(None), slice(0, hidden)))
    f = tape.slice(sig, (slice(None), slice(hidden, 2 * hidden)))
    o = tape.slice(sig, (slice(None), slice(2 * hidden, 3 * hidden)))
    g = tape.tanh(tape.slice(pre, (slice(None), slice(3 * hidden, 4 * hidden))))
    c = tape.add(tape.mul(f, c_prev), tape.mul(i, g))
    h = tape.mul(o, tape.tanh(c))
    return h, c


def _gru_update(tape, xw, h_prev, w_hh_zr, w_hh_n, hidden):
    zr_in = tape.slice(xw, (slice(None), slice(0, 2 * hidden)))
    zr = tape.sigmoid(tape.add(zr_in, tape.matmul(h_prev, w_hh_zr)))
    z = tape.slice(zr, (slice(None), slice(0, hidden)))
    r = tape.slice(zr, (slice(None), slice(hidden, 2 * hidden)))
    n_in = tape.slice(xw, (slice(None), slice(2 * hidden, 3 * hidden)))
    cand = tape.tanh(tape.add(n_in, tape.matmul(tape.mul(r, h_prev), w_hh_n)))
    # (1 - z) * h_prev + z * cand  ==  h_prev + z * (cand - h_prev)
    return tape.add(h_prev, tape.mul(z, tape.sub(cand, h_prev)))


def _project(tape, x, w_ih, b):
    return tape.add(tape.matmul(x, w_ih), b)


def _hidden_of(tape, w_hh):
    return tape.value(w_hh).shape[0]


def _check_step(name, tape, x, w_ih, h_prev):
    xs, ws, hs = tape.value(x).shape, tape.value(w_ih).shape, tape.value(h_prev).shape
    if len(xs) != 2 or xs[1] != ws[0] or len(hs) != 2 or hs[0] != xs[0]:
        raise ValueError(f"{name}: x {xs}, w_ih {ws}, h_prev {hs} do not conform")


def rnn_cell_step(tape: Tape, weights, x: int, h_prev: int) -> int:
    """h = tanh(x @ W_ih + h_prev @ W_hh + b). ``weights`` is (w_ih, w_hh, b)."""
    w_ih, w_hh, b = weights
    _check_step("rnn_cell_step", tape, x, w_ih, h_prev)
    return _rnn_update(tape, _project(tape, x, w_ih, b), h_prev, w_hh)


def lstm_cell_step(tape: Tape, weights, x: int, state: tuple) -> tuple:
    """One LSTM step; returns ``(h, c)``."""
    w_ih, w_hh, b = weights
    h_prev, c_prev = state
    _check_step("lstm_cell_step", tape, x, w_ih, h_prev)
    hidden = _hidden_of(tape, w_hh)
    return _lstm_update(tape, _project(tape, x, w_ih, b), h_prev, c_prev, w_hh, hidden)


def gru_cell_step(tape: Tape, weights, x: int, h_prev: int) -> int:
    w_ih, w_hh, b = weights
    _check_step("gru_cell_step", tape, x, w_ih, h_prev)
    hidden = _hidden_of(tape, w_hh)
    w_zr = tape.slice(w_hh, (slice(None), slice(0, 2 * hidden)))
    w_n = tape.slice(w_hh, (slice(None), slice(2 * hidden, 3 * hidden)))
    return _gru_update(tape, _project(tape, x, w_ih, b), h_prev, w_zr, w_n, hidden)


# --- stacked encoder ----------------------------------------------------------

def encoder_forward(tape: Tape, nodes: dict, config: ArchConfig, windows,
                    mode: str = "eval", rng=None) -> int:
    """Run the stacked encoder and head on a batch of windows.

    Parameters
    ----------
    tape : Tape
    nodes : dict
        Parameter name -> leaf id, from :func:`param_leaves`.
    windows : array, shape (batch, seq_len)
    mode : {"train", "eval"}
        Dropout between layers is only active in train mode.
    rng : numpy Generator, required in train mode.

    Returns
    -------
    int
        Node id of the forecast, shape (batch, pred_len).
    """
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim == 1:
        windows = windows[None, :]
    batch, steps = windows.shape
    if steps != config.seq_len:
        raise ValueError(f"window length {steps} != seq_len {config.seq_len}")
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    if mode == "train" and rng is None:
        raise ValueError("train mode needs an rng for dropout")
    hidden, kind = config.hidden_dim, config.cell_kind

    # time-major rows: row t*batch + k holds step t of window k
    layer_in = tape.leaf(windows.T.reshape(steps * batch, 1))
    zeros = np.zeros((batch, hidden))
    h = None
    for layer in range(config.num_layers):
        w_ih, w_hh, b = (nodes[f"layer{layer}.{p}"] for p in ("w_ih", "w_hh", "b"))
        xproj = _project(tape, layer_in, w_ih, b)
        if kind == "gru":
            w_zr = tape.slice(w_hh, (slice(None), slice(0, 2 * hidden)))
            w_n = tape.slice(w_hh, (slice(None), slice(2 * hidden, 3 * hidden)))
        h = tape.leaf(zeros, validate=False)
        c = tape.leaf(zeros, validate=False) if kind == "lstm" else None
        outputs = []
        for t in range(steps):
            xw = tape.slice(xproj, (slice(t * batch, (t + 1) * batch),))
            if kind == "rnn":
                h = _rnn_update(tape, xw, h, w_hh)
            elif kind == "lstm":
                h, c = _lstm_update(tape, xw, h, c, w_hh, hidden)
            else:
                h = _gru_update(tape, xw, h, w_zr, w_n, hidden)
            outputs.append(h)
        if layer + 1 < config.num_layers:
            layer_in = tape.concat(outputs, axis=0)
            if mode == "train" and config.dropout > 0:
                keep = rng.random((steps * batch, hidden)) >= config.dropout
                mask = keep / (1.0 - config.dropout)
                layer_in = tape.mul(layer_in, tape.leaf(mask, validate=False))
    return tape.add(tape.matmul(h, nodes["head.w"]), nodes["head.b"])


def predict_batch(params: ModelParams, windows, mode: str = "eval", rng=None) -> np.ndarray:
    tape = Tape()
    out = encoder_forward(tape, param_leaves(tape, params), params.config, windows, mode, rng)
    return tape.value(out)


def predict_window(params: ModelParams, window, mode: str = "eval", rng=None) -> np.ndarray:
    """Forecast ``pred_len`` standardized values from one ``seq_len`` window."""
    window = as_tensor(window)
    if window.shape != (params.config.seq_len,):
        raise ValueError(
            f"window must have shape ({params.config.seq_len},), got {window.shape}"
        )
    return predict_batch(params, window[None, :], mode, rng)[0]
