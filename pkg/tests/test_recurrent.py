import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from physforecast.artifacts import load_checkpoint, save_checkpoint
from physforecast.autodiff import Tape, grad_check
from physforecast.data import Standardizer
from physforecast.recurrent import (
    CELL_KINDS, ArchConfig, ModelParams, encoder_forward, gru_cell_step, init_params,
    lstm_cell_step, predict_batch, predict_window, rnn_cell_step,
)

TANH_HALF = 0.46211715726000974  # math.tanh(0.5)


def _zeros(tape, kind, hidden=3, in_dim=1):
    g = {"rnn": 1, "lstm": 4, "gru": 3}[kind]
    return (tape.leaf(np.zeros((in_dim, g * hidden))), tape.leaf(np.zeros((hidden, g * hidden))),
            tape.leaf(np.zeros(g * hidden)))


def test_rnn_step_examples():
    t = Tape()
    h = rnn_cell_step(t, _zeros(t, "rnn"), t.leaf([[0.7]]), t.leaf(np.ones((1, 3))))
    np.testing.assert_array_equal(t.value(h), 0.0)
    w = (t.leaf([[1.0]]), t.leaf([[0.0]]), t.leaf([0.0]))
    h = rnn_cell_step(t, w, t.leaf([[0.5]]), t.leaf([[0.0]]))
    assert t.value(h)[0, 0] == pytest.approx(TANH_HALF, abs=1e-15)


def test_lstm_step_zero_params():
    t = Tape()
    c0 = np.array([[0.4, -2.0, 3.0]])
    h, c = lstm_cell_step(t, _zeros(t, "lstm"), t.leaf([[1.0]]), (t.leaf(np.zeros((1, 3))), t.leaf(c0)))
    np.testing.assert_allclose(t.value(c), 0.5 * c0)
    h, c = lstm_cell_step(t, _zeros(t, "lstm"), t.leaf([[1.0]]), (t.leaf(np.zeros((1, 3))), t.leaf(np.zeros((1, 3)))))
    np.testing.assert_array_equal(t.value(h), 0.0)
    np.testing.assert_array_equal(t.value(c), 0.0)


def test_gru_step_zero_params():
    t = Tape()
    v = np.array([[0.3, -0.8, 1.5]])
    h = gru_cell_step(t, _zeros(t, "gru"), t.leaf([[2.0]]), t.leaf(v))
    np.testing.assert_allclose(t.value(h), 0.5 * v)
    h = gru_cell_step(t, _zeros(t, "gru"), t.leaf([[2.0]]), t.leaf(np.zeros((1, 3))))
    np.testing.assert_array_equal(t.value(h), 0.0)


def test_step_shape_mismatch():
    t = Tape()
    with pytest.raises(ValueError, match="rnn_cell_step"):
        rnn_cell_step(t, _zeros(t, "rnn", in_dim=2), t.leaf([[1.0]]), t.leaf(np.zeros((1, 3))))


def _random_weights(rng, kind, hidden, scale=2.0):
    g = {"rnn": 1, "lstm": 4, "gru": 3}[kind]
    return (rng.normal(size=(1, g * hidden)) * scale, rng.normal(size=(hidden, g * hidden)) * scale,
            rng.normal(size=g * hidden) * scale)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_cell_bounds(seed):
    rng = np.random.default_rng(seed)
    hidden = 4
    x = rng.normal(size=(3, 1)) * 3
    h0 = rng.uniform(-1, 1, size=(3, hidden))
    c0 = rng.normal(size=(3, hidden)) * 3
    t = Tape()
    leaves = lambda ws: tuple(t.leaf(w) for w in ws)
    h = t.value(rnn_cell_step(t, leaves(_random_weights(rng, "rnn", hidden)), t.leaf(x), t.leaf(h0)))
    assert np.all(np.abs(h) <= 1)  # tanh rounds to exactly 1.0 in float64 once saturated
    _, c = lstm_cell_step(t, leaves(_random_weights(rng, "lstm", hidden)), t.leaf(x), (t.leaf(h0), t.leaf(c0)))
    assert np.all(np.abs(t.value(c)) <= np.abs(c0) + 1)

    w_ih, w_hh, b = _random_weights(rng, "gru", hidden)
    h = t.value(gru_cell_step(t, leaves((w_ih, w_hh, b)), t.leaf(x), t.leaf(h0)))
    # independent candidate: tanh(x W_n + (r*h0) W_hh_n + b_n)
    sig = lambda a: 1 / (1 + np.exp(-a))
    zr = sig(x @ w_ih[:, :2 * hidden] + h0 @ w_hh[:, :2 * hidden] + b[:2 * hidden])
    z, r = zr[:, :hidden], zr[:, hidden:]
    cand = np.tanh(x @ w_ih[:, 2 * hidden:] + (r * h0) @ w_hh[:, 2 * hidden:] + b[2 * hidden:])
    np.testing.assert_allclose(h, (1 - z) * h0 + z * cand, atol=1e-12)
    tol = 1e-12
    assert np.all(h >= np.minimum(h0, cand) - tol) and np.all(h <= np.maximum(h0, cand) + tol)


@pytest.mark.parametrize("kind", CELL_KINDS)
def test_single_step_gradient(kind):
    rng = np.random.default_rng(11)
    hidden = 3
    ws = _random_weights(rng, kind, hidden, scale=0.8)
    x = rng.normal(size=(2, 1))
    h0 = rng.uniform(-0.5, 0.5, size=(2, hidden))
    c0 = rng.normal(size=(2, hidden))
    probe = rng.normal(size=(2, hidden))
    step = {"rnn": rnn_cell_step, "lstm": lstm_cell_step, "gru": gru_cell_step}[kind]

    def loss_for(which):
        def fn(t, node):
            parts = [t.leaf(w) for w in ws]
            inputs = {"x": t.leaf(x), "h": t.leaf(h0), "c": t.leaf(c0)}
            if which < 3:
                parts[which] = node
            else:
                inputs["h"] = node
            state = (inputs["h"], inputs["c"]) if kind == "lstm" else inputs["h"]
            out = step(t, tuple(parts), inputs["x"], state)
            h = out[0] if kind == "lstm" else out
            if kind == "lstm":
                h = t.add(h, t.tanh(out[1]))
            return t.mean(t.mul(h, t.leaf(probe)))
        return fn

    targets = list(ws) + [h0]
    worst = max(grad_check(loss_for(k), targets[k]) for k in range(4))
    assert worst < 1e-4


def test_param_shapes_and_init():
    cfg = ArchConfig(cell_kind="gru", hidden_dim=5, num_layers=3, pred_len=7)
    p = init_params(cfg, 0)
    assert p["layer0.w_ih"].shape == (1, 15)
    assert p["layer2.w_ih"].shape == (5, 15)
    assert p["layer1.w_hh"].shape == (5, 15)
    assert p["head.w"].shape == (5, 7) and p["head.b"].shape == (7,)
    for name in p.names():
        arr = p[name]
        if arr.ndim == 1:
            assert np.all(arr == 0)
        else:
            assert np.all(np.abs(arr) <= 1 / np.sqrt(arr.shape[0]))
    q = init_params(cfg, 0)
    assert all(np.array_equal(p[n], q[n]) for n in p.names())
    r = init_params(cfg, 1)
    assert not np.array_equal(p.flat(), r.flat())


def test_defaults_and_validation():
    cfg = ArchConfig()
    assert (cfg.hidden_dim, cfg.num_layers, cfg.dropout, cfg.seq_len, cfg.pred_len) == (64, 2, 0.1, 90, 30)
    for bad in ({"hidden_dim": 0}, {"num_layers": 0}, {"dropout": 1.0}, {"cell_kind": "tcn"}):
        with pytest.raises(ValueError):
            ArchConfig(**bad)
    p = init_params(ArchConfig(hidden_dim=2), 0)
    arrays = dict(p.arrays)
    arrays["head.w"] = np.zeros((3, 30))
    with pytest.raises(ValueError, match="head.w"):
        ModelParams(p.config, arrays)
    arrays = dict(p.arrays)
    arrays["head.b"] = np.full(30, np.nan)
    with pytest.raises(ValueError):
        ModelParams(p.config, arrays)


@pytest.mark.parametrize("kind", CELL_KINDS)
def test_predict_window_shape_and_determinism(kind):
    p = init_params(ArchConfig(cell_kind=kind, hidden_dim=8), 3)
    w = np.sin(np.arange(90) / 10.0)
    a, b = predict_window(p, w), predict_window(p, w)
    assert a.shape == (30,)
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        predict_window(p, w[:89])
    with pytest.raises(ValueError):
        predict_window(p, w, mode="train")


def test_zero_head_gives_bias():
    p = init_params(ArchConfig(hidden_dim=6), 4)
    p.arrays["head.w"] = np.zeros((6, 30))
    p.arrays["head.b"] = np.linspace(-1, 1, 30)
    np.testing.assert_array_equal(predict_window(p, np.ones(90)), p["head.b"])


@pytest.mark.parametrize("kind", CELL_KINDS)
def test_dropout_zero_train_equals_eval(kind):
    p = init_params(ArchConfig(cell_kind=kind, hidden_dim=6, dropout=0.0), 5)
    w = np.random.default_rng(0).normal(size=(4, 90))
    tr = predict_batch(p, w, "train", np.random.default_rng(1))
    assert np.array_equal(tr, predict_batch(p, w, "eval"))


def test_dropout_only_in_train_mode():
    p = init_params(ArchConfig(hidden_dim=6, dropout=0.5), 5)
    w = np.random.default_rng(0).normal(size=(2, 90))
    a = predict_batch(p, w, "train", np.random.default_rng(1))
    b = predict_batch(p, w, "train", np.random.default_rng(1))
    assert np.array_equal(a, b)
    assert not np.allclose(a, predict_batch(p, w, "eval"))


def test_batch_matches_single_windows():
    p = init_params(ArchConfig(cell_kind="lstm", hidden_dim=5), 6)
    w = np.random.default_rng(2).normal(size=(3, 90))
    batch = predict_batch(p, w)
    for k in range(3):
        np.testing.assert_allclose(batch[k], predict_window(p, w[k]), rtol=0, atol=1e-14)


def _numpy_lstm(p, window):
    # independent single-window reference: column-vector loop, no tape
    sig = lambda a: 1 / (1 + np.exp(-a))
    cfg = p.config
    H = cfg.hidden_dim
    seq = [np.array([v]) for v in window]
    for layer in range(cfg.num_layers):
        w_ih, w_hh, b = p[f"layer{layer}.w_ih"], p[f"layer{layer}.w_hh"], p[f"layer{layer}.b"]
        h, c, out = np.zeros(H), np.zeros(H), []
        for x in seq:
            z = x @ w_ih + h @ w_hh + b
            i, f, o, g = sig(z[:H]), sig(z[H:2 * H]), sig(z[2 * H:3 * H]), np.tanh(z[3 * H:])
            c = f * c + i * g
            h = o * np.tanh(c)
            out.append(h)
        seq = out
    return h @ p["head.w"] + p["head.b"]


def test_lstm_matches_reference_loop():
    p = init_params(ArchConfig(hidden_dim=4, seq_len=20, pred_len=5), 9)
    w = np.random.default_rng(3).normal(size=20)
    np.testing.assert_allclose(predict_window(p, w), _numpy_lstm(p, w), atol=1e-13)


@pytest.mark.parametrize("kind", CELL_KINDS)
def test_bptt_90_steps_matches_finite_differences(kind):
    cfg = ArchConfig(cell_kind=kind, hidden_dim=4, dropout=0.0)
    p = init_params(cfg, 2)
    rng = np.random.default_rng(7)
    windows = rng.normal(size=(1, 90))
    probe = rng.normal(size=(1, 30))

    # gradient w.r.t. the first layer's recurrent weights flows through all 90 steps
    def fn(t, w_hh):
        nodes = {n: t.leaf(p[n]) for n in p.names()}
        nodes["layer0.w_hh"] = w_hh
        y = encoder_forward(t, nodes, cfg, windows, "eval")
        return t.mean(t.mul(y, t.leaf(probe)))

    assert grad_check(fn, p["layer0.w_hh"]) < 1e-3


@pytest.mark.parametrize("kind", CELL_KINDS)
def test_checkpoint_round_trip_bit_exact(tmp_path, kind):
    p = init_params(ArchConfig(cell_kind=kind, hidden_dim=7, num_layers=3, dropout=0.2), 8)
    std = Standardizer(12.96123456789, 9.0600000000001)
    path = tmp_path / "ckpt.json"
    save_checkpoint(path, p, std, 8, {"note": "x"})
    q, std2, seed, extra = load_checkpoint(path)
    assert q.config == p.config and seed == 8 and extra["note"] == "x"
    assert std2 == std
    for name in p.names():
        assert q[name].tobytes() == p[name].tobytes()
    save_checkpoint(tmp_path / "again.json", q, std2, seed, extra)
    assert (tmp_path / "again.json").read_bytes() == path.read_bytes()
