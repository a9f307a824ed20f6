"""Tape-based reverse-mode automatic differentiation over float64 arrays.

Every recorded node holds one output array. Nodes are appended in
evaluation order, so a node's parents always have smaller ids and the
tape is already topologically sorted when ``backward`` walks it in reverse.

Only eleven op kinds exist (``leaf`` plus the ten differentiable
primitives below); recurrent cells and losses are composed from them.

Example
-------
>>> tape = Tape()
>>> x = tape.leaf(3.0)
>>> y = tape.mul(x, x)
>>> tape.backward(y)[x]
array(6.)
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "OPS",
    "ShapeError",
    "Tape",
    "as_tensor",
    "grad_check",
]

OPS = (
    "add", "sub", "mul", "matmul", "tanh", "sigmoid",
    "concat", "slice", "mean", "square", "scale",
)


class ShapeError(ValueError):
    """Raised when the input shapes of an op do not conform."""


def as_tensor(value) -> np.ndarray:
    """Convert external input to a float64 array, rejecting NaN and Inf."""
    arr = np.array(value, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))
        raise ValueError(f"non-finite tensor entry at index {tuple(bad[0])}")
    return arr


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    # sum over the axes numpy broadcasting added or stretched
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


@dataclass
class Tape:
    """Append-only record of a computation.

    ``ops[i]``, ``parents[i]``, ``values[i]`` and ``attrs[i]`` describe node
    ``i``. ``values`` doubles as the saved-forward store: tanh and sigmoid
    derivatives read their own output, mul and matmul read their inputs.
    """

    ops: list = field(default_factory=list)
    parents: list = field(default_factory=list)
    values: list = field(default_factory=list)
    attrs: list = field(default_factory=list)

    def __len__(self):
        return len(self.ops)

    def value(self, node: int) -> np.ndarray:
        return self.values[node]

    def leaf(self, value, validate: bool = True) -> int:
        """Record an input (parameter, data, or constant mask)."""
        arr = as_tensor(value) if validate else np.asarray(value, dtype=np.float64)
        return self._append("leaf", (), arr, None)

    def _append(self, op, parents, out, attrs):
        self.ops.append(op)
        self.parents.append(parents)
        self.values.append(out)
        self.attrs.append(attrs)
        return len(self.ops) - 1

    def record(self, op: str, *inputs: int, **attrs) -> int:
        """Evaluate ``op`` on the given nodes and append the result.

        Attributes: ``axis`` for concat, ``index`` (tuple of slices) for
        slice, ``c`` for scale.
        """
        if op not in _FORWARD:
            raise ValueError(f"unknown op kind {op!r}")
        n = len(self.ops)
        if inputs and (min(inputs) < 0 or max(inputs) >= n):
            raise ValueError(f"{op}: parent ids {inputs} not all on tape (size {n})")
        vals = [self.values[p] for p in inputs]
        out = _FORWARD[op](vals, attrs)
        return self._append(op, inputs, out, attrs or None)

    # thin named wrappers so model code reads like arithmetic
    def add(self, a, b):
        return self.record("add", a, b)

    def sub(self, a, b):
        return self.record("sub", a, b)

    def mul(self, a, b):
        return self.record("mul", a, b)

    def matmul(self, a, b):
        return self.record("matmul", a, b)

    def tanh(self, a):
        return self.record("tanh", a)

    def sigmoid(self, a):
        return self.record("sigmoid", a)

    def concat(self, nodes, axis=0):
        return self.record("concat", *nodes, axis=axis)

    def slice(self, a, index):
        if not isinstance(index, tuple):
            index = (index,)
        return self.record("slice", a, index=index)

    def mean(self, a):
        return self.record("mean", a)

    def square(self, a):
        return self.record("square", a)

    def scale(self, a, c: float):
        return self.record("scale", a, c=float(c))

    def replay(self) -> list:
        """Recompute every non-leaf value from the recorded leaves."""
        out = []
        for op, parents, value, attrs in zip(self.ops, self.parents, self.values, self.attrs):
            if op == "leaf":
                out.append(value)
            else:
                out.append(_FORWARD[op]([out[p] for p in parents], attrs or {}))
        return out

    def backward(self, loss: int) -> dict:
        """Gradients of a scalar node with respect to every ancestor.

        Returns a dict ``node id -> array`` shaped like that node's value.
        Nodes the loss does not depend on are absent.
        """
        if self.values[loss].size != 1:
            raise ShapeError(
                f"backward: loss node {loss} has shape {self.values[loss].shape}, expected a scalar"
            )
        grads: list = [None] * (loss + 1)
        owned = [False] * (loss + 1)
        grads[loss] = np.ones_like(self.values[loss])
        owned[loss] = True

        def accumulate(p, g):
            cur = grads[p]
            if cur is None:
                grads[p] = g
            elif owned[p]:
                cur += g
            else:
                grads[p] = cur + g
                owned[p] = True

        values, parents, attrs = self.values, self.parents, self.attrs
        for i in range(loss, -1, -1):
            g = grads[i]
            if g is None:
                continue
            op = self.ops[i]
            if op == "leaf":
                continue
            ps = parents[i]
            if op == "slice":
                p = ps[0]
                if grads[p] is None:
                    grads[p] = np.zeros_like(values[p])
                    owned[p] = True
                elif not owned[p]:
                    grads[p] = grads[p].copy()
                    owned[p] = True
                grads[p][attrs[i]["index"]] += g
                continue
            for p, gp in zip(ps, _BACKWARD[op](g, values[i], [values[p] for p in ps], attrs[i])):
                accumulate(p, gp)
        return {i: g for i, g in enumerate(grads) if g is not None}


def _elementwise(op, fn):
    def forward(v, _):
        try:
            return fn(v[0], v[1])
        except ValueError:
            raise ShapeError(f"{op}: shapes {v[0].shape} and {v[1].shape} do not broadcast") from None
    return forward


_fwd_add = _elementwise("add", np.add)
_fwd_sub = _elementwise("sub", np.subtract)
_fwd_mul = _elementwise("mul", np.multiply)


def _fwd_matmul(v, _):
    a, b = v
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: shapes {a.shape} and {b.shape} do not conform")
    return a @ b


def _fwd_sigmoid(v, _):
    # tanh form stays finite for large |x| and gives exactly 0.5 at 0
    return 0.5 * (1.0 + np.tanh(0.5 * v[0]))


def _fwd_concat(v, attrs):
    axis = attrs["axis"]
    try:
        return np.concatenate(v, axis=axis)
    except ValueError:
        raise ShapeError(f"concat: shapes {[x.shape for x in v]} do not conform on axis {axis}") from None


def _fwd_slice(v, attrs):
    # views are safe: recorded values are never mutated
    try:
        return v[0][attrs["index"]]
    except IndexError as exc:
        raise ShapeError(f"slice: index {attrs['index']} invalid for shape {v[0].shape}: {exc}") from None


_FORWARD: dict[str, Callable] = {
    "add": _fwd_add,
    "sub": _fwd_sub,
    "mul": _fwd_mul,
    "matmul": _fwd_matmul,
    "tanh": lambda v, _: np.tanh(v[0]),
    "sigmoid": _fwd_sigmoid,
    "concat": _fwd_concat,
    "slice": _fwd_slice,
    "mean": lambda v, _: np.array(v[0].mean()),
    "square": lambda v, _: v[0] * v[0],
    "scale": lambda v, attrs: v[0] * attrs["c"],
}


def _bwd_concat(g, out, ins, attrs):
    axis = attrs["axis"]
    bounds = np.cumsum([x.shape[axis] for x in ins])[:-1]
    return np.split(g, bounds, axis=axis)


_BACKWARD: dict[str, Callable] = {
    "add": lambda g, out, ins, _: (_unbroadcast(g, ins[0].shape), _unbroadcast(g, ins[1].shape)),
    "sub": lambda g, out, ins, _: (_unbroadcast(g, ins[0].shape), _unbroadcast(-g, ins[1].shape)),
    "mul": lambda g, out, ins, _: (
        _unbroadcast(g * ins[1], ins[0].shape),
        _unbroadcast(g * ins[0], ins[1].shape),
    ),
    "matmul": lambda g, out, ins, _: (g @ ins[1].T, ins[0].T @ g),
    "tanh": lambda g, out, ins, _: (g * (1.0 - out * out),),
    "sigmoid": lambda g, out, ins, _: (g * out * (1.0 - out),),
    "concat": _bwd_concat,
    "mean": lambda g, out, ins, _: (np.full(ins[0].shape, g / ins[0].size),),
    "square": lambda g, out, ins, _: (2.0 * g * ins[0],),
    "scale": lambda g, out, ins, attrs: (g * attrs["c"],),
}


def grad_check(fn: Callable[[Tape, int], int], x, eps: float = 1e-5) -> float:
    """Compare autodiff and central-difference gradients of a scalar function.

    Parameters
    ----------
    fn : callable
        ``fn(tape, x_node) -> loss_node``. Must be deterministic.
    x : array_like
        Point at which to differentiate.
    eps : float
        Central-difference step.

    Returns
    -------
    float
        ``max_k |g_auto - g_fd| / max(1, |g_fd|)``.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    x = as_tensor(x)
    tape = Tape()
    xid = tape.leaf(x)
    loss = fn(tape, xid)
    g_auto = tape.backward(loss).get(xid, np.zeros_like(x))

    def evaluate(point, k):
        t = Tape()
        val = float(t.value(fn(t, t.leaf(point, validate=False))))
        if not np.isfinite(val):
            raise FloatingPointError(f"function value {val} at perturbed coordinate {k}")
        return val

    worst = 0.0
    flat = x.reshape(-1)
    ga = g_auto.reshape(-1)
    for k in range(flat.size):
        xp = flat.copy()
        xm = flat.copy()
        xp[k] += eps
        xm[k] -= eps
        g_fd = (evaluate(xp.reshape(x.shape), k) - evaluate(xm.reshape(x.shape), k)) / (2 * eps)
        worst = max(worst, abs(ga[k] - g_fd) / max(1.0, abs(g_fd)))
    return worst
