"""A short tour of the tape.

Every forward operation appends a node; ``backward`` walks the tape once in
reverse. Nothing here is specific to recurrent nets.
"""
# %%
import numpy as np

from physforecast.autodiff import Tape, grad_check

# %% [markdown]
# Build y = mean(tanh(x @ W)^2) and pull its gradient back to W.

# %%
rng = np.random.default_rng(0)
x = rng.normal(size=(5, 3))
w = rng.normal(size=(3, 2))

tape = Tape()
xn, wn = tape.leaf(x), tape.leaf(w)
y = tape.mean(tape.square(tape.tanh(tape.matmul(xn, wn))))
grads = tape.backward(y)
print("loss", tape.value(y))
print("dL/dW\n", grads[wn])
print("tape length", len(tape))

# %% [markdown]
# The same gradient by hand: d/dz mean(tanh(z)^2) = 2 tanh(z) (1 - tanh(z)^2) / z.size

# %%
z = x @ w
manual = x.T @ (2 * np.tanh(z) * (1 - np.tanh(z) ** 2) / z.size)
print("max abs diff vs hand derivation", np.abs(manual - grads[wn]).max())

# %% [markdown]
# ``grad_check`` rebuilds the graph for every perturbed coordinate, so it is
# slow but independent of the backward pass.

# %%
err = grad_check(lambda t, node: t.mean(t.square(t.tanh(t.matmul(t.leaf(x), node)))), w)
print(f"relative error vs central differences: {err:.2e}")

# %% [markdown]
# Nodes that do not feed the loss get no entry at all.

# %%
tape = Tape()
a, b = tape.leaf(1.0), tape.leaf(2.0)
loss = tape.square(a)
tape.tanh(b)
print("b in grads:", b in tape.backward(loss))
