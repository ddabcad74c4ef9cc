"""Forward pass, deltas and the momentum rule on a network small enough to follow by hand."""

# %%
import math

import numpy as np

from opident import MisoDataset, Network, NetworkConfig, forward
from opident.training import (
    MomentumParams,
    analytic_gradient,
    compute_deltas,
    finite_difference_gradient,
    train_momentum,
)

# %% [markdown]
# One input, one tansig hidden neuron, one linear output. Column 0 of every
# weight matrix is the bias, multiplied by a constant +1.

# %%
cfg = NetworkConfig(1, [(1, "tansig")])
net = Network(cfg, (np.array([[-1.0, 2.0]]), np.array([[0.5, 3.0]])))

trace = forward(net, [1.0])
print("hidden field v  :", trace.fields[0])
print("hidden output y :", trace.outputs[1][1:])
print("network output  :", trace.output, " hand value:", 0.5 + 3 * math.tanh(1.0))

# %% [markdown]
# Local gradients for a target of 2.0, and the weight gradient they imply,
# checked against central differences.

# %%
deltas = compute_deltas(net, trace, [2.0])
print("output delta:", deltas[1], " hidden delta:", deltas[0])
g = analytic_gradient(net, [1.0], [2.0])
fd = finite_difference_gradient(net, [1.0], [2.0])
for layer, (a, b) in enumerate(zip(g, fd), start=1):
    print(f"layer {layer}: analytic {a.ravel()}  finite difference {b.ravel()}")

# %% [markdown]
# Pattern-mode training with momentum on a noiseless line.

# %%
x = np.linspace(0, 1, 51)[:, None]
ds = MisoDataset(("x",), "y", x, 0.25 + 0.5 * x[:, 0], normalized=True)
result = train_momentum(NetworkConfig(1, [(3, "tansig")]), ds,
                        MomentumParams(eta=0.05, alpha=0.9, max_epochs=300), seed=0)
print(f"{result.epochs_run} epochs, RMSE {result.final_rmse:.2e} (start {math.sqrt(result.initial_loss):.2e})")
for epoch in (0, 9, 99, result.epochs_run - 1):
    print(f"  epoch {epoch + 1:4d}  MSE {result.epoch_losses[epoch]:.3e}")
