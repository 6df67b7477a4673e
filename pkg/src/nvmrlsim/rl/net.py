"""Small conv+FC Q-network with manual backprop and layer freezing.

The network is deliberately tiny (a few thousand parameters) so analytic
gradients can be checked against central finite differences. Freezing is a
cutoff index into the parameterized layers: everything below it keeps its
parameters bit-identical and backprop never descends past the lowest
trainable layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergenceError, DomainError
from .core import Transition, q_update


def _im2col(x, k, stride):
    """(H, W, C) -> (OH, OW, k*k*C) patch tensor."""
    h, w, c = x.shape
    oh = (h - k) // stride + 1
    ow = (w - k) // stride + 1
    cols = np.empty((oh, ow, k * k * c))
    idx = 0
    for di in range(k):
        for dj in range(k):
            cols[:, :, idx * c:(idx + 1) * c] = \
                x[di:di + oh * stride:stride, dj:dj + ow * stride:stride, :]
            idx += 1
    return cols


def _col2im(dcols, x_shape, k, stride):
    """Scatter-add the patch-tensor gradient back to input layout."""
    h, w, c = x_shape
    oh, ow = dcols.shape[:2]
    dx = np.zeros(x_shape)
    idx = 0
    for di in range(k):
        for dj in range(k):
            dx[di:di + oh * stride:stride, dj:dj + ow * stride:stride, :] += \
                dcols[:, :, idx * c:(idx + 1) * c]
            idx += 1
    return dx


@dataclass
class ConvLayer:
    weight: np.ndarray  # (k*k*in_c, out_c)
    bias: np.ndarray
    k: int
    stride: int
    in_shape: tuple
    relu: bool = True


@dataclass
class DenseLayer:
    weight: np.ndarray  # (in, out)
    bias: np.ndarray
    relu: bool = True


class ToyNet:
    """Conv stack then FC stack; the last FC emits one Q value per action."""

    def __init__(self, input_hw: int, input_channels: int, conv_specs, fc_dims,
                 n_actions: int, rng: np.random.Generator, freeze_cutoff: int = 0):
        self.input_hw = input_hw
        self.input_channels = input_channels
        self.layers = []
        h = w = input_hw
        c = input_channels
        for out_c, k, stride in conv_specs:
            fan_in = k * k * c
            weight = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, out_c))
            self.layers.append(ConvLayer(weight, np.zeros(out_c), k, stride, (h, w, c)))
            h = (h - k) // stride + 1
            w = (w - k) // stride + 1
            c = out_c
        dim = h * w * c
        dims = list(fc_dims) + [n_actions]
        for i, out_dim in enumerate(dims):
            weight = rng.normal(0.0, np.sqrt(2.0 / dim), size=(dim, out_dim))
            relu = i < len(dims) - 1
            self.layers.append(DenseLayer(weight, np.zeros(out_dim), relu))
            dim = out_dim
        self.n_actions = n_actions
        self.freeze_cutoff = freeze_cutoff

    @property
    def n_params(self) -> int:
        return sum(l.weight.size + l.bias.size for l in self.layers)

    def trainable_indices(self):
        return range(self.freeze_cutoff, len(self.layers))

    def copy(self) -> "ToyNet":
        clone = object.__new__(ToyNet)
        clone.input_hw = self.input_hw
        clone.input_channels = self.input_channels
        clone.n_actions = self.n_actions
        clone.freeze_cutoff = self.freeze_cutoff
        clone.layers = []
        for l in self.layers:
            if isinstance(l, ConvLayer):
                clone.layers.append(ConvLayer(l.weight.copy(), l.bias.copy(),
                                              l.k, l.stride, l.in_shape, l.relu))
            else:
                clone.layers.append(DenseLayer(l.weight.copy(), l.bias.copy(), l.relu))
        return clone

    def forward(self, state: np.ndarray, want_cache: bool = False):
        x = np.asarray(state, dtype=float)
        if x.ndim == 2:
            x = x[:, :, None]
        cache = []
        for l in self.layers:
            if isinstance(l, ConvLayer):
                cols = _im2col(x, l.k, l.stride)
                z = cols @ l.weight + l.bias
                a = np.maximum(z, 0.0) if l.relu else z
                cache.append((x.shape, cols, z))
                x = a
            else:
                flat = x.reshape(-1)
                z = flat @ l.weight + l.bias
                a = np.maximum(z, 0.0) if l.relu else z
                cache.append((x.shape, flat, z))
                x = a
        q = x
        return (q, cache) if want_cache else q

    def backward(self, cache, dq: np.ndarray):
        """Gradients for trainable layers; None entries for frozen ones."""
        grads: list = [None] * len(self.layers)
        grad = dq
        lowest = self.freeze_cutoff
        for i in range(len(self.layers) - 1, -1, -1):
            l = self.layers[i]
            in_shape, fwd_input, z = cache[i]
            if l.relu:
                grad = grad * (z > 0.0)
            if isinstance(l, DenseLayer):
                grads[i] = (np.outer(fwd_input, grad), grad.copy())
                if i == lowest:
                    break  # no need to descend below the training cutoff
                grad = (l.weight @ grad).reshape(in_shape)
            else:
                dcols = grad.reshape(-1, l.weight.shape[1])
                cols2d = fwd_input.reshape(-1, l.weight.shape[0])
                grads[i] = (cols2d.T @ dcols, grad.reshape(-1, l.weight.shape[1]).sum(axis=0))
                if i == lowest:
                    break
                dcols_full = (dcols @ l.weight.T).reshape(fwd_input.shape)
                grad = _col2im(dcols_full, in_shape, l.k, l.stride)
        for i in range(self.freeze_cutoff):
            grads[i] = None
        return grads


@dataclass
class ReplayBuffer:
    """Plain FIFO transition store."""

    capacity: int
    items: list = field(default_factory=list)

    def push(self, t: Transition):
        self.items.append(t)
        if len(self.items) > self.capacity:
            self.items.pop(0)

    def sample(self, batch_size: int, rng: np.random.Generator):
        idx = rng.integers(len(self.items), size=batch_size)
        return [self.items[i] for i in idx]

    def __len__(self):
        return len(self.items)


def train_step(net: ToyNet, batch, gamma: float, learning_rate: float,
               target_net: ToyNet | None = None) -> float:
    """One update: serial per-image gradient accumulation, then a single step.

    The regression target is the Bellman value from the (periodically frozen)
    target copy; the loss is the squared TD error. Frozen layers are never
    touched, so their parameters stay bit-identical.
    """
    if not batch:
        raise DomainError("empty training batch")
    if not 0.0 <= gamma < 1.0:
        raise DomainError(f"gamma must lie in [0, 1), got {gamma}")
    tgt = target_net if target_net is not None else net

    accum = [None] * len(net.layers)
    loss_total = 0.0
    for t in batch:
        q, cache = net.forward(t.state, want_cache=True)
        max_next = float(np.max(tgt.forward(t.next_state)))
        target = q_update(t.reward, gamma, max_next, t.crash)
        td = q[t.action] - target
        loss_total += 0.5 * td * td
        dq = np.zeros_like(q)
        dq[t.action] = td
        grads = net.backward(cache, dq)
        for i, g in enumerate(grads):
            if g is None:
                continue
            if accum[i] is None:
                accum[i] = [g[0], g[1]]
            else:
                accum[i][0] += g[0]
                accum[i][1] += g[1]

    loss = loss_total / len(batch)
    if not np.isfinite(loss):
        raise DivergenceError(f"non-finite loss {loss} (batch {len(batch)}, lr {learning_rate})")
    scale = learning_rate / len(batch)
    for i in net.trainable_indices():
        if accum[i] is not None:
            net.layers[i].weight -= scale * accum[i][0]
            net.layers[i].bias -= scale * accum[i][1]
    return float(loss)


def finite_diff_check(net: ToyNet, state, action: int, target: float,
                      step: float = 1e-4) -> float:
    """Max relative error of analytic vs central-difference gradients.

    Only trainable layers are checked; frozen layers have no analytic
    gradient to compare.
    """
    if net.n_params > 10_000:
        raise DomainError("finite-difference check is for nets with <= 10k parameters")

    def loss():
        q = net.forward(state)
        return 0.5 * (q[action] - target) ** 2

    q, cache = net.forward(state, want_cache=True)
    dq = np.zeros_like(q)
    dq[action] = q[action] - target
    grads = net.backward(cache, dq)

    worst = 0.0
    for i in net.trainable_indices():
        for which in (0, 1):
            param = net.layers[i].weight if which == 0 else net.layers[i].bias
            analytic = grads[i][which]
            it = np.nditer(param, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                orig = param[idx]
                h = step * max(1.0, abs(orig))
                param[idx] = orig + h
                up = loss()
                param[idx] = orig - h
                down = loss()
                param[idx] = orig
                numeric = (up - down) / (2 * h)
                denom = max(abs(numeric), abs(analytic[idx]), 1e-8)
                worst = max(worst, abs(numeric - analytic[idx]) / denom)
    return worst
