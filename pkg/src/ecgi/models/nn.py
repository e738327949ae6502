"""Minimal reverse-mode network engine for sequence classifiers.

Activations are laid out ``(batch, time, channels)``. Every layer implements
``forward(x, training, keep)`` and ``backward(dy, need_dx)``; a forward pass
with ``keep=True`` caches whatever the backward pass needs.
"""

from __future__ import annotations

import numpy as np


def _uniform(rng, limit, shape, dtype):
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class Layer:
    name = "layer"

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.buffers: dict[str, np.ndarray] = {}

    def forward(self, x, training=False, keep=False):
        raise NotImplementedError

    def backward(self, dy, need_dx=True):
        raise NotImplementedError

    def astype(self, dtype):
        for store in (self.params, self.buffers):
            for k in store:
                store[k] = store[k].astype(dtype)


class Conv1D(Layer):
    """'Same'-padded 1-D convolution, stride 1. Weights are ``(kernel, in, out)``."""

    name = "conv1d"

    def __init__(self, in_channels, filters, kernel, rng, dtype=np.float32, relu_init=True):
        super().__init__()
        self.kernel = kernel
        self.pad_left = (kernel - 1) // 2
        self.pad_right = kernel - 1 - self.pad_left
        fan_in = in_channels * kernel
        limit = np.sqrt((6.0 if relu_init else 3.0) / fan_in)
        self.params["W"] = _uniform(rng, limit, (kernel, in_channels, filters), dtype)
        self.params["b"] = np.zeros(filters, dtype=dtype)

    # The padded batch is laid out as one long (B * Tp + K - 1, C) row array so every tap
    # is a contiguous row slice. Windows that straddle two beats land on rows t >= T of a
    # beat; they are dropped on the way out and carry zero gradient on the way back.

    def _flat_padded(self, x):
        B, T, C = x.shape
        Tp = T + self.kernel - 1
        flat = np.zeros((B * Tp + self.kernel - 1, C), dtype=x.dtype)
        flat[: B * Tp].reshape(B, Tp, C)[:, self.pad_left : self.pad_left + T] = x
        return flat, B * Tp

    def _cols(self, flat, N, C):
        """im2col rows for narrow inputs, where one product beats many thin ones."""
        if C * self.kernel > 64:
            return None
        return np.stack([flat[k : k + N] for k in range(self.kernel)], axis=1).reshape(N, -1)

    def forward(self, x, training=False, keep=False):
        B, T, C = x.shape
        W = self.params["W"]
        flat, N = self._flat_padded(x)
        cols = self._cols(flat, N, C)
        if cols is not None:
            out = cols @ W.reshape(-1, W.shape[2]) + self.params["b"]
        else:
            out = np.broadcast_to(self.params["b"], (N, W.shape[2])).copy()
            for k in range(self.kernel):
                out += flat[k : k + N] @ W[k]
        if keep:
            self._cache = (flat, x.shape)
        return out.reshape(B, -1, W.shape[2])[:, :T]

    def backward(self, dy, need_dx=True):
        flat, (B, T, C) = self._cache
        W = self.params["W"]
        F = dy.shape[-1]
        Tp = T + self.kernel - 1
        N = B * Tp
        dyp = np.zeros((B, Tp, F), dtype=dy.dtype)
        dyp[:, :T] = dy
        dyp = dyp.reshape(N, F)
        cols = self._cols(flat, N, C)
        if cols is not None:
            gW = (cols.T @ dyp).reshape(W.shape)
        else:
            gW = np.empty_like(W)
            for k in range(self.kernel):
                gW[k] = flat[k : k + N].T @ dyp
        self.grads["W"] = gW
        self.grads["b"] = dy.reshape(-1, F).sum(axis=0)
        if not need_dx:
            return None
        dflat = np.zeros(flat.shape, dtype=dy.dtype)
        for k in range(self.kernel):
            dflat[k : k + N] += dyp @ W[k].T
        return dflat[:N].reshape(B, Tp, C)[:, self.pad_left : self.pad_left + T]


class Dense(Layer):
    name = "dense"

    def __init__(self, n_in, n_out, rng, dtype=np.float32, relu_init=True):
        super().__init__()
        limit = np.sqrt((6.0 if relu_init else 3.0) / n_in)
        self.params["W"] = _uniform(rng, limit, (n_in, n_out), dtype)
        self.params["b"] = np.zeros(n_out, dtype=dtype)

    def forward(self, x, training=False, keep=False):
        if keep:
            self._x = x
        return x @ self.params["W"] + self.params["b"]

    def backward(self, dy, need_dx=True):
        self.grads["W"] = self._x.T @ dy
        self.grads["b"] = dy.sum(axis=0)
        return dy @ self.params["W"].T if need_dx else None


class ReLU(Layer):
    name = "relu"

    def forward(self, x, training=False, keep=False):
        if keep:
            self._mask = x > 0
        return np.maximum(x, 0)

    def backward(self, dy, need_dx=True):
        return dy * self._mask


class BatchNorm(Layer):
    """Per-channel normalization over batch and time axes."""

    name = "batchnorm"

    def __init__(self, channels, dtype=np.float32, momentum=0.99, eps=1e-3):
        super().__init__()
        self.momentum, self.eps = momentum, eps
        self.params["gamma"] = np.ones(channels, dtype=dtype)
        self.params["beta"] = np.zeros(channels, dtype=dtype)
        self.buffers["running_mean"] = np.zeros(channels, dtype=dtype)
        self.buffers["running_var"] = np.ones(channels, dtype=dtype)

    def forward(self, x, training=False, keep=False):
        axes = tuple(range(x.ndim - 1))
        if training:
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            m = self.momentum
            self.buffers["running_mean"] = (m * self.buffers["running_mean"] + (1 - m) * mean).astype(x.dtype)
            self.buffers["running_var"] = (m * self.buffers["running_var"] + (1 - m) * var).astype(x.dtype)
        else:
            mean, var = self.buffers["running_mean"], self.buffers["running_var"]
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean) * inv_std
        if keep:
            self._cache = (xhat, inv_std, training)
        return self.params["gamma"] * xhat + self.params["beta"]

    def backward(self, dy, need_dx=True):
        xhat, inv_std, training = self._cache
        axes = tuple(range(dy.ndim - 1))
        self.grads["gamma"] = (dy * xhat).sum(axis=axes)
        self.grads["beta"] = dy.sum(axis=axes)
        if not need_dx:
            return None
        dxhat = dy * self.params["gamma"]
        if not training:
            return dxhat * inv_std
        n = int(np.prod([dy.shape[a] for a in axes]))  # a numpy integer here would promote float32
        return (inv_std / n) * (
            n * dxhat - dxhat.sum(axis=axes) - xhat * (dxhat * xhat).sum(axis=axes)
        )


class MaxPool1D(Layer):
    """Non-overlapping max pooling along time; a trailing odd step is dropped."""

    name = "maxpool1d"

    def __init__(self, size=2):
        super().__init__()
        self.size = size

    def forward(self, x, training=False, keep=False):
        B, T, C = x.shape
        T2 = T // self.size
        win = x[:, : T2 * self.size].reshape(B, T2, self.size, C)
        idx = win.argmax(axis=2)
        out = np.take_along_axis(win, idx[:, :, None, :], axis=2)[:, :, 0, :]
        if keep:
            self._cache = (idx, x.shape)
        return out

    def backward(self, dy, need_dx=True):
        idx, (B, T, C) = self._cache
        T2 = dy.shape[1]
        dwin = np.zeros((B, T2, self.size, C), dtype=dy.dtype)
        np.put_along_axis(dwin, idx[:, :, None, :], dy[:, :, None, :], axis=2)
        dx = np.zeros((B, T, C), dtype=dy.dtype)
        dx[:, : T2 * self.size] = dwin.reshape(B, T2 * self.size, C)
        return dx


class Flatten(Layer):
    name = "flatten"

    def forward(self, x, training=False, keep=False):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy, need_dx=True):
        return dy.reshape(self._shape)


class LSTM(Layer):
    """Single LSTM layer returning the full hidden sequence.

    Gate order in the fused weight matrices is input, forget, cell, output.
    """

    name = "lstm"

    def __init__(self, n_in, units, rng, dtype=np.float32):
        super().__init__()
        H = units
        self.units = H
        limit = 1.0 / np.sqrt(H)
        self.params["Wx"] = _uniform(rng, limit, (n_in, 4 * H), dtype)
        self.params["Wh"] = _uniform(rng, limit, (H, 4 * H), dtype)
        b = np.zeros(4 * H, dtype=dtype)
        b[H : 2 * H] = 1.0
        self.params["b"] = b

    def _gate_affine(self, dtype):
        # i, f, o are sigmoids and g is a tanh: all four come from one tanh as mul * tanh(scale * z) + add
        H = self.units
        half = np.full(H, 0.5, dtype=dtype)
        one, zero = np.ones(H, dtype=dtype), np.zeros(H, dtype=dtype)
        scale = np.concatenate([half, half, one, half])
        return scale, scale, np.concatenate([half, half, zero, half])

    def forward(self, x, training=False, keep=False):
        B, T, D = x.shape
        H = self.units
        Wh = self.params["Wh"]
        scale, mul, add = self._gate_affine(x.dtype)
        # time-major scratch so every step touches contiguous memory
        xw = np.ascontiguousarray((x @ self.params["Wx"] + self.params["b"]).transpose(1, 0, 2))
        hs = np.empty((T, B, H), dtype=x.dtype)
        cs = np.empty((T, B, H), dtype=x.dtype)  # xw is overwritten in place with the gate activations
        h = np.zeros((B, H), dtype=x.dtype)
        c = np.zeros((B, H), dtype=x.dtype)
        tmp = np.empty((B, H), dtype=x.dtype)
        for t in range(T):
            z = xw[t]
            z += h @ Wh
            z *= scale
            np.tanh(z, out=z)
            z *= mul
            z += add
            i, f, g, o = z[:, :H], z[:, H : 2 * H], z[:, 2 * H : 3 * H], z[:, 3 * H :]
            np.multiply(f, c, out=cs[t])
            np.multiply(i, g, out=tmp)
            cs[t] += tmp
            c = cs[t]
            h = hs[t]
            np.tanh(c, out=h)
            h *= o
        if keep:
            self._cache = (x, xw, cs, hs)
        return hs.transpose(1, 0, 2)

    def backward(self, dy, need_dx=True):
        x, gates, cs, hs = self._cache
        B, T, D = x.shape
        H = self.units
        WhT = np.ascontiguousarray(self.params["Wh"].T)
        dy = np.ascontiguousarray(dy.transpose(1, 0, 2))
        dz_all = np.empty_like(gates)
        dh_next = np.zeros((B, H), dtype=dy.dtype)
        dc_next = np.zeros((B, H), dtype=dy.dtype)
        zeros = np.zeros((B, H), dtype=dy.dtype)
        for t in reversed(range(T)):
            gt = gates[t]
            i, f, g, o = gt[:, :H], gt[:, H : 2 * H], gt[:, 2 * H : 3 * H], gt[:, 3 * H :]
            c_prev = cs[t - 1] if t > 0 else zeros
            tc = np.tanh(cs[t])
            dh = dy[t] + dh_next
            dc = dh * o * (1 - tc * tc) + dc_next
            dz = dz_all[t]
            dz[:, :H] = dc * g * i * (1 - i)
            dz[:, H : 2 * H] = dc * c_prev * f * (1 - f)
            dz[:, 2 * H : 3 * H] = dc * i * (1 - g * g)
            dz[:, 3 * H :] = dh * tc * o * (1 - o)
            dc_next = dc * f
            dh_next = dz @ WhT
        h_prev = np.concatenate([np.zeros((1, B, H), dtype=hs.dtype), hs[:-1]], axis=0)
        dz2 = dz_all.reshape(T * B, 4 * H)
        self.grads["Wh"] = h_prev.reshape(T * B, H).T @ dz2
        self.grads["Wx"] = x.transpose(1, 0, 2).reshape(T * B, D).T @ dz2
        self.grads["b"] = dz2.sum(axis=0)
        if not need_dx:
            return None
        return (dz2 @ self.params["Wx"].T).reshape(T, B, D).transpose(1, 0, 2)


class Sequential:
    """Ordered stack of layers producing class logits.

    ``feature_index`` names the layer whose output is the feature map used for
    class-activation maps (None for networks without one).
    """

    def __init__(self, layers, feature_index=None, dtype=np.float32):
        self.layers = list(layers)
        self.feature_index = feature_index
        self.dtype = np.dtype(dtype)

    def forward(self, x, training=False, keep=False, start=0):
        a = np.asarray(x, dtype=self.dtype)
        for layer in self.layers[start:]:
            a = layer.forward(a, training=training, keep=keep)
        return a

    def forward_collect(self, x, keep=False):
        """Inference pass returning every layer's output."""
        a = np.asarray(x, dtype=self.dtype)
        outs = []
        for layer in self.layers:
            a = layer.forward(a, training=False, keep=keep)
            outs.append(a)
        return outs

    def backward(self, dy, stop=0):
        """Backpropagate from the logits down to (and including) layer ``stop``."""
        for k in range(len(self.layers) - 1, stop - 1, -1):
            dy = self.layers[k].backward(dy, need_dx=k > 0 or stop > 0)
        return dy

    def parameters(self):
        for k, layer in enumerate(self.layers):
            for name in layer.params:
                yield f"{k}.{layer.name}.{name}", layer, name

    def state_tensors(self) -> dict[str, np.ndarray]:
        out = {}
        for k, layer in enumerate(self.layers):
            for name, arr in list(layer.params.items()) + list(layer.buffers.items()):
                out[f"{k}.{layer.name}.{name}"] = arr
        return out

    def load_state(self, tensors: dict[str, np.ndarray]):
        for k, layer in enumerate(self.layers):
            for store in (layer.params, layer.buffers):
                for name in store:
                    key = f"{k}.{layer.name}.{name}"
                    arr = tensors[key]
                    if arr.shape != store[name].shape:
                        raise ValueError(f"{key}: shape {arr.shape} != {store[name].shape}")
                    store[name] = arr.astype(self.dtype)

    def astype(self, dtype):
        self.dtype = np.dtype(dtype)
        for layer in self.layers:
            layer.astype(dtype)
        return self


def log_softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax(z):
    return np.exp(log_softmax(z))


def softmax_cross_entropy(logits, y):
    """Mean categorical cross-entropy and its gradient w.r.t. the logits."""
    n = len(y)
    logp = log_softmax(logits)
    loss = -logp[np.arange(n), y].mean()
    grad = np.exp(logp)
    grad[np.arange(n), y] -= 1
    return float(loss), grad / n


class Adam:
    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, net: Sequential):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        corr1 = 1 - b1**self.t
        corr2 = 1 - b2**self.t
        for key, layer, name in net.parameters():
            g = layer.grads[name]
            if key not in self.m:
                self.m[key] = np.zeros_like(g)
                self.v[key] = np.zeros_like(g)
            m, v = self.m[key], self.v[key]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p = layer.params[name]
            p -= (self.lr * (m / corr1) / (np.sqrt(v / corr2) + self.eps)).astype(p.dtype)
