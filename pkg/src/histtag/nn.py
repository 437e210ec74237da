"""Small numpy building blocks with hand-written backward passes.

Every layer keeps its parameters in ``params`` and accumulates gradients
into the matching ``grads`` entries.  ``forward`` returns the output plus an
opaque cache; ``backward`` consumes the cache and the upstream gradient and
returns the gradient with respect to the layer input.  All math runs in
float64 so analytic gradients can be checked against central finite
differences to tight tolerances.
"""

import numpy as np
from scipy.special import expit as sigmoid
from scipy.special import log_softmax, logsumexp, softmax

__all__ = [
    "sigmoid", "softmax", "log_softmax", "logsumexp",
    "Layer", "Embedding", "Linear", "Lstm", "Dropout",
    "init_uniform", "cross_entropy", "global_grad_norm",
    "clip_grad_norm", "sgd_step",
]


def init_uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    """Uniform init in plus/minus 1/sqrt(fan_in)."""
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Layer:
    """Base for parameterized blocks: named tensors plus gradient slots."""

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def _register(self, name: str, value: np.ndarray) -> None:
        self.params[name] = value
        self.grads[name] = np.zeros_like(value)

    def zero_grads(self) -> None:
        for g in self.grads.values():
            g[...] = 0.0


class Embedding(Layer):
    """Index lookup table; rows receive sparse gradient updates."""

    def __init__(self, num_embeddings: int, dim: int, rng: np.random.Generator):
        super().__init__()
        self.num_embeddings = num_embeddings
        self.dim = dim
        self._register("weight", init_uniform(rng, (num_embeddings, dim), dim))

    def forward(self, indices: np.ndarray):
        indices = np.asarray(indices, dtype=np.int64)
        return self.params["weight"][indices], indices

    def backward(self, cache, grad_out: np.ndarray) -> None:
        indices = cache
        np.add.at(self.grads["weight"], indices, grad_out)


class Linear(Layer):
    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator,
                 bias: bool = True):
        super().__init__()
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.has_bias = bias
        self._register("weight", init_uniform(rng, (in_dim, out_dim), in_dim))
        if bias:
            self._register("bias", np.zeros(out_dim))

    def forward(self, x: np.ndarray):
        out = x @ self.params["weight"]
        if self.has_bias:
            out = out + self.params["bias"]
        return out, x

    def backward(self, cache, grad_out: np.ndarray) -> np.ndarray:
        x = cache
        self.grads["weight"] += x.T @ grad_out
        if self.has_bias:
            self.grads["bias"] += grad_out.sum(axis=0)
        return grad_out @ self.params["weight"].T


class Lstm(Layer):
    """Single-layer LSTM over one sequence at a time.

    Gate pre-activations are stored in one (T, 4H) block ordered input,
    forget, cell, output.  Input projections for the whole sequence are
    batched up front; the recurrence itself is the only per-step loop.
    """

    def __init__(self, input_dim: int, hidden_size: int, rng: np.random.Generator):
        super().__init__()
        self.input_dim = input_dim
        self.hidden_size = hidden_size
        self._register("Wx", init_uniform(rng, (input_dim, 4 * hidden_size), input_dim))
        self._register("Wh", init_uniform(rng, (hidden_size, 4 * hidden_size), hidden_size))
        self._register("bias", np.zeros(4 * hidden_size))

    def initial_state(self) -> tuple[np.ndarray, np.ndarray]:
        h = np.zeros(self.hidden_size)
        return h, h.copy()

    def forward(self, x: np.ndarray, state=None):
        """Run the recurrence.

        x: (T, input_dim); state: optional (h0, c0) each (H,).
        Returns hs (T, H), final state (hT, cT), and the backward cache.
        """
        T = x.shape[0]
        H = self.hidden_size
        if state is None:
            state = self.initial_state()
        h, c = state
        x_proj = x @ self.params["Wx"] + self.params["bias"]
        Wh = self.params["Wh"]

        hs = np.empty((T, H))
        gates = np.empty((T, 4 * H))
        cells = np.empty((T, H))
        tanh_c = np.empty((T, H))
        h_prev = np.empty((T, H))
        c_prev = np.empty((T, H))
        for t in range(T):
            h_prev[t] = h
            c_prev[t] = c
            a = x_proj[t] + h @ Wh
            i = sigmoid(a[:H])
            f = sigmoid(a[H:2 * H])
            g = np.tanh(a[2 * H:3 * H])
            o = sigmoid(a[3 * H:])
            c = f * c + i * g
            tc = np.tanh(c)
            h = o * tc
            gates[t, :H] = i
            gates[t, H:2 * H] = f
            gates[t, 2 * H:3 * H] = g
            gates[t, 3 * H:] = o
            cells[t] = c
            tanh_c[t] = tc
            hs[t] = h
        cache = (x, gates, cells, tanh_c, h_prev, c_prev)
        return hs, (h, c), cache

    def backward(self, cache, grad_hs: np.ndarray, grad_state=None):
        """Backprop through the recurrence.

        grad_hs: (T, H) gradient on every step's hidden output; grad_state:
        optional (dhT, dcT) extra gradient on the final state.  Returns
        (dx, (dh0, dc0)).
        """
        x, gates, cells, tanh_c, h_prev, c_prev = cache
        T = x.shape[0]
        H = self.hidden_size
        Wx = self.params["Wx"]
        Wh = self.params["Wh"]

        dx = np.empty_like(x)
        da = np.empty((T, 4 * H))
        dh_next = np.zeros(H)
        dc_next = np.zeros(H)
        if grad_state is not None:
            dh_next = dh_next + grad_state[0]
            dc_next = dc_next + grad_state[1]
        for t in range(T - 1, -1, -1):
            i = gates[t, :H]
            f = gates[t, H:2 * H]
            g = gates[t, 2 * H:3 * H]
            o = gates[t, 3 * H:]
            dh = grad_hs[t] + dh_next
            do = dh * tanh_c[t]
            dc = dh * o * (1.0 - tanh_c[t] ** 2) + dc_next
            di = dc * g
            df = dc * c_prev[t]
            dg = dc * i
            dc_next = dc * f
            da_t = da[t]
            da_t[:H] = di * i * (1.0 - i)
            da_t[H:2 * H] = df * f * (1.0 - f)
            da_t[2 * H:3 * H] = dg * (1.0 - g ** 2)
            da_t[3 * H:] = do * o * (1.0 - o)
            dh_next = da_t @ Wh.T
        self.grads["Wx"] += x.T @ da
        self.grads["Wh"] += h_prev.T @ da
        self.grads["bias"] += da.sum(axis=0)
        dx[:] = da @ Wx.T
        return dx, (dh_next, dc_next)


class Dropout:
    """Inverted dropout; identity when rate is 0 or training is off."""

    def __init__(self, rate: float):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
        self.rate = rate

    def forward(self, x: np.ndarray, rng: np.random.Generator, train: bool):
        if not train or self.rate == 0.0:
            return x, None
        mask = (rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        return x * mask, mask

    def backward(self, cache, grad_out: np.ndarray) -> np.ndarray:
        if cache is None:
            return grad_out
        return grad_out * cache


def cross_entropy(logits: np.ndarray, targets: np.ndarray):
    """Per-position negative log-likelihood and its gradient.

    logits: (T, V); targets: (T,) int indices.  Returns (nll (T,), dlogits
    (T, V)) where dlogits is the gradient of nll.sum(); callers scale it
    when they average.
    """
    targets = np.asarray(targets, dtype=np.int64)
    logp = log_softmax(logits, axis=-1)
    rows = np.arange(logits.shape[0])
    nll = -logp[rows, targets]
    dlogits = np.exp(logp)
    dlogits[rows, targets] -= 1.0
    return nll, dlogits


def global_grad_norm(layers) -> float:
    total = 0.0
    for layer in layers:
        for g in layer.grads.values():
            total += float(np.sum(g * g))
    return float(np.sqrt(total))


def clip_grad_norm(layers, max_norm: float) -> float:
    """Scale all gradients down so their joint L2 norm is at most max_norm."""
    norm = global_grad_norm(layers)
    if norm > max_norm:
        scale = max_norm / norm
        for layer in layers:
            for g in layer.grads.values():
                g *= scale
    return norm


def sgd_step(layers, lr: float) -> None:
    for layer in layers:
        for name, p in layer.params.items():
            p -= lr * layer.grads[name]
