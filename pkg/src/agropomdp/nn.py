"""Dense network machinery in plain numpy.

Two architectures are supported, which is all the Q-learning code needs:

* :class:`MlpNetwork` -- fully connected, rectifier on hidden layers and
  identity on the output layer.
* :class:`RecurrentQNetwork` -- a single :class:`GruCell` run over an
  observation window, its final hidden state fed to an :class:`MlpNetwork`
  head.

Both accept a single sample or a leading batch axis.  Gradients are exact
reverse-mode; :func:`finite_diff_grad` is the independent central-difference
check used by the tests.  Everything is float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, ShapeError, UsageError

INIT_SCHEME = "scaled-uniform"

# Type alias: one gradient array per parameter array, same order and shapes.
GradientBundle = list


def _glorot(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_out, fan_in))


def _sigmoid(a):
    # tanh form cannot overflow
    return 0.5 * (1.0 + np.tanh(0.5 * a))


class MlpNetwork:
    """Feedforward net; ``weights[k]`` has shape (out, in)."""

    kind = "mlp"

    def __init__(self, weights, biases, activations=None):
        if len(weights) != len(biases) or not weights:
            raise ShapeError("need one bias per weight matrix and at least one layer")
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        n = len(self.weights)
        if activations is None:
            activations = ["relu"] * (n - 1) + ["identity"]
        if len(activations) != n or any(a not in ("relu", "identity") for a in activations):
            raise ConfigError(f"bad activation list {activations!r}")
        self.activations = list(activations)
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ShapeError(f"layer {k}: weight {w.shape} and bias {b.shape} disagree")
            if k and w.shape[1] != self.weights[k - 1].shape[0]:
                raise ShapeError(
                    f"layer {k} expects {w.shape[1]} inputs but layer {k - 1} emits "
                    f"{self.weights[k - 1].shape[0]}"
                )
        self._ctx = None

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def input_size(self) -> int:
        return self.weights[0].shape[1]

    @property
    def output_size(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "MlpNetwork":
        return MlpNetwork([w.copy() for w in self.weights], [b.copy() for b in self.biases], self.activations)

    def forward(self, x, record: bool = False) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        a = x[None, :] if single else x
        if a.ndim != 2 or a.shape[1] != self.input_size:
            raise ShapeError(f"expected input width {self.input_size}, got shape {x.shape}")
        inputs, pre = [], []
        for w, b, act in zip(self.weights, self.biases, self.activations):
            inputs.append(a)
            z = a @ w.T + b
            pre.append(z)
            a = np.maximum(z, 0.0) if act == "relu" else z
        if record:
            self._ctx = (x, inputs, pre, single)
        return a[0] if single else a

    def backward(self, x, grad_out, need_input_grad: bool = False):
        """Gradients of ``sum(grad_out * forward(x))`` w.r.t. the parameters.

        Requires a preceding ``forward(x, record=True)``.  Returns the
        gradient list (``need_input_grad`` adds the input gradient).
        """
        ctx = self._ctx
        if ctx is None or not (ctx[0] is x or np.array_equal(ctx[0], x)):
            raise UsageError("backward called without a recorded forward pass for this input")
        _, inputs, pre, single = ctx
        g = np.asarray(grad_out, dtype=np.float64)
        g = g[None, :] if single else g
        if g.shape != pre[-1].shape:
            raise ShapeError(f"output gradient shape {g.shape} != output shape {pre[-1].shape}")
        grads = [None] * (2 * len(self.weights))
        for k in range(len(self.weights) - 1, -1, -1):
            if self.activations[k] == "relu":
                g = g * (pre[k] > 0.0)
            grads[2 * k] = g.T @ inputs[k]
            grads[2 * k + 1] = g.sum(axis=0)
            if k or need_input_grad:
                g = g @ self.weights[k]
        self._ctx = None
        if need_input_grad:
            return grads, (g[0] if single else g)
        return grads


class GruCell:
    """Single GRU layer.

    z = s(Wz x + Uz h + bz), r = s(Wr x + Ur h + br),
    c = tanh(Wh x + Uh (r*h) + bh), h' = (1 - z) h + z c.
    """

    PARAM_NAMES = ("W_z", "U_z", "b_z", "W_r", "U_r", "b_r", "W_h", "U_h", "b_h")

    def __init__(self, params: Sequence[np.ndarray]):
        if len(params) != 9:
            raise ShapeError("a GRU cell has 9 parameter tensors")
        self.W_z, self.U_z, self.b_z, self.W_r, self.U_r, self.b_r, self.W_h, self.U_h, self.b_h = (
            np.asarray(p, dtype=np.float64) for p in params
        )
        hidden, inp = self.W_z.shape
        for name, p in zip(self.PARAM_NAMES, self.params):
            want = {"W": (hidden, inp), "U": (hidden, hidden), "b": (hidden,)}[name[0]]
            if p.shape != want:
                raise ShapeError(f"{name} has shape {p.shape}, expected {want}")

    @property
    def input_size(self) -> int:
        return self.W_z.shape[1]

    @property
    def hidden_size(self) -> int:
        return self.W_z.shape[0]

    @property
    def params(self) -> list[np.ndarray]:
        return [getattr(self, n) for n in self.PARAM_NAMES]

    def step(self, x, h, proj=None):
        """One update on batched ``x`` (B, I), ``h`` (B, H); returns h' and the step cache.

        ``proj`` optionally carries the precomputed input projections
        (Wz x + bz, Wr x + br, Wh x + bh).
        """
        if proj is None:
            proj = (x @ self.W_z.T + self.b_z, x @ self.W_r.T + self.b_r, x @ self.W_h.T + self.b_h)
        pz, pr, ph = proj
        z = _sigmoid(pz + h @ self.U_z.T)
        r = _sigmoid(pr + h @ self.U_r.T)
        rh = r * h
        c = np.tanh(ph + rh @ self.U_h.T)
        h_new = (1.0 - z) * h + z * c
        return h_new, (x, h, z, r, rh, c)

    def gates(self, x, h):
        """(z, r) for diagnostics."""
        _, (_, _, z, r, _, _) = self.step(np.atleast_2d(x), np.atleast_2d(h))
        return z, r

    def step_backward(self, dh_new, cache, grads):
        """Accumulate parameter gradients into ``grads``; return dL/dh."""
        x, h, z, r, rh, c = cache
        da_z = dh_new * (c - h) * z * (1.0 - z)
        da_c = dh_new * z * (1.0 - c * c)
        d_rh = da_c @ self.U_h
        da_r = d_rh * h * r * (1.0 - r)
        dh = dh_new * (1.0 - z) + da_z @ self.U_z + da_r @ self.U_r + d_rh * r
        for i, (da, hh) in enumerate(((da_z, h), (da_r, h), (da_c, rh))):
            grads[3 * i] += da.T @ x
            grads[3 * i + 1] += da.T @ hh
            grads[3 * i + 2] += da.sum(axis=0)
        return dh


class RecurrentQNetwork:
    """GRU over a chronological window, then an MLP head on the final hidden state."""

    kind = "gru"

    def __init__(self, gru: GruCell, head: MlpNetwork):
        if head.input_size != gru.hidden_size:
            raise ShapeError(f"head expects {head.input_size} inputs, GRU emits {gru.hidden_size}")
        self.gru = gru
        self.head = head
        self._ctx = None

    @property
    def input_size(self) -> int:
        return self.gru.input_size

    @property
    def output_size(self) -> int:
        return self.head.output_size

    @property
    def params(self) -> list[np.ndarray]:
        return self.gru.params + self.head.params

    def copy(self) -> "RecurrentQNetwork":
        return RecurrentQNetwork(GruCell([p.copy() for p in self.gru.params]), self.head.copy())

    def _as_batch(self, window):
        w = np.asarray(window, dtype=np.float64)
        single = w.ndim == 2
        b = w[None] if single else w
        if b.ndim != 3 or b.shape[1] == 0 or b.shape[2] != self.input_size:
            raise ShapeError(
                f"expected window (T, {self.input_size}) with T >= 1, got shape {w.shape}"
            )
        return w, b, single

    def forward_hidden(self, window, record: bool = False):
        w, b, single = self._as_batch(window)
        g = self.gru
        h = np.zeros((b.shape[0], g.hidden_size))
        # input projections for every time step at once
        pz = b @ g.W_z.T + g.b_z
        pr = b @ g.W_r.T + g.b_r
        ph = b @ g.W_h.T + g.b_h
        caches = []
        for t in range(b.shape[1]):
            h, cache = g.step(b[:, t, :], h, (pz[:, t], pr[:, t], ph[:, t]))
            if record:
                caches.append(cache)
        q = self.head.forward(h, record=record)
        if record:
            self._ctx = (w, caches, single)
        if single:
            return q[0], h[0]
        return q, h

    def forward(self, window, record: bool = False) -> np.ndarray:
        return self.forward_hidden(window, record=record)[0]

    def backward(self, window, grad_out):
        """Backpropagation through time over the whole window."""
        ctx = self._ctx
        if ctx is None or not (ctx[0] is window or np.array_equal(ctx[0], window)):
            raise UsageError("backward called without a recorded forward pass for this window")
        _, caches, single = ctx
        g = np.asarray(grad_out, dtype=np.float64)
        g = g[None, :] if single else g
        head_in = caches[-1][0].shape[0]
        if g.shape != (head_in, self.output_size):
            raise ShapeError(f"output gradient shape {g.shape} does not match the forward batch")
        head_grads, dh = self.head.backward(self.head._ctx[0], g, need_input_grad=True)
        gru_grads = [np.zeros_like(p) for p in self.gru.params]
        for cache in reversed(caches):
            dh = self.gru.step_backward(dh, cache, gru_grads)
        self._ctx = None
        return gru_grads + head_grads


Network = MlpNetwork | RecurrentQNetwork


# ---------------------------------------------------------------- construction


@dataclass(frozen=True)
class MlpSpec:
    layer_sizes: tuple[int, ...]

    def __post_init__(self):
        if len(self.layer_sizes) < 2:
            raise ConfigError("an MLP needs at least input and output sizes")
        if any(int(s) <= 0 for s in self.layer_sizes):
            raise ConfigError(f"layer sizes must be positive, got {self.layer_sizes}")


@dataclass(frozen=True)
class GruSpec:
    input_size: int
    hidden_size: int = 64
    head_sizes: tuple[int, ...] = field(default=(256, 256, 256))
    n_actions: int = 21

    def __post_init__(self):
        sizes = (self.input_size, self.hidden_size, *self.head_sizes, self.n_actions)
        if any(int(s) <= 0 for s in sizes):
            raise ConfigError(f"layer sizes must be positive, got {sizes}")


def mlp_spec(n_inputs: int, n_actions: int = 21, hidden=(256, 256, 256)) -> MlpSpec:
    return MlpSpec((n_inputs, *hidden, n_actions))


def init_network(spec, seed: int) -> Network:
    """Build a network with scaled-uniform weights (bound sqrt(6/(fan_in+fan_out))) and zero biases.

    ``spec`` is an :class:`MlpSpec`, a :class:`GruSpec`, or a plain sequence of
    layer sizes (shorthand for an MLP).
    """
    if not isinstance(spec, (MlpSpec, GruSpec)):
        spec = MlpSpec(tuple(int(s) for s in spec))
    rng = np.random.default_rng(seed)
    if isinstance(spec, MlpSpec):
        return _init_mlp(spec.layer_sizes, rng)
    H, I = spec.hidden_size, spec.input_size
    gru_params = []
    for _ in range(3):
        gru_params += [_glorot(rng, H, I), _glorot(rng, H, H), np.zeros(H)]
    head = _init_mlp((H, *spec.head_sizes, spec.n_actions), rng)
    return RecurrentQNetwork(GruCell(gru_params), head)


def _init_mlp(sizes, rng) -> MlpNetwork:
    ws, bs = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        ws.append(_glorot(rng, fan_out, fan_in))
        bs.append(np.zeros(fan_out))
    return MlpNetwork(ws, bs)


def architecture_of(net: Network):
    if isinstance(net, MlpNetwork):
        return MlpSpec(tuple(net.sizes))
    return GruSpec(net.gru.input_size, net.gru.hidden_size, tuple(net.head.sizes[1:-1]), net.output_size)


# ---------------------------------------------------------------- free functions


def mlp_forward(net: MlpNetwork, x) -> np.ndarray:
    return net.forward(x)


def gru_forward(net: RecurrentQNetwork, window):
    """Q values and final hidden state for one window (or a batch of windows)."""
    return net.forward_hidden(window)


def backprop(net: Network, x, grad_out) -> GradientBundle:
    """Parameter gradients for the forward pass last recorded on ``x``."""
    return net.backward(x, grad_out)


def value_and_grad(net: Network, x, loss_grad: Callable):
    """Forward ``x``, let ``loss_grad(out)`` return (loss, dloss/dout), and backprop."""
    out = net.forward(x, record=True)
    loss, g = loss_grad(out)
    return loss, backprop(net, x, g)


def finite_diff_grad(net: Network, x, loss: Callable[[np.ndarray], float], h: float = 1e-5) -> GradientBundle:
    """Central differences (L(p+h) - L(p-h)) / 2h for every parameter element.

    ``loss`` maps the network output to a scalar.  Parameters are perturbed in
    place and restored exactly.
    """
    if h <= 0:
        raise ConfigError("finite-difference step must be positive")
    grads = []
    for p in net.params:
        g = np.zeros_like(p)
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + h
            up = float(loss(net.forward(x)))
            flat[i] = keep - h
            down = float(loss(net.forward(x)))
            flat[i] = keep
            gflat[i] = (up - down) / (2.0 * h)
        grads.append(g)
    return grads


def check_congruent(params, grads) -> None:
    if len(params) != len(grads) or any(p.shape != np.shape(g) for p, g in zip(params, grads)):
        raise ShapeError("gradient bundle is not congruent with the parameter list")


# ---------------------------------------------------------------- optimizer


@dataclass
class AdamState:
    lr: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    t: int = 0

    @classmethod
    def for_params(cls, params, **hyper) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params], **hyper)


def adam_step(params, grads, state: AdamState) -> None:
    """Bias-corrected Adam update, applied to ``params`` in place."""
    check_congruent(params, grads)
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    check_congruent(params, state.m)
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    step = state.lr / c1
    root_c2 = np.sqrt(c2)
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        # p -= lr * (m / c1) / (sqrt(v / c2) + eps)
        denom = np.sqrt(v)
        denom /= root_c2
        denom += state.eps
        np.divide(m, denom, out=denom)
        denom *= step
        p -= denom
