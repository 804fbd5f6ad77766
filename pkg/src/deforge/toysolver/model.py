"""Encoder / attention processor / decoder network on flattened space-time tokens."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError
from .layers import Attention, Dense, FeedForward

MAX_TOKENS = 4096


@dataclass
class ToyModel:
    """Composite ``decoder o processor o encoder`` acting token-wise.

    ``layers`` is an ordered list of ``(name, layer)``; ``params`` maps each
    layer name to its parameter arrays. The flat parameter vector follows
    layer order, then the layer's declared parameter order.
    """

    c_in: int
    h: int
    d_out: int
    layers: list
    params: dict = field(default_factory=dict)

    @property
    def index(self) -> list[tuple[str, str]]:
        return [(ln, pn) for ln, layer in self.layers for pn in layer.shapes]

    @property
    def n_params(self) -> int:
        return sum(int(np.prod(self.params[ln][pn].shape)) for ln, pn in self.index)

    def vector(self) -> np.ndarray:
        return np.concatenate([self.params[ln][pn].ravel() for ln, pn in self.index])

    def with_vector(self, w: np.ndarray) -> "ToyModel":
        w = np.asarray(w, dtype=np.float64)
        if w.size != self.n_params:
            raise ParameterError(f"expected {self.n_params} parameters, got {w.size}")
        params, i = {}, 0
        for ln, layer in self.layers:
            params[ln] = {}
            for pn, shape in layer.shapes.items():
                n = int(np.prod(shape))
                params[ln][pn] = w[i:i + n].reshape(shape).copy()
                i += n
        return ToyModel(self.c_in, self.h, self.d_out, self.layers, params)

    def copy(self) -> "ToyModel":
        return ToyModel(self.c_in, self.h, self.d_out, self.layers, copy.deepcopy(self.params))

    def slices(self) -> dict:
        """Flat-vector slice of every ``(layer, param)``."""
        out, i = {}, 0
        for ln, pn in self.index:
            n = self.params[ln][pn].size
            out[(ln, pn)] = slice(i, i + n)
            i += n
        return out


def init_model(c_in: int, h: int, d_out: int = 1, n_encoder: int = 2, n_blocks: int = 1,
               seed: int = 0, zero_decoder: bool = False, gain: float = 1.0) -> ToyModel:
    """Weights ``N(0, gain^2/fan_in)``, zero biases; deterministic in ``seed``."""
    if not 0 <= n_encoder <= 2:
        raise ParameterError("encoder has 0 to 2 pointwise layers")
    if n_encoder == 0 and c_in != h:
        raise ParameterError("without encoder layers the latent width must equal c_in")
    layers = []
    width = c_in
    for i in range(n_encoder):
        layers.append((f"enc{i}", Dense(width, h, "tanh")))
        width = h
    for b in range(n_blocks):
        layers.append((f"attn{b}", Attention(h)))
        layers.append((f"ffn{b}", FeedForward(h)))
    layers.append(("dec", Dense(h, d_out, None)))
    rng = np.random.default_rng(seed)
    params = {}
    for ln, layer in layers:
        params[ln] = {}
        for pn, shape in layer.shapes.items():
            if len(shape) == 1 or (zero_decoder and ln == "dec"):
                params[ln][pn] = np.zeros(shape)
            else:
                params[ln][pn] = gain * rng.standard_normal(shape) / np.sqrt(shape[0])
    return ToyModel(c_in, h, d_out, layers, params)


def _tokens(model: ToyModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3 or X.shape[-1] != model.c_in:
        raise ValueError(f"tokens must be [S, T, {model.c_in}], got {X.shape}")
    if X.shape[1] > MAX_TOKENS:
        raise ValueError(f"{X.shape[1]} tokens exceed the {MAX_TOKENS}-token layout")
    return X


def forward_cached(model: ToyModel, X):
    H = _tokens(model, X)
    caches = []
    for ln, layer in model.layers:
        H, c = layer.forward(model.params[ln], H)
        caches.append(c)
    return H, caches


def forward(model: ToyModel, X) -> np.ndarray:
    """Per-token predictions ``[S, T, d_out]``."""
    return forward_cached(model, X)[0]


def vjp(model: ToyModel, caches, G: np.ndarray) -> np.ndarray:
    """Flat parameter gradients ``[R, P]`` for stacked output cotangents ``G[R, S, T, d_out]``."""
    grads = {}
    for (ln, layer), c in zip(reversed(model.layers), reversed(caches)):
        G, g = layer.backward(model.params[ln], c, G)
        grads[ln] = g
    R = G.shape[0]
    return np.concatenate([grads[ln][pn].reshape(R, -1) for ln, pn in model.index], axis=1)


def l1_loss(pred, target) -> float:
    """Mean absolute error."""
    pred, target = np.asarray(pred), np.asarray(target)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    return float(np.mean(np.abs(pred - target)))


def loss_grad(model: ToyModel, batch) -> tuple[float, np.ndarray]:
    """L1 loss and its gradient; the subgradient at exact ties is 0."""
    X, Y = batch
    pred, caches = forward_cached(model, X)
    Y = np.asarray(Y, dtype=np.float64).reshape(pred.shape)
    r = pred - Y
    G = np.sign(r) / r.size
    return float(np.mean(np.abs(r))), vjp(model, caches, G[None])[0]


def jacobian(model: ToyModel, X, chunk: int = 16) -> np.ndarray:
    """``d vec(pred) / d w`` with one row per output entry, built from unit cotangents."""
    pred, caches = forward_cached(model, X)
    n = pred.size
    J = np.empty((n, model.n_params))
    for start in range(0, n, chunk):
        rows = np.arange(start, min(start + chunk, n))
        G = np.zeros((rows.size, n))
        G[np.arange(rows.size), rows] = 1.0
        J[rows] = vjp(model, caches, G.reshape((rows.size,) + pred.shape))
    return J
