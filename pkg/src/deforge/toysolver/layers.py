"""Layers of the toy operator network with hand-written reverse passes.

Activations have shape ``[S, T, c]`` (samples, tokens, channels). Reverse
passes accept a stack of cotangents ``[R, S, T, c]`` and return parameter
gradients with a leading ``R`` axis, so a Jacobian can be built from many
unit cotangents in one sweep.
"""

from __future__ import annotations

import numpy as np


def _sum_samples(a: np.ndarray) -> np.ndarray:
    """Sum ``[R, S, ...]`` over the sample axis."""
    return a.sum(axis=1)


def softmax(s: np.ndarray) -> np.ndarray:
    s = s - s.max(axis=-1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=-1, keepdims=True)


class Dense:
    """Pointwise affine map, optionally followed by ``tanh``."""

    kind = "dense"

    def __init__(self, n_in: int, n_out: int, act: str | None = "tanh"):
        self.shapes = {"W": (n_in, n_out), "b": (n_out,)}
        self.act = act

    def forward(self, p, H):
        Y = H @ p["W"] + p["b"]
        if self.act == "tanh":
            Y = np.tanh(Y)
        return Y, (H, Y)

    def backward(self, p, cache, G):
        H, Y = cache
        dZ = G * (1 - Y * Y) if self.act == "tanh" else G
        grads = {"W": _sum_samples(H.swapaxes(-1, -2) @ dZ), "b": dZ.sum(axis=(1, 2))}
        return dZ @ p["W"].T, grads

    def operator_norm(self, p) -> float:
        return float(np.linalg.norm(p["W"], 2))


class Attention:
    """Single-head self-attention with a residual connection.

    ``H + softmax(Q K^T / sqrt(h)) V Wo + bo`` with ``Q, K, V = H Wq, H Wk, H Wv``.
    """

    kind = "attention"

    def __init__(self, h: int):
        self.h = h
        self.shapes = {"Wq": (h, h), "Wk": (h, h), "Wv": (h, h), "Wo": (h, h), "bo": (h,)}

    def weights(self, p, H):
        Q, K = H @ p["Wq"], H @ p["Wk"]
        return softmax(Q @ K.swapaxes(-1, -2) / np.sqrt(self.h)), Q, K

    def forward(self, p, H):
        A, Q, K = self.weights(p, H)
        V = H @ p["Wv"]
        C = A @ V
        return H + C @ p["Wo"] + p["bo"], (H, Q, K, V, A, C)

    def backward(self, p, cache, G):
        H, Q, K, V, A, C = cache
        scale = 1.0 / np.sqrt(self.h)
        Ht = H.swapaxes(-1, -2)
        dC = G @ p["Wo"].T
        dA = dC @ V.swapaxes(-1, -2)
        dS = A * (dA - np.sum(dA * A, axis=-1, keepdims=True))
        dQ = dS @ K * scale
        dK = dS.swapaxes(-1, -2) @ Q * scale
        dV = A.swapaxes(-1, -2) @ dC
        grads = {
            "Wq": _sum_samples(Ht @ dQ),
            "Wk": _sum_samples(Ht @ dK),
            "Wv": _sum_samples(Ht @ dV),
            "Wo": _sum_samples(C.swapaxes(-1, -2) @ G),
            "bo": G.sum(axis=(1, 2)),
        }
        dH = G + dQ @ p["Wq"].T + dK @ p["Wk"].T + dV @ p["Wv"].T
        return dH, grads

    def operator_norm(self, p) -> float:
        # residual branch bound with the softmax rows treated as averaging
        return 1.0 + float(np.linalg.norm(p["Wv"], 2) * np.linalg.norm(p["Wo"], 2))


class FeedForward:
    """Pointwise residual ``H + tanh(H Wf + bf)``."""

    kind = "feedforward"

    def __init__(self, h: int):
        self.shapes = {"Wf": (h, h), "bf": (h,)}

    def forward(self, p, H):
        Y = np.tanh(H @ p["Wf"] + p["bf"])
        return H + Y, (H, Y)

    def backward(self, p, cache, G):
        H, Y = cache
        dZ = G * (1 - Y * Y)
        grads = {"Wf": _sum_samples(H.swapaxes(-1, -2) @ dZ), "bf": dZ.sum(axis=(1, 2))}
        return G + dZ @ p["Wf"].T, grads

    def operator_norm(self, p) -> float:
        return 1.0 + float(np.linalg.norm(p["Wf"], 2))
