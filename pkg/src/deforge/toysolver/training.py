"""Deterministic first-order training of the toy network."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DivergenceError, ParameterError
from .model import ToyModel, loss_grad

DIVERGENCE_LOSS = 1e6


@dataclass
class TrainResult:
    model: ToyModel
    history: np.ndarray  # loss before each step, then the final loss

    @property
    def final_loss(self) -> float:
        return float(self.history[-1])


def train(model: ToyModel, batch, steps: int, lr: float, optimizer: str = "gd",
          betas=(0.9, 0.999), eps: float = 1e-8) -> TrainResult:
    """Fixed-step gradient descent on the L1 loss; ``optimizer="adam"`` for adaptive moments.

    Raises :class:`DivergenceError` (carrying the history so far) once the
    loss exceeds ``DIVERGENCE_LOSS`` or stops being finite.
    """
    if not lr > 0:
        raise ParameterError("step size must be positive")
    if optimizer not in ("gd", "adam"):
        raise ParameterError(f"unknown optimizer {optimizer!r}")
    w = model.vector()
    m = np.zeros_like(w)
    v = np.zeros_like(w)
    history = []
    current = model
    for step in range(int(steps) + 1):
        loss, g = loss_grad(current, batch)
        history.append(loss)
        if not np.isfinite(loss) or loss > DIVERGENCE_LOSS:
            err = DivergenceError(f"loss {loss:.3e} at step {step} exceeded the divergence guard")
            err.history = np.array(history)
            raise err
        if step == steps:
            break
        if optimizer == "gd":
            w = w - lr * g
        else:
            m = betas[0] * m + (1 - betas[0]) * g
            v = betas[1] * v + (1 - betas[1]) * g * g
            mh = m / (1 - betas[0] ** (step + 1))
            vh = v / (1 - betas[1] ** (step + 1))
            w = w - lr * mh / (np.sqrt(vh) + eps)
        current = model.with_vector(w)
    return TrainResult(current, np.array(history))
