"""Toy operator network, Gauss-Newton conditioning and the dilation study."""

from __future__ import annotations

from .condnum import (GNResult, condnum_from_jacobian, gauge_fixed_columns, gauss_newton_condnum,
                      lipschitz_estimate, max_grad_magnitude)
from .model import ToyModel, forward, init_model, jacobian, l1_loss, loss_grad
from .study import CondnumReport, StudyConfig, condnum_study
from .training import TrainResult, train

__all__ = [
    "GNResult", "condnum_from_jacobian", "gauge_fixed_columns", "gauss_newton_condnum", "lipschitz_estimate", "max_grad_magnitude", "ToyModel",
    "forward", "init_model", "jacobian", "l1_loss", "loss_grad", "CondnumReport", "StudyConfig",
    "condnum_study", "TrainResult", "train",
]
