"""Manufactured-solution balancing for the supported equation families."""

from __future__ import annotations

from .boucwen import balance_boucwen
from .lorenz import balance_lorenz
from .ns import balance_ns
from .residual import residual
from .snc import balance_snc
from .specs import (CROSS_OP_TOL, SAME_OP_TOL, BoucWenSpec, DataPair, EquationSpec, LorenzSpec,
                    NSSpec, ResidualReport, SNCSpec, WaveSpec, spec_from_dict)
from .wave import balance_wave

__all__ = [
    "balance_boucwen", "balance_lorenz", "balance_ns", "balance_snc", "balance_wave", "residual",
    "BoucWenSpec", "DataPair", "EquationSpec", "LorenzSpec", "NSSpec", "ResidualReport", "SNCSpec",
    "WaveSpec", "spec_from_dict", "SAME_OP_TOL", "CROSS_OP_TOL",
]
