"""Equation parameter sets, data pairs and residual reports."""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from ..core import BoundaryData, Field, Grid, TimeSeries
from ..errors import ParameterError

SAME_OP_TOL = 1e-10
CROSS_OP_TOL = 1e-3
EPS = 1e-30  # guard in the relative residual denominator


def _pd(name, a) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    if a.shape[0] != a.shape[1]:
        raise ParameterError(f"{name} must be square")
    if not np.allclose(a, a.T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise ParameterError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(a).min() < -1e-12 * max(1.0, np.abs(a).max()):
        raise ParameterError(f"{name} must be positive semidefinite")
    return a


class EquationSpec:
    """Base for the per-family parameter records."""

    family = ""

    def to_dict(self) -> dict:
        out = {"family": self.family}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, np.ndarray):
                v = v.tolist() if v.ndim <= 2 and v.size <= 64 else "field"
            out[f.name] = v
        return out


@dataclass(frozen=True)
class NSSpec(EquationSpec):
    Re: float
    dealias: bool = False
    family = "ns"

    def __post_init__(self):
        if not self.Re > 0:
            raise ParameterError("Re must be positive")


@dataclass(frozen=True)
class SNCSpec(EquationSpec):
    E: float
    mu: float
    family = "snc"

    def __post_init__(self):
        if not self.E > 0:
            raise ParameterError("Young's modulus E must be positive")
        if not 0 < self.mu < 0.5:
            raise ParameterError("Poisson ratio must lie in (0, 0.5)")


@dataclass(frozen=True)
class WaveSpec(EquationSpec):
    """Isotropic elastic medium; each coefficient a scalar or a spatial array."""

    rho: object = 1.0
    lam: object = 1.0
    mu_lame: object = 1.0
    family = "wave"

    def __post_init__(self):
        for name in ("rho", "lam", "mu_lame"):
            v = getattr(self, name)
            if isinstance(v, np.ndarray) or np.ndim(v) > 0:
                v = np.array(v, dtype=np.float64)
                v.setflags(write=False)
            else:
                v = float(v)
            object.__setattr__(self, name, v)
        if np.min(self.rho) <= 0:
            raise ParameterError("density must be positive everywhere")
        if np.min(self.mu_lame) < 0:
            raise ParameterError("shear modulus must be >= 0")

    @classmethod
    def from_shear_speed(cls, rho, c_s, lam=0.0) -> "WaveSpec":
        return cls(rho, lam, np.asarray(rho) * np.asarray(c_s) ** 2)


@dataclass(frozen=True)
class BoucWenSpec(EquationSpec):
    """Multi-DOF Bouc-Wen system.

    ``topology="chain"`` attaches one hysteretic spring per storey of a
    shear building (drift ``u_i - u_{i-1}``); ``"diagonal"`` gives each DOF
    its own spring to ground.
    """

    M: np.ndarray
    C: np.ndarray
    k: np.ndarray
    alpha: float = 0.1
    A: float = 1.0
    beta: float = 0.5
    gamma: float = 0.5
    n: float = 1.0
    topology: str = "chain"
    family = "boucwen"

    def __post_init__(self):
        M = _pd("M", self.M)
        C = _pd("C", self.C)
        k = np.atleast_1d(np.asarray(self.k, dtype=np.float64))
        if C.shape != M.shape or k.shape != (M.shape[0],):
            raise ParameterError("M, C and k must agree in the number of DOFs")
        if abs(np.linalg.det(M)) < 1e-300 or np.linalg.cond(M) > 1e12:
            raise ParameterError("mass matrix must be invertible")
        if np.any(k <= 0):
            raise ParameterError("elastic stiffness k_i must be positive")
        if not 0 <= self.alpha <= 1:
            raise ParameterError("alpha must lie in [0, 1]")
        if not self.beta > 0:
            raise ParameterError("beta must be positive")
        if not self.n >= 1:
            raise ParameterError("n must be >= 1")
        if self.topology not in ("chain", "diagonal"):
            raise ParameterError("topology must be 'chain' or 'diagonal'")
        for name, v in (("M", M), ("C", C), ("k", k)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def n_dof(self) -> int:
        return self.k.size

    @property
    def drift_matrix(self) -> np.ndarray:
        """``B`` with ``drift = B u``; restoring force is ``B^T F``."""
        n = self.n_dof
        B = np.eye(n)
        if self.topology == "chain":
            B -= np.eye(n, k=-1)
        return B


@dataclass(frozen=True)
class LorenzSpec(EquationSpec):
    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0
    x_floor: float = 0.5
    family = "lorenz"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ParameterError("sigma must be positive")
        if not self.beta > 0:
            raise ParameterError("beta must be positive")
        if not self.x_floor >= 0:
            raise ParameterError("x_floor must be >= 0")


SPECS = {cls.family: cls for cls in (NSSpec, SNCSpec, WaveSpec, BoucWenSpec, LorenzSpec)}


def spec_from_dict(d: dict, aux: dict | None = None) -> EquationSpec:
    d = dict(d)
    family = d.pop("family")
    if family not in SPECS:
        raise ParameterError(f"unknown equation family {family!r}")
    for k, v in list(d.items()):
        if v == "field":
            d[k] = np.asarray(aux[k])
    return SPECS[family](**d)


@dataclass(frozen=True)
class DataPair:
    """One manufactured ``(u0, g, f) -> u`` training pair.

    ``aux`` holds extra arrays (pressure, hysteretic variable, coefficient
    fields, a periodic parent field). ``aux_grids`` names the grid of any
    aux entry that does not live on ``u``'s grid. ``meta`` carries scalar
    diagnostics.
    """

    spec: EquationSpec
    u: Field | TimeSeries
    f: Field | TimeSeries
    u0: np.ndarray | None = None
    g: BoundaryData = field(default_factory=BoundaryData)
    aux: dict = field(default_factory=dict)
    aux_grids: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    seed: int | None = None
    dilation: int | None = None
    generator_version: str = ""

    @property
    def family(self) -> str:
        return self.spec.family

    @property
    def grid(self) -> Grid | None:
        return getattr(self.u, "grid", None)


@dataclass(frozen=True)
class ResidualReport:
    """Relative residuals of a pair's governing equations.

    ``max_rel`` uses the operators the balancer used; ``cross_max_rel`` uses
    independent second-order stencils. Both are ``linf(LHS - RHS) /
    (linf of the largest term + EPS)``, maximised over the equations.
    """

    family: str
    terms: dict
    max_rel: float
    cross_max_rel: float
    location: tuple
    equation: str
    tolerance: float = SAME_OP_TOL
    cross_tolerance: float = CROSS_OP_TOL
    cross_terms: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.max_rel < self.tolerance and self.cross_max_rel < self.cross_tolerance

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "same_op_max_rel": self.max_rel,
            "cross_op_max_rel": self.cross_max_rel,
            "equation": self.equation,
            "location": list(self.location),
            "tolerance": self.tolerance,
            "cross_tolerance": self.cross_tolerance,
            "terms": dict(self.terms),
        }
