"""Elastic wave equation source balancing in heterogeneous isotropic media."""

from __future__ import annotations

import numpy as np

from ..core import Field, boundary_trace
from ..errors import GridError, ParameterError
from ..spectral import fd_diff
from .ops import operators
from .specs import DataPair, WaveSpec


def _coef(v, grid):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim and v.shape != grid.points:
        raise ParameterError(f"coefficient shape {v.shape} does not match grid {grid.points}")
    return v


def _terms(u, spec: WaveSpec, grid, ops):
    rho, lam, mu = (_coef(v, grid) for v in (spec.rho, spec.lam, spec.mu_lame))
    d = grid.ndim
    acc = fd_diff(u, 1, grid.dt, 2)
    out = []
    for i in range(d):
        dil = ops.flux_diff(lam, u[i], i)
        for j in range(d):
            if j != i:
                dil = dil + ops.diff(lam * ops.diff(u[j], j), i)
        shear = np.zeros_like(u[i])
        for j in range(d):
            shear = shear + ops.flux_diff(mu, u[i], j)
            if j == i:
                shear = shear + ops.flux_diff(mu, u[i], i)
            else:
                shear = shear + ops.diff(mu * ops.diff(u[j], i), j)
        out.append({"inertia": rho * acc[i], "dilatation": -dil, "shear": -shear})
    return out


def balance_wave(u: Field, rho=1.0, lam=1.0, mu_lame=1.0) -> DataPair:
    """Body force for a prescribed displacement history ``u[d, n_t, ...]``.

    ``rho`` may also be a ready :class:`WaveSpec`. Coefficients are scalars
    or arrays over the spatial grid; array coefficients are kept in ``aux``.
    """
    spec = rho if isinstance(rho, WaveSpec) else WaveSpec(rho, lam, mu_lame)
    grid = u.grid
    if not grid.fully_periodic:
        raise GridError("wave balancing needs a periodic spatial grid")
    if grid.time_points < 3:
        raise ParameterError("wave balancing needs n_t >= 3")
    if u.components != grid.ndim:
        raise ParameterError(f"displacement needs {grid.ndim} components, got {u.components}")
    terms = _terms(u.data, spec, grid, operators(grid, cross=False))
    f = np.stack([sum(t.values()) for t in terms])
    vel0 = fd_diff(u.data, 1, grid.dt, 1)[:, 0]
    aux = {name: np.array(v) for name, v in
           (("rho", spec.rho), ("lam", spec.lam), ("mu_lame", spec.mu_lame)) if np.ndim(v)}
    uf = u.with_data(u.data, "displacement")
    return DataPair(spec=spec, u=uf, f=Field(grid, f, "source"),
                    u0=np.stack([u.data[:, 0], vel0]), g=boundary_trace(uf), aux=aux)


def equations(pair: DataPair, cross: bool = False):
    grid = pair.u.grid
    terms = _terms(pair.u.data, pair.spec, grid, operators(grid, cross))
    return [(f"momentum_{i}", t, pair.f.data[i]) for i, t in enumerate(terms)]
