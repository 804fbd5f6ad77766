"""Incompressible Navier-Stokes source balancing on periodic domains."""

from __future__ import annotations

import numpy as np

from ..core import Field, boundary_trace
from ..errors import GridError, ParameterError
from ..spectral import _k_squared, dealias, fd_diff, wavenumbers
from .ops import operators
from .specs import DataPair, NSSpec

DIV_TOL = 1e-12  # relative divergence above which the input is projected


def _advection(u, ops, spec: NSSpec, grid):
    d = grid.ndim
    out = np.zeros_like(u)
    for i in range(d):
        for j in range(d):
            out[i] += u[j] * ops.diff(u[i], j)
    if spec.dealias:
        out = dealias(out, grid)
    return out


def _divergence(u, ops):
    return [ops.diff(u[j], j) for j in range(u.shape[0])]


def project(u: np.ndarray, grid) -> np.ndarray:
    """Helmholtz projection of ``u[d, ..., n_1..n_d]`` onto its divergence-free part."""
    d = grid.ndim
    axes = tuple(range(u.ndim - d, u.ndim))
    c = np.fft.fftn(u, axes=axes)
    ks = np.meshgrid(*[wavenumbers(grid, j) for j in range(d)], indexing="ij")
    k2 = _k_squared(grid)
    kdotc = sum(ks[j] * c[j] for j in range(d))
    inv = np.where(k2 > 0, 1.0 / np.where(k2 > 0, k2, 1.0), 0.0)
    for j in range(d):
        c[j] = c[j] - ks[j] * kdotc * inv
    return np.fft.ifftn(c, axes=axes).real


def pressure(u, ops, spec, grid):
    """Solve ``lap p = -d_i (u_j d_j u_i)`` slice by slice."""
    adv = _advection(u, ops, spec, grid)
    rhs = -sum(ops.diff(adv[i], i) for i in range(grid.ndim))
    return ops.poisson(rhs), adv


def balance_ns(u: Field, Re: float | NSSpec, dealias_products: bool = False) -> DataPair:
    """Source ``f`` making the prescribed velocity an exact Navier-Stokes solution.

    Spatial terms are spectral, the time derivative is the second-order
    finite difference. A non-solenoidal ``u`` is projected first and the
    size of the correction is kept in ``meta["projection_norm"]``.
    """
    spec = Re if isinstance(Re, NSSpec) else NSSpec(float(Re), dealias_products)
    grid = u.grid
    if not grid.fully_periodic:
        raise GridError("Navier-Stokes balancing needs a fully periodic spatial grid")
    if grid.time_points < 3:
        raise ParameterError("Navier-Stokes balancing needs n_t >= 3")
    if u.components != grid.ndim:
        raise ParameterError(f"velocity needs {grid.ndim} components, got {u.components}")
    ops = operators(grid, cross=False)
    data = np.array(u.data)
    div = sum(_divergence(data, ops))
    scale = max(np.abs(ops.diff(data[j], j)).max() for j in range(grid.ndim))
    proj_norm = 0.0
    if np.abs(div).max() > DIV_TOL * max(scale, 1e-300):
        projected = project(data, grid)
        proj_norm = float(np.abs(projected - data).max())
        data = projected
    p, adv = pressure(data, ops, spec, grid)
    nu = 1.0 / spec.Re
    f = np.empty_like(data)
    for i in range(grid.ndim):
        du_dt = fd_diff(data[i], 0, grid.dt, 1)
        f[i] = du_dt + adv[i] + ops.diff(p, i) - nu * sum(ops.diff(data[i], j, 2) for j in range(grid.ndim))
    uf = Field(grid, data, "velocity")
    return DataPair(
        spec=spec, u=uf, f=Field(grid, f, "source"), u0=data[:, 0].copy(),
        g=boundary_trace(uf), aux={"p": p[None]}, meta={"projection_norm": proj_norm},
    )


def equations(pair: DataPair, cross: bool = False):
    spec, grid = pair.spec, pair.u.grid
    ops = operators(grid, cross)
    u, f = pair.u.data, pair.f.data
    nu = 1.0 / spec.Re
    if cross:
        p, adv = pressure(u, ops, spec, grid)
    else:
        p, adv = pair.aux["p"][0], _advection(u, ops, spec, grid)
    eqs = []
    for i in range(grid.ndim):
        terms = {
            "du_dt": fd_diff(u[i], 0, grid.dt, 1),
            "advection": adv[i],
            "pressure_gradient": ops.diff(p, i),
            "viscous": -nu * sum(ops.diff(u[i], j, 2) for j in range(grid.ndim)),
        }
        eqs.append((f"momentum_{i}", terms, f[i]))
    div = _divergence(u, ops)
    eqs.append(("continuity", {f"du{j}_dx{j}": div[j] for j in range(grid.ndim)}, np.zeros_like(div[0])))
    return eqs
