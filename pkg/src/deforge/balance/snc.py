"""Steady Navier-Cauchy (static linear elasticity) source balancing in 2-d.

Derivatives are spectral, so the prescribed displacement must come on a
fully periodic grid. A non-periodic sample is obtained by passing
``window``: the pair then lives on the first ``window`` points of each
axis (treated as a vertex-centred, non-periodic sub-domain with boundary
traces), while the periodic parent is kept in ``aux["u_box"]`` so the
sources can be re-derived exactly.
"""

from __future__ import annotations

import numpy as np

from ..core import Field, Grid, boundary_trace
from ..errors import GridError, ParameterError
from .ops import operators
from .specs import DataPair, SNCSpec


def window_grid(box: Grid, window) -> Grid:
    h = box.spacing
    pts = tuple(int(w) for w in window)
    if len(pts) != box.ndim or any(not 3 <= w <= n for w, n in zip(pts, box.points)):
        raise GridError("window needs 3..n points per box dim")
    return Grid(pts, tuple((w - 1) * hj for w, hj in zip(pts, h)), (False,) * box.ndim)


def _restrict(a: np.ndarray, window) -> np.ndarray:
    idx = (Ellipsis,) + tuple(slice(0, int(w)) for w in window)
    return a[idx]


def _terms(u, ops, spec: SNCSpec):
    c = -spec.E / (1 - spec.mu ** 2)
    a, b = 0.5 * (1 - spec.mu), 0.5 * (1 + spec.mu)
    ux, uy = u[0], u[1]
    uxy = ops.diff(ops.diff(ux, 0), 1)
    vxy = ops.diff(ops.diff(uy, 0), 1)
    tx = {"d2ux_dx2": c * ops.diff(ux, 0, 2), "d2ux_dy2": c * a * ops.diff(ux, 1, 2),
          "d2uy_dxdy": c * b * vxy}
    ty = {"d2uy_dy2": c * ops.diff(uy, 1, 2), "d2uy_dx2": c * a * ops.diff(uy, 0, 2),
          "d2ux_dxdy": c * b * uxy}
    return tx, ty


def balance_snc(u: Field, E: float | SNCSpec, mu: float | None = None, window=None) -> DataPair:
    """Body force ``(f_x, f_y)`` for a prescribed displacement ``u = (u_x, u_y)``."""
    spec = E if isinstance(E, SNCSpec) else SNCSpec(float(E), float(mu))
    grid = u.grid
    if grid.ndim != 2 or grid.has_time:
        raise GridError("Navier-Cauchy balancing needs a static 2-d grid")
    if not grid.fully_periodic:
        raise GridError("prescribed displacement must be sampled on a periodic box; use window=")
    if u.components != 2:
        raise ParameterError("displacement needs two components")
    tx, ty = _terms(u.data, operators(grid, cross=False), spec)
    f = np.stack([sum(tx.values()), sum(ty.values())])
    if window is None:
        uf = u.with_data(u.data, "displacement")
        return DataPair(spec=spec, u=uf, f=Field(grid, f, "source"), u0=None, g=boundary_trace(uf))
    wgrid = window_grid(grid, window)
    uw = Field(wgrid, _restrict(u.data, window), "displacement")
    return DataPair(
        spec=spec, u=uw, f=Field(wgrid, _restrict(f, window), "source"), u0=None,
        g=boundary_trace(uw), aux={"u_box": np.array(u.data)}, aux_grids={"u_box": grid},
    )


def equations(pair: DataPair, cross: bool = False):
    spec, f = pair.spec, pair.f.data
    eqs = []
    if cross or "u_box" not in pair.aux:
        u, grid = pair.u.data, pair.u.grid
        if not cross and not grid.fully_periodic:
            raise GridError("non-periodic Navier-Cauchy pair lacks its periodic parent")
        tx, ty = _terms(u, operators(grid, cross), spec)
    else:
        box = pair.aux_grids["u_box"]
        window = pair.u.grid.points
        tx, ty = _terms(pair.aux["u_box"], operators(box, False), spec)
        tx = {k: _restrict(v, window) for k, v in tx.items()}
        ty = {k: _restrict(v, window) for k, v in ty.items()}
        eqs.append(("window", {"u": pair.u.data}, _restrict(pair.aux["u_box"], window)))
    eqs.append(("force_x", tx, f[0]))
    eqs.append(("force_y", ty, f[1]))
    return eqs
