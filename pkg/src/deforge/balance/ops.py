"""Derivative operators over the trailing spatial axes of an array.

Balancers work on raw arrays whose last ``d`` axes are the spatial grid.
:class:`SpectralOps` is the operator set used to build sources;
:class:`StencilOps` is the independent second-order finite-difference set
used to cross-check them.
"""

from __future__ import annotations

import numpy as np

from ..core import Grid
from ..spectral import _k_squared, fd_diff, mode_numbers, poisson_periodic, spectral_diff


class SpectralOps:
    name = "spectral"

    def __init__(self, grid: Grid):
        self.grid = grid
        self.d = grid.ndim

    def _ax(self, a, j):
        return a.ndim - self.d + j

    def diff(self, a, j, order=1):
        return spectral_diff(a, self._ax(a, j), self.grid.extents[j], order)

    def flux_diff(self, coef, a, j):
        """``d/dx_j (coef * d a/dx_j)`` with the coefficient inside."""
        return self.diff(coef * self.diff(a, j), j)

    def k_squared(self):
        return _k_squared(self.grid)

    def poisson(self, rhs):
        return poisson_periodic(rhs, self.grid, self.k_squared())


class StencilOps:
    """Second-order stencils; periodic wrap or one-sided ends per grid dim.

    ``diff`` is the central difference; ``diff(.., order=2)`` the compact
    three-point stencil; ``flux_diff`` the conservative compact form with
    arithmetic-mean face coefficients.
    """

    name = "stencil"

    def __init__(self, grid: Grid):
        self.grid = grid
        self.d = grid.ndim

    def _ax(self, a, j):
        return a.ndim - self.d + j

    def diff(self, a, j, order=1):
        return fd_diff(a, self._ax(a, j), self.grid.spacing[j], order, self.grid.periodic[j])

    def flux_diff(self, coef, a, j):
        ax, h = self._ax(a, j), self.grid.spacing[j]
        coef = np.broadcast_to(coef, a.shape)
        if not self.grid.periodic[j]:
            # ends fall back to the product-rule form with one-sided stencils
            out = fd_diff(coef * fd_diff(a, ax, h, 1), ax, h, 1)
            inner = self._flux_inner(coef, a, ax, h)
            idx = [slice(None)] * a.ndim
            idx[ax] = slice(1, -1)
            out[tuple(idx)] = inner
            return out
        c_up = 0.5 * (coef + np.roll(coef, -1, axis=ax))
        c_dn = 0.5 * (coef + np.roll(coef, 1, axis=ax))
        a_up, a_dn = np.roll(a, -1, axis=ax), np.roll(a, 1, axis=ax)
        return (c_up * (a_up - a) - c_dn * (a - a_dn)) / (h * h)

    @staticmethod
    def _flux_inner(coef, a, ax, h):
        c = np.moveaxis(coef, ax, 0)
        v = np.moveaxis(a, ax, 0)
        c_up = 0.5 * (c[1:-1] + c[2:])
        c_dn = 0.5 * (c[1:-1] + c[:-2])
        out = (c_up * (v[2:] - v[1:-1]) - c_dn * (v[1:-1] - v[:-2])) / (h * h)
        return np.moveaxis(out, 0, ax)

    def k_squared(self):
        """Symbol of the wide Laplacian ``sum_j D_j D_j`` built from central differences."""
        g = self.grid
        parts = []
        for j in range(g.ndim):
            n, h = g.points[j], g.spacing[j]
            m = mode_numbers(n)
            s = np.where(2 * np.abs(m) == n, 0.0, np.sin(2 * np.pi * m / n)) / h
            parts.append(s)
        mesh = np.meshgrid(*parts, indexing="ij")
        return sum(s * s for s in mesh)

    def poisson(self, rhs):
        return poisson_periodic(rhs, self.grid, self.k_squared())


def operators(grid: Grid, cross: bool):
    return StencilOps(grid) if cross else SpectralOps(grid)
