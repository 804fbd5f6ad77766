"""Discrete Fourier transforms, derivatives, periodic Poisson solves and spectra.

Normalisation: the forward transform carries ``1/prod(n_j)`` and the inverse
is an unscaled sum, so a coefficient equals the Fourier-series coefficient of
the sampled function (``cos(k x)`` has ``1/2`` at ``+-k``). Wavenumbers are
physical angular wavenumbers ``2 pi m / L`` with ``m`` in standard DFT order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dim, Field, Grid
from .errors import GridError, SolvabilityError


@dataclass(frozen=True)
class Spectrum:
    """Fourier coefficients of a field over the transformed dims."""

    grid: Grid
    coeffs: np.ndarray
    dims: tuple
    quantity: str = "state"
    real: bool = True

    @property
    def components(self) -> int:
        return self.coeffs.shape[0]


@dataclass(frozen=True)
class RadialSpectrum:
    """Shell-binned energy: ``energy[m] * dk`` is the energy in shell ``m``."""

    k: np.ndarray
    energy: np.ndarray
    dk: float

    @property
    def total(self) -> float:
        return float(np.sum(self.energy) * self.dk)


def mode_numbers(n: int) -> np.ndarray:
    """Signed integer mode index per DFT bin, e.g. ``[0, 1, -2, -1]`` for n=4."""
    return np.rint(np.fft.fftfreq(n) * n).astype(np.int64)


def wavenumbers(grid: Grid, dim: Dim) -> np.ndarray:
    n = grid.time_points if dim == "t" else grid.points[int(dim)]
    return 2 * np.pi * mode_numbers(n) / grid.length(dim)


def _shape_for(k: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = k.size
    return k.reshape(shape)


def _resolve_dims(grid: Grid, dims) -> tuple:
    if dims is None:
        dims = tuple(range(grid.ndim))
    dims = tuple(dims)
    for dim in dims:
        if not grid.is_periodic(dim):
            raise GridError(f"dim {dim!r} is not periodic; cannot transform")
    return dims


def dft_forward(u: Field, dims=None) -> Spectrum:
    """Forward DFT over ``dims`` (default: all spatial dims)."""
    dims = _resolve_dims(u.grid, dims)
    axes = tuple(u.axis(d) for d in dims)
    coeffs = np.fft.fftn(u.data, axes=axes, norm="forward")
    return Spectrum(u.grid, coeffs, dims, u.quantity, real=True)


def dft_inverse(s: Spectrum, imag_tol: float = 1e-12) -> Field:
    """Inverse of :func:`dft_forward`; real-originated spectra must invert to real data."""
    axes = tuple(s.grid.axis(d) for d in s.dims)
    data = np.fft.ifftn(s.coeffs, axes=axes, norm="forward")
    if s.real:
        scale = np.max(np.abs(data.real)) if data.size else 0.0
        resid = np.max(np.abs(data.imag)) if data.size else 0.0
        if resid > imag_tol * max(scale, 1e-300) and resid > 1e-300:
            raise ValueError(f"inverse transform not real: imaginary residue {resid:.3e}")
        data = data.real
    return Field(s.grid, data, s.quantity)


# Array-level kernels. ``axis`` indexes the raw array; ``length`` is the period.

def spectral_diff(a: np.ndarray, axis: int, length: float, order: int = 1) -> np.ndarray:
    """Exact derivative of the trigonometric interpolant along one periodic axis."""
    n = a.shape[axis]
    c = np.fft.rfft(a, axis=axis)
    k = 2 * np.pi * np.arange(c.shape[axis]) / length
    factor = (1j * k) ** order
    if order % 2 == 1 and n % 2 == 0:
        factor[-1] = 0.0  # Nyquist mode has no real odd derivative
    c = c * _shape_for(factor, axis, a.ndim)
    return np.fft.irfft(c, n=n, axis=axis)


def fd_diff(a: np.ndarray, axis: int, h: float, order: int = 1, periodic: bool = False) -> np.ndarray:
    """Second-order finite differences along one axis.

    Central stencils inside; on non-periodic axes the end points use
    one-sided second-order stencils (4 points for the second derivative
    when available).
    """
    a = np.asarray(a, dtype=np.float64)
    n = a.shape[axis]
    if n < 3:
        raise GridError(f"finite differences need >= 3 points along axis, got {n}")
    if order not in (1, 2):
        raise ValueError("fd order must be 1 or 2")
    if periodic:
        up, dn = np.roll(a, -1, axis=axis), np.roll(a, 1, axis=axis)
        if order == 1:
            return (up - dn) / (2 * h)
        return (up - 2 * a + dn) / (h * h)
    if order == 1:
        return np.gradient(a, h, axis=axis, edge_order=2)
    a = np.moveaxis(a, axis, 0)
    out = np.empty_like(a)
    out[1:-1] = (a[2:] - 2 * a[1:-1] + a[:-2]) / (h * h)
    if n >= 4:
        out[0] = (2 * a[0] - 5 * a[1] + 4 * a[2] - a[3]) / (h * h)
        out[-1] = (2 * a[-1] - 5 * a[-2] + 4 * a[-3] - a[-4]) / (h * h)
    else:
        out[0] = out[-1] = (a[0] - 2 * a[1] + a[2]) / (h * h)
    return np.moveaxis(out, 0, axis)


def spectral_derivative(u: Field, dim: Dim, order: int = 1) -> Field:
    """Derivative along a periodic dim, exact for band-limited fields."""
    if order not in (1, 2):
        raise ValueError("spectral derivative order must be 1 or 2")
    if not u.grid.is_periodic(dim):
        raise GridError(f"dim {dim!r} is not periodic; use fd_derivative")
    return u.with_data(spectral_diff(u.data, u.axis(dim), u.grid.length(dim), order))


def fd_derivative(u: Field, dim: Dim, order: int = 1, periodic: bool | None = None) -> Field:
    """Finite-difference derivative; periodic wrap follows the grid unless overridden."""
    if periodic is None:
        periodic = u.grid.is_periodic(dim)
    return u.with_data(fd_diff(u.data, u.axis(dim), u.grid.step(dim), order, periodic))


def laplacian(u: Field) -> Field:
    out = np.zeros_like(u.data)
    for j in range(u.grid.ndim):
        out += spectral_diff(u.data, u.axis(j), u.grid.extents[j], 2)
    return u.with_data(out)


def _k_squared(grid: Grid) -> np.ndarray:
    ks = np.meshgrid(*[wavenumbers(grid, j) for j in range(grid.ndim)], indexing="ij")
    return sum(k * k for k in ks)


def poisson_periodic(rhs: np.ndarray, grid: Grid, k2: np.ndarray | None = None) -> np.ndarray:
    """Zero-mean solution of ``lap p = rhs`` over the trailing spatial axes of ``rhs``."""
    d = grid.ndim
    axes = tuple(range(rhs.ndim - d, rhs.ndim))
    flat = rhs.reshape((-1,) + rhs.shape[rhs.ndim - d:])
    means = flat.reshape(flat.shape[0], -1).mean(axis=1)
    scale = np.max(np.abs(rhs)) if rhs.size else 0.0
    if np.any(np.abs(means) > 1e-10 * scale):
        raise SolvabilityError(
            f"periodic Poisson rhs has nonzero mean (max |mean| {np.max(np.abs(means)):.3e})")
    if k2 is None:
        k2 = _k_squared(grid)
    c = np.fft.fftn(rhs, axes=axes)
    inv = np.zeros_like(k2)
    nz = k2 > 1e-12 * np.max(k2)  # discrete symbols can vanish only to round-off
    inv[nz] = -1.0 / k2[nz]
    return np.fft.ifftn(c * inv, axes=axes).real


def poisson_solve(rhs: Field) -> Field:
    """Solve ``lap p = rhs`` on a fully periodic spatial grid; ``p`` has zero mean."""
    if not rhs.grid.fully_periodic:
        raise GridError("poisson_solve requires a fully periodic spatial grid")
    return rhs.with_data(poisson_periodic(rhs.data, rhs.grid), "pressure")


def dealias(a: np.ndarray, grid: Grid) -> np.ndarray:
    """Zero every mode above two thirds of Nyquist on the trailing spatial axes."""
    d = grid.ndim
    axes = tuple(range(a.ndim - d, a.ndim))
    c = np.fft.fftn(a, axes=axes)
    mask = np.ones(grid.points, dtype=bool)
    for j, n in enumerate(grid.points):
        m = np.abs(mode_numbers(n))
        keep = m <= n // 3
        shape = [1] * d
        shape[j] = n
        mask &= keep.reshape(shape)
    return np.fft.ifftn(c * mask, axes=axes).real


def radial_spectrum(u: Field) -> RadialSpectrum:
    """Shell-binned spectrum over the spatial dims, summed over components.

    Shell ``m`` collects wavevectors with ``|k|`` nearest ``m * dk`` where
    ``dk`` is the smallest fundamental wavenumber; ``energy[m] * dk`` is the
    sum of ``|u_hat_k|^2`` in the shell, so ``total`` equals the mean square
    of the field (its variance when zero-mean). Time-dependent fields are
    averaged over time samples.
    """
    g = u.grid
    if not g.fully_periodic:
        raise GridError("radial_spectrum requires a periodic spatial grid")
    spatial_axes = tuple(u.axis(j) for j in range(g.ndim))
    c = np.fft.fftn(u.data, axes=spatial_axes, norm="forward")
    power = np.abs(c) ** 2
    power = power.sum(axis=0)
    if g.has_time:
        power = power.mean(axis=0)
    dk = min(2 * np.pi / L for L in g.extents)
    kmag = np.sqrt(_k_squared(g))
    bins = np.rint(kmag / dk).astype(np.int64)
    energy = np.bincount(bins.ravel(), weights=power.ravel()) / dk
    k = np.arange(energy.size) * dk
    return RadialSpectrum(k, energy, dk)
