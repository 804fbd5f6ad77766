"""Scale dilation by Fourier re-indexing.

``dilate`` realises ``u~(x) = u(x / N)`` on the same periodic grid by copying
coefficients ``v_hat[k] = u_hat[N k]``. With the series-coefficient DFT
convention of :mod:`deforge.spectral` no prefactor is needed. Modes whose
index is not a multiple of ``N`` (and the source Nyquist bin) have no image
and are dropped; the loss is reported rather than wrapped back in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Field
from .errors import BandLimitError, GridError, ParameterError
from .spectral import mode_numbers

ENERGY_FLOOR = 1e-24  # relative energy below which a mode counts as empty


@dataclass(frozen=True)
class DilationConfig:
    N: int
    dims: tuple | None = None
    report_energy: bool = True

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ParameterError("dilation factor must be a positive integer")
        object.__setattr__(self, "N", int(self.N))
        if self.dims is not None:
            object.__setattr__(self, "dims", tuple(self.dims))


@dataclass(frozen=True)
class DilationReport:
    retained_energy_fraction: float
    discarded_mode_count: int
    max_retained_mode: tuple

    def to_dict(self) -> dict:
        return {
            "retained_energy_fraction": self.retained_energy_fraction,
            "discarded_mode_count": self.discarded_mode_count,
            "max_retained_mode": list(self.max_retained_mode),
        }


def _dims(u: Field, cfg: DilationConfig) -> tuple:
    dims = cfg.dims if cfg.dims is not None else tuple(range(u.grid.ndim))
    for dim in dims:
        if not u.grid.is_periodic(dim):
            raise GridError(f"cannot dilate along non-periodic dim {dim!r}")
    return tuple(dims)


def _axis_len(u: Field, dim) -> int:
    return u.data.shape[u.axis(dim)]


def _mask(shape, axis, m):
    s = [1] * len(shape)
    s[axis] = m.size
    return m.reshape(s)


def _report(u: Field, c: np.ndarray, dims, N: int) -> DilationReport:
    power = np.abs(c) ** 2
    total = float(power.sum())
    keep = np.ones(c.shape, dtype=bool)
    for dim in dims:
        ax, n = u.axis(dim), _axis_len(u, dim)
        m = mode_numbers(n)
        ok = (m % N == 0) & (np.abs(m) * 2 < n)
        keep = keep & _mask(c.shape, ax, ok)
    if total == 0.0:
        return DilationReport(1.0, 0, tuple(0 for _ in dims))
    # round-off level modes would keep clean fractions off exactly 0 or 1
    live = power > ENERGY_FLOOR * total
    retained = float(power[keep & live].sum()) / float(power[live].sum())
    discarded = int(np.count_nonzero(live & ~keep))
    top = []
    for dim in dims:
        ax, n = u.axis(dim), _axis_len(u, dim)
        m = np.abs(mode_numbers(n)) // N
        hit = np.any(np.moveaxis(live & keep, ax, 0).reshape(n, -1), axis=1)
        top.append(int(m[hit].max()) if np.any(hit) else 0)
    return DilationReport(retained, discarded, tuple(top))


def compatibility(u: Field, N: int, dims=None) -> DilationReport:
    """Energy fraction of ``u`` carried by modes divisible by ``N`` along ``dims``."""
    cfg = DilationConfig(N, dims)
    dims = _dims(u, cfg)
    axes = tuple(u.axis(d) for d in dims)
    c = np.fft.fftn(u.data, axes=axes, norm="forward")
    return _report(u, c, dims, cfg.N)


def dilate(u: Field, cfg: DilationConfig) -> tuple[Field, DilationReport]:
    """Compress wavenumbers by ``N``: ``v_hat[k] = u_hat[N k]`` below Nyquist, zero elsewhere."""
    dims = _dims(u, cfg)
    N = cfg.N
    axes = tuple(u.axis(d) for d in dims)
    c = np.fft.fftn(u.data, axes=axes, norm="forward")
    if N == 1:
        top = tuple(_axis_len(u, d) // 2 for d in dims)
        return u, DilationReport(1.0, 0, top)
    report = _report(u, c, dims, N) if cfg.report_energy else DilationReport(float("nan"), -1, ())
    out = c
    for dim in dims:
        ax, n = u.axis(dim), _axis_len(u, dim)
        src = mode_numbers(n) * N
        ok = np.abs(src) * 2 < n
        out = np.take(out, np.where(ok, src % n, 0), axis=ax) * _mask(out.shape, ax, ok)
    data = np.fft.ifftn(out, axes=axes, norm="forward").real
    return u.with_data(data), report


def undilate(v: Field, cfg: DilationConfig) -> Field:
    """Inverse of :func:`dilate` on its range: ``u_hat[N k] = v_hat[k]``, other modes zero.

    Raises :class:`BandLimitError` when ``v`` carries energy at modes whose
    image ``N k`` would reach the Nyquist limit.
    """
    dims = _dims(v, cfg)
    N = cfg.N
    if N == 1:
        return v
    axes = tuple(v.axis(d) for d in dims)
    c = np.fft.fftn(v.data, axes=axes, norm="forward")
    power = np.abs(c) ** 2
    total = float(power.sum())
    inband = np.ones(c.shape, dtype=bool)
    for dim in dims:
        ax, n = v.axis(dim), _axis_len(v, dim)
        inband = inband & _mask(c.shape, ax, np.abs(mode_numbers(n)) * N * 2 < n)
    if total > 0 and float(power[~inband].sum()) > 1e-20 * total:
        raise BandLimitError(f"field has energy above Nyquist/{N}; undilate would alias")
    out = c
    for dim in dims:
        ax, n = v.axis(dim), _axis_len(v, dim)
        p = mode_numbers(n)
        ok = (p % N == 0) & (np.abs(p) * 2 < n)
        out = np.take(out, np.where(ok, (p // N) % n, 0), axis=ax) * _mask(out.shape, ax, ok)
    data = np.fft.ifftn(out, axes=axes, norm="forward").real
    return v.with_data(data)
