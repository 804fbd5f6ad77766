"""Gauss-Newton conditioning and the gradient-magnitude scale of a data pair."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from ..core import Field
from ..errors import ParameterError
from ..spectral import fd_diff, mode_numbers
from .model import ToyModel, jacobian

MAX_DENSE_PARAMS = 2000
RANK_TOL = 1e-12


@dataclass(frozen=True)
class GNResult:
    """Spectrum summary of ``H_GN = J^T J``.

    ``kappa = (sigma_max / sigma_min)^2``; ``inf`` when ``rank_deficient``.
    """

    kappa: float
    lambda_min: float
    lambda_max: float
    singular_values: np.ndarray
    rank_deficient: bool


def _select(model: ToyModel, J: np.ndarray, params) -> np.ndarray:
    if params is None:
        return J
    sl = model.slices()
    cols = []
    for key, s in sl.items():
        if key[0] in params or key in params:
            cols.append(np.arange(s.start, s.stop))
    if not cols:
        raise ParameterError("no parameters selected")
    return J[:, np.concatenate(cols)]


def gauge_fixed_columns(model: ToyModel, X) -> np.ndarray:
    """Flat parameter indices left after removing exact output symmetries.

    Dropped: every attention ``Wk`` and ``Wo`` (only ``Wq Wk^T`` and ``Wv Wo``
    reach the output), the last block's ``bo`` (absorbed by the following
    feed-forward and decoder biases) and first-layer weights fed by input
    channels that vanish on the whole batch.
    """
    X = np.asarray(X, dtype=np.float64).reshape(-1, model.c_in)
    dead = np.flatnonzero(~np.any(X != 0.0, axis=0))
    attn = [ln for ln, layer in model.layers if layer.kind == "attention"]
    first = model.layers[0][0]
    keep = []
    for (ln, pn), s in model.slices().items():
        idx = np.arange(s.start, s.stop)
        if ln in attn and (pn in ("Wk", "Wo") or (pn == "bo" and ln == attn[-1])):
            continue
        if ln == first and pn == "W" and dead.size:
            idx = np.delete(idx.reshape(model.params[ln][pn].shape), dead, axis=0).ravel()
        keep.append(idx)
    return np.concatenate(keep)


def condnum_from_jacobian(J: np.ndarray) -> GNResult:
    n_res, P = J.shape
    if P > MAX_DENSE_PARAMS:
        raise ParameterError(f"{P} parameters exceed the dense SVD budget of {MAX_DENSE_PARAMS}")
    if n_res < P:
        raise ParameterError(f"{n_res} residuals < {P} parameters; J cannot have full column rank")
    s = np.linalg.svd(J, compute_uv=False)
    smax, smin = float(s[0]), float(s[-1])
    deficient = not smin >= RANK_TOL * smax or smax == 0.0
    kappa = float("inf") if deficient else (smax / smin) ** 2
    return GNResult(kappa, smin * smin, smax * smax, s, deficient)


def gauss_newton_condnum(model: ToyModel, X, params=None, chunk: int = 16,
                         gauge_fix: bool = False) -> GNResult:
    """Condition number of the Gauss-Newton matrix from the dense residual Jacobian.

    ``params`` restricts the columns to the named layers or ``(layer, param)``
    pairs, the rest being treated as frozen. ``gauge_fix`` keeps only the
    columns of :func:`gauge_fixed_columns`.
    """
    if gauge_fix and params is not None:
        raise ParameterError("choose either a parameter subset or gauge fixing")
    J = jacobian(model, X, chunk)
    J = J[:, gauge_fixed_columns(model, X)] if gauge_fix else _select(model, J, params)
    return condnum_from_jacobian(J)


def lipschitz_estimate(model: ToyModel) -> float:
    """Product of per-layer operator-norm bounds (an estimate, not a certified constant)."""
    out = 1.0
    for ln, layer in model.layers:
        out *= layer.operator_norm(model.params[ln])
    return out


# continuous maximum of a band-limited gradient

def _grad_coeffs(a: np.ndarray, lengths) -> tuple[np.ndarray, list]:
    c = np.fft.fftn(a, norm="forward")
    ks = np.meshgrid(*[2 * np.pi * mode_numbers(n) / L for n, L in zip(a.shape, lengths)],
                     indexing="ij")
    for j, n in enumerate(a.shape):
        if n % 2 == 0:
            # the Nyquist cosine has no real derivative; drop it as the spectral derivative does
            sl = [slice(None)] * a.ndim
            sl[j] = n // 2
            c[tuple(sl)] = 0.0
    return c, ks


def _upsampled(c: np.ndarray, factor: int) -> np.ndarray:
    shape = tuple(n * factor for n in c.shape)
    big = np.zeros(shape, dtype=complex)
    idx = np.ix_(*[np.where(mode_numbers(n) < 0, mode_numbers(n) + m, mode_numbers(n))
                   for n, m in zip(c.shape, shape)])
    big[idx] = c
    return np.fft.ifftn(big, norm="forward").real


def _continuous_max(a: np.ndarray, lengths, factor: int = 8) -> float:
    """Max over the continuum of ``|grad a|`` for the trigonometric interpolant of ``a``."""
    c, ks = _grad_coeffs(a, lengths)
    if not np.any(sum(np.abs(k * c) for k in ks)):
        return 0.0
    grads = [_upsampled(1j * k * c, factor) for k in ks]
    mag2 = sum(g * g for g in grads)
    flat = np.argsort(mag2.ravel())[::-1]
    best = float(np.sqrt(mag2.ravel()[flat[0]]))
    modes = np.array([k.ravel() for k in ks])
    coef = c.ravel()
    keep = np.abs(coef) > 0
    modes, coef = modes[:, keep], coef[keep]
    dx = [L / (n * factor) for n, L in zip(a.shape, lengths)]

    def neg(xv):
        ph = np.exp(1j * (modes.T @ xv))
        g = np.real((1j * modes) * (coef * ph)[None]).sum(axis=1)
        return -float(g @ g)

    for i in flat[:4]:
        x0 = np.array(np.unravel_index(i, mag2.shape), dtype=float) * np.array(dx)
        res = minimize(neg, x0, method="BFGS", options={"gtol": 1e-14})
        best = max(best, float(np.sqrt(max(-res.fun, 0.0))))
    return best


def _field_max(u: Field) -> float:
    g = u.grid
    axes = [u.axis(j) for j in range(g.ndim)]
    if not g.fully_periodic:
        grad2 = sum(fd_diff(u.data, ax, g.spacing[j], 1, g.periodic[j]) ** 2 for j, ax in enumerate(axes))
        return float(np.sqrt(grad2.max()))
    data = u.data.reshape((-1,) + g.points)
    # coarse per-slice screen, then refine the slices that can hold the maximum
    coarse = []
    for a in data:
        c, ks = _grad_coeffs(a, g.extents)
        mag2 = sum(_upsampled(1j * k * c, 4) ** 2 for k in ks)
        coarse.append(float(np.sqrt(mag2.max())))
    coarse = np.array(coarse)
    if coarse.max() == 0.0:
        return 0.0
    candidates = np.flatnonzero(coarse >= 0.97 * coarse.max())
    return max(_continuous_max(data[i], g.extents) for i in candidates)


def max_grad_magnitude(pair, include=("u", "f")) -> float:
    """Largest Euclidean norm of the spatial gradient of the solution or the source.

    Periodic fields use the maximum of the band-limited interpolant over the
    continuous domain (time samples taken as given), which makes
    the value exactly covariant under dilation. Non-periodic grids fall back
    to the maximum of finite-difference gradients on the grid.
    """
    fields = [getattr(pair, name) for name in include] if not isinstance(pair, Field) else [pair]
    return max(_field_max(f) for f in fields)
