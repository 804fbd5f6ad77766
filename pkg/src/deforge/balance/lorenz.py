"""Forced Lorenz system: chain solve for ``y``, ``z`` and the forcing ``f``."""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from ..core import TimeSeries
from ..errors import ParameterError, SingularityError
from ..spectral import fd_diff
from .specs import DataPair, LorenzSpec


def balance_lorenz(x: TimeSeries, sigma: float | LorenzSpec = 10.0, rho: float = 28.0,
                   beta: float = 8.0 / 3.0, x_floor: float = 0.5) -> DataPair:
    """Prescribe ``x(t)``; solve the first equation for ``y``, the second for ``z``,
    the third for ``f`` (``z' = x y - beta z - f``)."""
    spec = sigma if isinstance(sigma, LorenzSpec) else LorenzSpec(sigma, rho, beta, x_floor)
    if x.channels != 1:
        raise ParameterError("prescribed trajectory must have one channel")
    if x.n_t < 3:
        raise ParameterError("Lorenz balancing needs n_t >= 3")
    xs = x.data[:, 0]
    lo = float(np.abs(xs).min())
    if lo < spec.x_floor:
        raise SingularityError(f"min |x| = {lo:.3g} below x_floor = {spec.x_floor}")
    dt = x.dt
    y = xs + fd_diff(xs, 0, dt, 1) / spec.sigma
    z = (spec.rho * xs - y - fd_diff(y, 0, dt, 1)) / xs
    f = xs * y - spec.beta * z - fd_diff(z, 0, dt, 1)
    state = np.stack([xs, y, z], axis=1)
    return DataPair(spec=spec, u=TimeSeries(state, dt), f=TimeSeries(f, dt), u0=state[0].copy())


END_LAYER = 4  # samples at each end touched by nested one-sided closures


def _wide(a, dt):
    m = END_LAYER
    return (a[m + 2:-(m - 2)] - a[m - 2:-(m + 2)]) / (4 * dt)


def equations(pair: DataPair, cross: bool = False):
    s, dt = pair.spec, pair.u.dt
    xs, y, z = pair.u.data.T
    f = pair.f.data[:, 0]
    if cross:
        dx, dy, dz = _wide(xs, dt), _wide(y, dt), _wide(z, dt)
        inner = slice(END_LAYER, -END_LAYER)
        xs, y, z, f = xs[inner], y[inner], z[inner], f[inner]
    else:
        dx, dy, dz = (fd_diff(a, 0, dt, 1) for a in (xs, y, z))
    zero = np.zeros_like(xs)
    return [
        ("x", {"dx_dt": dx, "sigma_y": -s.sigma * y, "sigma_x": s.sigma * xs}, zero),
        ("y", {"dy_dt": dy, "rho_x": -s.rho * xs, "y": y, "xz": xs * z}, zero),
        ("z", {"dz_dt": dz, "beta_z": s.beta * z, "xy": -xs * y}, -f),
    ]


def simulate(spec: LorenzSpec, forcing: TimeSeries, state0, rtol: float = 1e-10,
             atol: float = 1e-12) -> TimeSeries:
    """Integrate the forced system with the forcing cubic-spline interpolated."""
    spline = CubicSpline(forcing.times, forcing.data[:, 0])

    def rhs(t, s):
        x, y, z = s
        return [spec.sigma * (y - x), spec.rho * x - y - x * z, -spec.beta * z + x * y - spline(t)]

    sol = solve_ivp(rhs, (0.0, forcing.t_end), np.asarray(state0, dtype=np.float64), method="DOP853",
                    t_eval=forcing.times, rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"forward Lorenz solve failed: {sol.message}")
    return TimeSeries(sol.y.T, forcing.dt)
