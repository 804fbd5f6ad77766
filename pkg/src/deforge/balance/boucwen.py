"""Multi-DOF Bouc-Wen load balancing and a forward-simulation oracle."""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from ..core import TimeSeries
from ..errors import ParameterError, StabilityError
from ..spectral import fd_diff
from .specs import BoucWenSpec, DataPair

STABILITY_LIMIT = 0.1


def z_rate(spec: BoucWenSpec, v, z):
    """Hysteretic rate ``A v - beta |v| |z|^(n-1) z - gamma v |z|^n``."""
    az = np.abs(z)
    return spec.A * v - spec.beta * np.abs(v) * az ** (spec.n - 1) * z - spec.gamma * v * az ** spec.n


def _midpoints(v: np.ndarray) -> np.ndarray:
    """Cubic interpolation of samples ``v[n_t, c]`` at interval midpoints."""
    n = v.shape[0]
    mid = np.empty((n - 1,) + v.shape[1:])
    mid[1:-1] = (-v[:-3] + 9 * v[1:-2] + 9 * v[2:-1] - v[3:]) / 16
    mid[0] = (5 * v[0] + 15 * v[1] - 5 * v[2] + v[3]) / 16
    mid[-1] = (v[-4] - 5 * v[-3] + 15 * v[-2] + 5 * v[-1]) / 16
    return mid


def integrate_z(spec: BoucWenSpec, v: np.ndarray, dt: float) -> np.ndarray:
    """Classical RK4 for ``z`` from ``z(0) = 0`` driven by sampled rates ``v[n_t, c]``."""
    mid = _midpoints(v)
    z = np.zeros_like(v)
    for i in range(v.shape[0] - 1):
        zi = z[i]
        k1 = z_rate(spec, v[i], zi)
        k2 = z_rate(spec, mid[i], zi + 0.5 * dt * k1)
        k3 = z_rate(spec, mid[i], zi + 0.5 * dt * k2)
        k4 = z_rate(spec, v[i + 1], zi + dt * k3)
        z[i + 1] = zi + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return z


def restoring_force(spec: BoucWenSpec, u, z):
    """Nodal restoring force ``B^T [alpha k (B u) + (1 - alpha) k z]`` for row-stacked states."""
    B = spec.drift_matrix
    drift = u @ B.T
    F = spec.alpha * spec.k * drift + (1 - spec.alpha) * spec.k * z
    return F @ B


def balance_boucwen(u: TimeSeries, spec: BoucWenSpec) -> DataPair:
    """External load ``P = M u'' + C u' + F`` for a prescribed displacement history."""
    if u.n_t < 5:
        raise ParameterError("Bouc-Wen balancing needs n_t >= 5")
    if u.channels != spec.n_dof:
        raise ParameterError(f"expected {spec.n_dof} DOF channels, got {u.channels}")
    dt = u.dt
    vel = fd_diff(u.data, 0, dt, 1)
    acc = fd_diff(u.data, 0, dt, 2)
    drift_rate = vel @ spec.drift_matrix.T
    courant = abs(spec.A) * np.abs(drift_rate).max() * dt
    if courant >= STABILITY_LIMIT:
        raise StabilityError(f"|A| max|drift rate| dt = {courant:.3g} >= {STABILITY_LIMIT}; refine dt")
    z = integrate_z(spec, drift_rate, dt)
    P = acc @ spec.M.T + vel @ spec.C.T + restoring_force(spec, u.data, z)
    return DataPair(spec=spec, u=u, f=TimeSeries(P, dt), u0=np.stack([u.data[0], vel[0]]),
                    aux={"z": z}, meta={"stability": float(courant)})


def _wide(x, dt, order):
    """Stride-2 central differences on the interior ``[2, n-2)``."""
    if order == 1:
        return (x[4:] - x[:-4]) / (4 * dt)
    return (x[4:] - 2 * x[2:-2] + x[:-4]) / (4 * dt * dt)


def equations(pair: DataPair, cross: bool = False):
    spec, dt = pair.spec, pair.u.dt
    u, P, z = pair.u.data, pair.f.data, pair.aux["z"]
    B = spec.drift_matrix
    if not cross:
        vel, acc = fd_diff(u, 0, dt, 1), fd_diff(u, 0, dt, 2)
        replay = integrate_z(spec, vel @ B.T, dt)
        mom = {"inertia": acc @ spec.M.T, "damping": vel @ spec.C.T,
               "restoring": restoring_force(spec, u, z)}
        return [("motion", mom, P), ("hysteresis", {"z": z}, replay)]
    vel, acc = _wide(u, dt, 1), _wide(u, dt, 2)
    ui, zi = u[2:-2], z[2:-2]
    mom = {"inertia": acc @ spec.M.T, "damping": vel @ spec.C.T,
           "restoring": restoring_force(spec, ui, zi)}
    # the rate law is checked in integrated form: z'' jumps at drift-velocity
    # reversals, which caps any pointwise stencil check at first order
    rate = z_rate(spec, vel @ B.T, zi)
    integral = np.zeros_like(zi)
    integral[1:] = np.cumsum(0.5 * dt * (rate[1:] + rate[:-1]), axis=0)
    hyst = {"z": zi - zi[0], "rate_integral": -integral}
    return [("motion", mom, P[2:-2]), ("hysteresis", hyst, np.zeros_like(zi))]


def simulate(spec: BoucWenSpec, load: TimeSeries, u0, v0, z0=None, rtol: float = 1e-10,
             atol: float = 1e-12) -> TimeSeries:
    """Forward-solve the Bouc-Wen system under ``load`` with an adaptive Runge-Kutta method.

    The load is interpolated by a cubic spline. Returns displacements at the
    load's sample times.
    """
    n = spec.n_dof
    B = spec.drift_matrix
    Minv = np.linalg.inv(spec.M)
    spline = CubicSpline(load.times, load.data, axis=0)
    z0 = np.zeros(n) if z0 is None else np.asarray(z0, dtype=np.float64)

    def rhs(t, s):
        u, v, z = s[:n], s[n:2 * n], s[2 * n:]
        R = restoring_force(spec, u[None], z[None])[0]
        a = Minv @ (spline(t) - spec.C @ v - R)
        return np.concatenate([v, a, z_rate(spec, B @ v, z)])

    s0 = np.concatenate([np.asarray(u0, dtype=np.float64), np.asarray(v0, dtype=np.float64), z0])
    sol = solve_ivp(rhs, (0.0, load.t_end), s0, method="DOP853", t_eval=load.times,
                    rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"forward Bouc-Wen solve failed: {sol.message}")
    return TimeSeries(sol.y[:n].T, load.dt)
