"""Prescribed-solution generators.

Gaussian random fields weighted by a model spectrum, divergence-free velocity
fields built from a finite set of Fourier modes, the Ricker wavelet, and
bounded smooth trajectories for the ODE families.

Spectrum models describe a shell-integrated spectrum ``E(k)`` in physical
angular wavenumber, so ``integral E dk`` is the target variance of each
synthesized component.
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import Field, Grid, TimeSeries
from .errors import GridError, ParameterError
from .spectral import mode_numbers

KINDS = ("power_law", "pope", "single_mode")

# Model spectrum constants (high-Reynolds-number values).
POPE_C = 1.5
POPE_P0 = 2.0
POPE_BETA = 5.2
POPE_CL = 6.78
POPE_CETA = 0.40


@dataclass(frozen=True)
class SpectrumModel:
    """Energy spectrum ``E(k)`` with hard cutoffs at ``k_low`` and ``k_high``.

    ``sweep`` (mean sweeping velocity, one entry per spatial dim or a single
    value along dim 0) and ``sweep_width`` (rms sweeping velocity) add a
    Gaussian frequency line per spatial mode when a field is synthesized
    over time; both zero gives a frozen field.
    """

    kind: str = "power_law"
    amplitude: float = 1.0
    slope: float = -5.0 / 3.0
    k_low: float = 1.0
    k_high: float = 8.0
    k0: float | None = None
    bandwidth: float = 0.0
    sweep: tuple = ()
    sweep_width: float = 0.0
    length_scale: float | None = None
    dissipation_scale: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "sweep", tuple(float(v) for v in np.atleast_1d(self.sweep)))
        if self.kind not in KINDS:
            raise ParameterError(f"unknown spectrum kind {self.kind!r}")
        if not self.amplitude >= 0:
            raise ParameterError("spectrum amplitude must be >= 0")
        if not 0 <= self.k_low < self.k_high:
            raise ParameterError("need 0 <= k_low < k_high")
        if self.sweep_width < 0:
            raise ParameterError("sweep_width must be >= 0")
        if self.kind == "single_mode":
            if self.k0 is None:
                raise ParameterError("single_mode spectrum needs k0")
            if not self.k_low <= self.k0 <= self.k_high:
                raise ParameterError("k0 must lie inside [k_low, k_high]")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sweep"] = list(self.sweep)
        return {k: v for k, v in d.items() if v is not None}

    @classmethod
    def from_dict(cls, d: dict) -> "SpectrumModel":
        return cls(**d)


def spectrum_eval(model: SpectrumModel, k):
    """Evaluate ``E(k)``; zero outside ``[k_low, k_high]``."""
    k = np.asarray(k, dtype=np.float64)
    inband = (k >= model.k_low) & (k <= model.k_high) & (k > 0)
    ks = np.where(inband, k, 1.0)
    if model.kind == "power_law":
        out = model.amplitude * ks ** model.slope
    elif model.kind == "pope":
        L = model.length_scale or 1.0 / max(model.k_low, 1e-12)
        eta = model.dissipation_scale or 1.0 / model.k_high
        kl, ke = ks * L, ks * eta
        f_l = (kl / np.sqrt(kl * kl + POPE_CL)) ** (5.0 / 3.0 + POPE_P0)
        f_eta = np.exp(-POPE_BETA * ((ke ** 4 + POPE_CETA ** 4) ** 0.25 - POPE_CETA))
        out = model.amplitude * POPE_C * ks ** (-5.0 / 3.0) * f_l * f_eta
    else:
        half = max(model.bandwidth / 2, 1e-9 * max(model.k0, 1.0))
        out = np.where(np.abs(ks - model.k0) <= half, model.amplitude, 0.0)
    out = np.where(inband, out, 0.0)
    return float(out) if out.ndim == 0 else out


def shell_measure(k, d: int):
    """Surface measure of the radius-``k`` sphere in ``d`` dims (2 points in 1-d)."""
    k = np.asarray(k, dtype=np.float64)
    if d == 1:
        return np.full_like(k, 2.0)
    if d == 2:
        return 2 * np.pi * k
    return 4 * np.pi * k * k


def derive_seed(master_seed: int, index: int) -> int:
    """Per-sample 64-bit seed: ``SeedSequence(master_seed, spawn_key=(index,))``.

    Depends only on the pair, so sample order or worker scheduling cannot
    change the stream any sample sees.
    """
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _mode_index_grids(grid: Grid):
    return np.meshgrid(*[mode_numbers(n) for n in grid.points], indexing="ij")


def _flip_index(a: np.ndarray, axes) -> np.ndarray:
    """``a[-k]`` in DFT ordering along ``axes``."""
    for ax in axes:
        a = np.roll(np.flip(a, axis=ax), 1, axis=ax)
    return a


def _frequency_weights(model: SpectrumModel, grid: Grid, kvec: list[np.ndarray]) -> np.ndarray:
    """Discrete frequency line per spatial mode, normalised to unit sum over omega."""
    n_t = grid.time_points
    omega = 2 * np.pi * mode_numbers(n_t) / grid.time_period
    d = grid.ndim
    U = np.zeros(d)
    if model.sweep:
        s = np.asarray(model.sweep)
        U[: min(d, s.size)] = s[:d]
    center = -sum(U[j] * kvec[j] for j in range(d))
    width = model.sweep_width * np.sqrt(sum(k * k for k in kvec))
    om = omega.reshape((n_t,) + (1,) * d)
    w = np.zeros((n_t,) + grid.points)
    spread = width > 0
    if np.any(spread):
        safe = np.where(spread, width, 1.0)
        g = np.exp(-0.5 * ((om - center) / safe) ** 2)
        w = np.where(spread[None], g, 0.0)
    if np.any(~spread):
        dw = 2 * np.pi / grid.time_period
        idx = np.rint(center / dw).astype(np.int64)
        m = mode_numbers(n_t).reshape((n_t,) + (1,) * d)
        delta = (m == ((idx + n_t // 2) % n_t - n_t // 2)[None]).astype(float)
        w = np.where(spread[None], w, delta)
    total = w.sum(axis=0, keepdims=True)
    return np.where(total > 0, w / np.where(total > 0, total, 1.0), 0.0)


def grf_amplitude(model: SpectrumModel, grid: Grid, compatible_N: int | None = None) -> np.ndarray:
    """Per-coefficient standard deviation ``sqrt(S dk^d domega)`` over the synthesis axes."""
    d = grid.ndim
    m = _mode_index_grids(grid)
    kvec = [2 * np.pi * m[j] / grid.extents[j] for j in range(d)]
    kmag = np.sqrt(sum(k * k for k in kvec))
    dk_vol = float(np.prod([2 * np.pi / L for L in grid.extents]))
    with np.errstate(divide="ignore", invalid="ignore"):
        density = np.where(kmag > 0, spectrum_eval(model, kmag) / shell_measure(kmag, d), 0.0)
    var = density * dk_vol
    if compatible_N is not None and compatible_N > 1:
        ok = np.ones(grid.points, dtype=bool)
        for j in range(d):
            ok &= (m[j] % compatible_N) == 0
        var = np.where(ok, var, 0.0)
    if grid.has_time:
        var = var[None] * _frequency_weights(model, grid, kvec)
        axes = tuple(range(d + 1))
    else:
        axes = tuple(range(d))
    var = 0.5 * (var + _flip_index(var, axes))
    return np.sqrt(var)


def gaussian_random_field(model: SpectrumModel, grid: Grid, seed: int, components: int = 1,
                          compatible_N: int | None = None, quantity: str = "state") -> Field:
    """Real Gaussian random field with expected spectrum ``model``.

    Unit complex Gaussian coefficients with Hermitian symmetry come from the
    transform of real white noise, so the output is real by construction.
    With ``grid.time_points > 0`` the time axis is a periodic synthesis axis
    of period ``time_points * dt``. ``compatible_N`` zeroes every spatial
    mode whose index is not a multiple of ``N``.
    """
    if not grid.fully_periodic:
        raise GridError("gaussian_random_field needs a periodic spatial grid")
    rng = np.random.default_rng(seed)
    amp = grf_amplitude(model, grid, compatible_N)
    axes = tuple(range(1, amp.ndim + 1))
    white = rng.standard_normal((components,) + amp.shape)
    z = np.fft.fftn(white, axes=axes) / np.sqrt(amp.size)
    c = z * amp[None]
    data = np.fft.ifftn(c, axes=axes, norm="forward")
    scale = np.max(np.abs(data.real)) if data.size else 0.0
    if np.max(np.abs(data.imag), initial=0.0) > 1e-12 * max(scale, 1e-300):
        raise ArithmeticError("random field synthesis produced a non-real field")
    return Field(grid, data.real, quantity)


@dataclass(frozen=True)
class ModeSet:
    """Finite Fourier-mode representation of a divergence-free velocity field.

    ``index`` holds integer lattice mode numbers, ``k`` the physical
    wavevectors, ``omega`` the temporal angular frequencies.
    """

    index: np.ndarray
    k: np.ndarray
    omega: np.ndarray
    phase: np.ndarray
    sigma: np.ndarray
    q: np.ndarray
    shell_k: np.ndarray = field(default=None)

    @property
    def count(self) -> int:
        return self.q.size

    @property
    def variance(self) -> float:
        return float(2 * np.sum(self.q ** 2))


def _canonical(v: tuple) -> tuple:
    for x in v:
        if x != 0:
            return v if x > 0 else tuple(-y for y in v)
    return v


def _snap(target: np.ndarray, used: set, limits: np.ndarray, N: int, scale: np.ndarray,
          band: tuple) -> tuple:
    """Nearest unused, nonzero lattice point (in units of N) below the Nyquist limits.

    ``scale`` maps lattice units to physical wavenumber; candidates whose
    magnitude falls outside ``band`` carry no model energy and are skipped.
    """
    base = np.rint(target).astype(np.int64)
    d = target.size
    lo, hi = band[0] * (1 - 1e-12), band[1] * (1 + 1e-12)
    reach = int(np.ceil(np.max(band[1] / scale))) + 2
    for radius in range(1, reach + int(np.max(np.abs(base))) + 2):
        offsets = np.array(list(itertools.product(range(-radius, radius + 1), repeat=d)))
        cand = base[None] + offsets
        dist = np.sum((cand - target[None]) ** 2, axis=1)
        for i in np.lexsort((np.arange(len(cand)), dist)):
            c = tuple(int(x) for x in cand[i])
            if not any(c):
                continue
            if np.any(np.abs(np.asarray(c)) * N >= limits):
                continue
            kmag = float(np.linalg.norm(np.asarray(c) * scale))
            if not lo <= kmag <= hi:
                continue
            key = _canonical(c)
            if key in used:
                continue
            return key
    raise ParameterError("not enough distinct lattice modes inside the band for the requested M")


def sample_modes(model: SpectrumModel, M: int, grid: Grid, seed: int,
                 compatible_N: int | None = None, frequency_bound: float | None = None) -> ModeSet:
    """Draw ``M`` modes on log-spaced shells between ``k_low`` and ``k_high``.

    Each mode gets one random direction, snapped to the nearest unused
    lattice wavevector inside the band (multiples of ``compatible_N`` when
    given), a unit
    polarisation orthogonal to it, amplitude ``sqrt(E(k_m) dk_m / 2)``,
    a uniform phase and a frequency uniform on ``[0, W]``.
    """
    d = grid.ndim
    if d not in (2, 3):
        raise GridError("divergence-free synthesis needs 2 or 3 spatial dims")
    if M < 1:
        raise ParameterError("need at least one mode")
    if model.k_low <= 0:
        raise ParameterError("mode shells need k_low > 0")
    N = int(compatible_N or 1)
    rng = np.random.default_rng(seed)
    edges = np.geomspace(model.k_low, model.k_high, M + 1)
    shell_k = np.sqrt(edges[:-1] * edges[1:])
    dk = np.diff(edges)
    q = np.sqrt(spectrum_eval(model, shell_k) * dk / 2)
    L = np.asarray(grid.extents)
    limits = np.asarray(grid.points) / 2.0
    if frequency_bound is None:
        frequency_bound = 2 * np.pi * grid.time_points / grid.t_end / 4 if grid.has_time else 0.0

    used: set = set()
    index = np.zeros((M, d), dtype=np.int64)
    sigma = np.zeros((M, d))
    for m in range(M):
        if d == 2:
            theta = rng.uniform(0, np.pi)
            direction = np.array([np.cos(theta), np.sin(theta)])
        else:
            v = rng.standard_normal(3)
            direction = v / np.linalg.norm(v)
        target = shell_k[m] * direction * L / (2 * np.pi) / N
        lat = _snap(target, used, limits, N, 2 * np.pi * N / L, (model.k_low, model.k_high))
        used.add(lat)
        index[m] = np.asarray(lat) * N
        kphys = 2 * np.pi * index[m] / L
        khat = kphys / np.linalg.norm(kphys)
        if d == 2:
            s = np.array([-khat[1], khat[0]]) * rng.choice([-1.0, 1.0])
        else:
            r = rng.standard_normal(3)
            s = r - np.dot(r, khat) * khat
            s /= np.linalg.norm(s)
            s -= np.dot(s, khat) * khat
        sigma[m] = s
    k = 2 * np.pi * index / L[None]
    phase = rng.uniform(0, 2 * np.pi, M)
    omega = rng.uniform(0, frequency_bound, M)
    return ModeSet(index, k, omega, phase, sigma, q, shell_k)


def evaluate_modes(modes: ModeSet, grid: Grid) -> np.ndarray:
    """``u_i = 2 sum_m q_m cos(omega_m t + k_m . x - psi_m) sigma_im`` on the grid."""
    d = grid.ndim
    X = grid.mesh()
    spatial = sum(modes.k[:, j, None] * X[j].ravel()[None] for j in range(d)) - modes.phase[:, None]
    cx, sx = np.cos(spatial), np.sin(spatial)
    npts = int(np.prod(grid.points))
    if grid.has_time:
        wt = modes.omega[None] * grid.times[:, None]
        ct, st = np.cos(wt), np.sin(wt)
        out = np.empty((d, grid.time_points, npts))
        for i in range(d):
            w = (2 * modes.q * modes.sigma[:, i])[:, None]
            out[i] = ct @ (w * cx) - st @ (w * sx)
        return out.reshape((d,) + grid.shape)
    out = np.empty((d, npts))
    for i in range(d):
        out[i] = (2 * modes.q * modes.sigma[:, i]) @ cx
    return out.reshape((d,) + grid.shape)


def synth_divfree(model: SpectrumModel, M: int, grid: Grid, seed: int,
                  compatible_N: int | None = None, frequency_bound: float | None = None) -> Field:
    """Divergence-free velocity field from ``M`` random Fourier modes."""
    if not grid.fully_periodic:
        raise GridError("synth_divfree needs a periodic spatial grid")
    modes = sample_modes(model, M, grid, seed, compatible_N, frequency_bound)
    return Field(grid, evaluate_modes(modes, grid), "velocity")


def ricker(t, f_peak: float, A: float = 1.0, t0: float = 0.0, standard_envelope: bool = False):
    """Ricker source time function ``A [1 - 2 pi^2 f^2 (t - t0)^2]``.

    The default is the bare polynomial form; ``standard_envelope`` multiplies
    by ``exp(-pi^2 f^2 (t - t0)^2)`` to give the usual wavelet.
    """
    if not f_peak > 0:
        raise ParameterError("f_peak must be positive")
    t = np.asarray(t, dtype=np.float64)
    arg = (np.pi * f_peak * (t - t0)) ** 2
    out = A * (1 - 2 * arg)
    if standard_envelope:
        out = out * np.exp(-arg)
    return float(out) if out.ndim == 0 else out


def smooth_trajectory(n_t: int, dt: float, channels: int, seed: int, amplitude: float = 1.0,
                      offset: float = 0.0, max_harmonic: int = 4) -> TimeSeries:
    """Bounded random Fourier series per channel.

    ``b + a * s(t) / max|s|`` with ``s = sum_h c_h sin(2 pi h t / T + phi_h)``
    and ``c_h ~ N(0, 1) / h``, so every channel stays within ``[b - a, b + a]``
    and touches one of the bounds.
    """
    if n_t < 4:
        raise ParameterError("smooth_trajectory needs n_t >= 4")
    rng = np.random.default_rng(seed)
    T = (n_t - 1) * dt
    t = np.arange(n_t) * dt
    h = np.arange(1, max_harmonic + 1)
    out = np.empty((n_t, channels))
    for c in range(channels):
        coef = rng.standard_normal(max_harmonic) / h
        phi = rng.uniform(0, 2 * np.pi, max_harmonic)
        s = np.sin(2 * np.pi * h[None] * t[:, None] / T + phi[None]) @ coef
        peak = np.max(np.abs(s))
        out[:, c] = offset + (amplitude * s / peak if peak > 0 and amplitude != 0 else 0.0)
    return TimeSeries(out, dt)
