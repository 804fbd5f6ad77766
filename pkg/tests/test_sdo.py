from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import mode_field, periodic_grid
from deforge.core import Field, Grid, norm
from deforge.errors import BandLimitError, GridError, ParameterError
from deforge.sdo import DilationConfig, compatibility, dilate, undilate
from deforge.spectral import radial_spectrum, spectral_diff
from deforge.synth import SpectrumModel, gaussian_random_field, synth_divfree


def _compatible(seed, N=4, n=32, d=2):
    return gaussian_random_field(SpectrumModel(k_high=n / 2 - 1), periodic_grid(n, d), seed,
                                 compatible_N=N)


def test_identity_for_N1(rng):
    u = Field(periodic_grid(16), rng.standard_normal(16))
    v, rep = dilate(u, DilationConfig(1))
    assert np.array_equal(v.data, u.data) and rep.retained_energy_fraction == 1.0


def test_pure_mode_maps_to_u_of_x_over_N():
    g = periodic_grid(64)
    v, rep = dilate(mode_field(g, 8), DilationConfig(4))
    x = g.coords(0)
    assert np.abs(v.data[0] - np.cos(8 * x / 4)).max() < 1e-12
    assert rep.retained_energy_fraction == 1.0 and rep.max_retained_mode == (2,)


def test_incompatible_mode_vanishes():
    v, rep = dilate(mode_field(periodic_grid(32), 3), DilationConfig(2))
    assert np.abs(v.data).max() < 1e-14
    assert rep.retained_energy_fraction == 0.0 and rep.discarded_mode_count == 2


def test_undilate_examples():
    g = periodic_grid(64)
    u = undilate(mode_field(g, 2), DilationConfig(4))
    assert np.abs(u.data[0] - np.cos(8 * g.coords(0))).max() < 1e-12
    z = Field(g, np.zeros(64))
    assert not np.any(undilate(z, DilationConfig(4)).data)


def test_undilate_rejects_wide_band():
    with pytest.raises(BandLimitError):
        undilate(mode_field(periodic_grid(32), 5), DilationConfig(4))


def test_non_periodic_dim_rejected():
    u = Field(Grid((8,), (1.0,), (False,)), np.zeros(8))
    with pytest.raises(GridError):
        dilate(u, DilationConfig(2))
    with pytest.raises(ParameterError):
        DilationConfig(0)


@given(st.integers(0, 2 ** 32 - 1))
def test_round_trip_compatible(seed):
    u = _compatible(seed)
    cfg = DilationConfig(4)
    v, rep = dilate(u, cfg)
    assert rep.retained_energy_fraction == 1.0
    assert np.abs(undilate(v, cfg).data - u.data).max() < 1e-12 * max(1.0, np.abs(u.data).max())


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([2, 3, 4]))
def test_dilate_undilate_is_identity_on_band(seed, N):
    r = np.random.default_rng(seed)
    g = periodic_grid(48)
    c = np.zeros(48, complex)
    top = 48 // (2 * N)
    c[1:top] = r.standard_normal(top - 1) + 1j * r.standard_normal(top - 1)
    v = Field(g, np.fft.ifft(c).real)
    back, _ = dilate(undilate(v, DilationConfig(N)), DilationConfig(N))
    assert np.abs(back.data - v.data).max() < 1e-12 * max(1.0, np.abs(v.data).max())


@given(st.integers(0, 2 ** 32 - 1))
def test_undilate_dilate_is_idempotent_projection(seed):
    r = np.random.default_rng(seed)
    u = Field(periodic_grid(32), r.standard_normal(32))
    cfg = DilationConfig(2)
    p1 = undilate(dilate(u, cfg)[0], cfg)
    p2 = undilate(dilate(p1, cfg)[0], cfg)
    assert np.abs(p1.data - p2.data).max() < 1e-12


@given(st.integers(0, 2 ** 32 - 1), st.floats(-5, 5), st.floats(-5, 5))
def test_linearity(seed, a, b):
    r = np.random.default_rng(seed)
    g = periodic_grid(24)
    u, w = (Field(g, r.standard_normal(24)) for _ in range(2))
    cfg = DilationConfig(3)
    lhs = dilate(Field(g, a * u.data + b * w.data), cfg)[0].data
    rhs = a * dilate(u, cfg)[0].data + b * dilate(w, cfg)[0].data
    assert np.abs(lhs - rhs).max() < 1e-12 * (1 + np.abs(rhs).max())


@given(st.integers(0, 2 ** 32 - 1))
def test_gradient_norms_shrink_by_N(seed):
    u = _compatible(seed)
    v, _ = dilate(u, DilationConfig(4))

    def grad(f):
        return np.sqrt(sum(spectral_diff(f.data, 1 + j, f.grid.extents[j]) ** 2 for j in range(2)))

    gu, gv = grad(u), grad(v)
    assert norm(gv, 2) == pytest.approx(norm(gu, 2) / 4, rel=1e-10)
    # v(x) = u(x/4) so grad v on the grid equals grad u / 4 sampled on a coarser lattice
    assert np.abs(gv[..., ::4, ::4] * 4 - gu[..., :8, :8]).max() < 1e-10 * np.abs(gu).max()


def test_radial_spectrum_reindexing():
    g = periodic_grid(64, 2)
    u = Field(g, mode_field(g, (8, 4)).data)
    v, _ = dilate(u, DilationConfig(4))
    su, sv = radial_spectrum(u), radial_spectrum(v)
    ku, kv = int(np.argmax(su.energy)), int(np.argmax(sv.energy))
    assert ku == round(np.hypot(8, 4)) and kv == round(np.hypot(2, 1))
    assert sv.total == pytest.approx(su.total, rel=1e-12)


def test_compatibility_examples():
    g = periodic_grid(32)
    assert compatibility(mode_field(g, 3), 2).retained_energy_fraction == 0.0
    assert compatibility(mode_field(g, 4), 2).retained_energy_fraction == 1.0
    u = synth_divfree(SpectrumModel(k_low=4.0, k_high=12.0), 4, periodic_grid(32, 2), 1, compatible_N=4)
    assert 1.0 - compatibility(u, 4).retained_energy_fraction < 1e-12


def test_time_axis_dilation():
    g = periodic_grid(16, 1, time_points=16, t_end=15 / 16 * 2 * np.pi, time_periodic=True)
    t = g.times
    u = Field(g, np.cos(4 * t)[:, None] * np.ones(16)[None])
    v, rep = dilate(u, DilationConfig(2, dims=("t",)))
    assert np.abs(v.data[0] - np.cos(2 * t)[:, None]).max() < 1e-12
