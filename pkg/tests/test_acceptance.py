"""Quantitative acceptance gate: one test and one pass/fail line per criterion."""

from __future__ import annotations

import json
import time

import numpy as np
import pytest

import conftest
from conftest import mode_field, periodic_grid
from deforge.balance import balance_ns, residual
from deforge.balance import boucwen as bw
from deforge.balance import lorenz as lz
from deforge.cli import EXIT_OK, main
from deforge.config import FAMILIES, generate_one, shipped_config, validate_config
from deforge.core import Field, Grid, norm, relative_l1
from deforge.dataio import read_blob, validate_dataset, write_blob
from deforge.sdo import DilationConfig, dilate, undilate
from deforge.spectral import fd_diff, radial_spectrum, spectral_diff
from deforge.synth import SpectrumModel, gaussian_random_field, synth_divfree
from deforge.toysolver import StudyConfig, condnum_study, forward, init_model, jacobian, loss_grad
from deforge.toysolver.layers import Attention, Dense, FeedForward
from deforge.toysolver.study import C_IN


def report(n: int, ok: bool, detail: str):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _slope(h, e):
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])


def test_criterion_1_exact_closure():
    worst_same, worst_cross, worst_time, n = 0.0, 0.0, 0.0, 0
    per = {}
    for fam in FAMILIES:
        cfg = validate_config(shipped_config(fam))
        for i in range(cfg.count):
            t = time.perf_counter()
            pair = generate_one(cfg, i)
            rep = residual(pair)
            dt = time.perf_counter() - t
            worst_same = max(worst_same, rep.max_rel)
            worst_cross = max(worst_cross, rep.cross_max_rel)
            worst_time = max(worst_time, dt)
            per[fam] = max(per.get(fam, 0.0), rep.cross_max_rel)
            n += 1
    ok = worst_same < 1e-10 and worst_cross < 1e-3 and worst_time < 1.0
    cross = ", ".join(f"{k} {v:.2g}" for k, v in per.items())
    report(1, ok, f"{n} samples: same-op {worst_same:.2g}, cross-op {worst_cross:.2g} ({cross}), "
                  f"slowest {worst_time:.2f} s/sample")


def test_criterion_2_taylor_green():
    t0 = time.perf_counter()
    Re = 100.0
    g = periodic_grid(64, 2, time_points=32, t_end=1.0)
    x, y = g.mesh()
    t = g.times[:, None, None]
    decay = np.exp(-2 * t / Re)
    u = np.stack([-np.cos(x) * np.sin(y) * decay, np.sin(x) * np.cos(y) * decay])
    pair = balance_ns(Field(g, u), Re)
    p_exact = -(np.cos(2 * x) + np.cos(2 * y)) / 4 * np.exp(-4 * t / Re)
    p = pair.aux["p"][0]
    dp = (p - p.mean(axis=(1, 2), keepdims=True)) - (p_exact - p_exact.mean(axis=(1, 2), keepdims=True))
    elapsed = time.perf_counter() - t0
    f_inf, p_err = float(np.abs(pair.f.data).max()), float(np.abs(dp).max())
    report(2, f_inf < 1e-6 and p_err < 1e-6 and elapsed < 1.0,
           f"|f|inf {f_inf:.2g}, pressure error {p_err:.2g}, {elapsed:.2f} s")


def test_criterion_3_divergence_free():
    worst = 0.0
    cases = [(periodic_grid(32, 2, time_points=8, t_end=1.0), 6), (periodic_grid(64, 2), 10),
             (periodic_grid(16, 3), 8)]
    for g, M in cases:
        for seed in range(10):
            u = synth_divfree(SpectrumModel(k_low=1.0, k_high=7.0), M, g, seed)
            div = sum(spectral_diff(u.data[j], u.axis(j) - 1, g.extents[j]) for j in range(g.ndim))
            worst = max(worst, float(np.abs(div).max()))
    report(3, worst < 1e-10, f"max |div u| {worst:.2g} over 30 fields in 2-d and 3-d")


def test_criterion_4_sdo():
    g = periodic_grid(64)
    cfg = DilationConfig(4)
    v, _ = dilate(mode_field(g, 8), cfg)
    pointwise = float(np.abs(v.data[0] - np.cos(8 * g.coords(0) / 4)).max())
    g2 = periodic_grid(64, 2)
    ident, shrink = 0.0, 0.0
    for seed in range(10):
        u = gaussian_random_field(SpectrumModel(k_high=31.0), g2, seed, compatible_N=4)
        w, _ = dilate(u, cfg)
        ident = max(ident, float(np.abs(undilate(w, cfg).data - u.data).max()))
        gu = np.sqrt(sum(spectral_diff(u.data, 1 + j, g2.extents[j]) ** 2 for j in range(2)))
        gw = np.sqrt(sum(spectral_diff(w.data, 1 + j, g2.extents[j]) ** 2 for j in range(2)))
        shrink = max(shrink, abs(norm(gw, 2) * 4 / norm(gu, 2) - 1))
    ok = pointwise < 1e-12 and ident < 1e-12 and shrink < 1e-10
    report(4, ok, f"mode 8 -> u(x/4) {pointwise:.2g}, round trip {ident:.2g}, "
                  f"gradient ratio error {shrink:.2g}")


def test_criterion_5_spectrum_fidelity():
    t0 = time.perf_counter()
    g = Grid((128, 128), (2 * np.pi,) * 2, (True, True))
    m = SpectrumModel(slope=-5 / 3, k_low=1.0, k_high=63.0)
    E = np.mean([radial_spectrum(gaussian_random_field(m, g, s)).energy for s in range(50)], axis=0)
    k = np.arange(E.size)
    band = (k >= 4) & (k <= 40)
    slope = float(np.polyfit(np.log(k[band]), np.log(E[band]), 1)[0])
    elapsed = time.perf_counter() - t0
    report(5, abs(slope + 5 / 3) <= 0.1 and elapsed < 30,
           f"fitted slope {slope:.4f} (target -1.6667, band 4..40), {elapsed:.1f} s")


def _tg_cross(n):
    g = periodic_grid(n, 2, time_points=9, t_end=1.0)
    x, y = g.mesh()
    t = g.times[:, None, None]
    decay = np.exp(-2 * t / 100)
    u = np.stack([-np.cos(x) * np.sin(y) * decay, np.sin(x) * np.cos(y) * decay])
    return residual(balance_ns(Field(g, u), 100.0)).cross_max_rel, g.spacing[0]


def test_criterion_6_convergence_orders():
    slopes = {}
    e, h = zip(*(_tg_cross(n) for n in (32, 64, 128)))
    slopes["ns cross-op"] = _slope(h, e)
    e, h = [], []
    for n_t in (257, 513, 1025):
        d = shipped_config("lorenz")
        d["synth"] = {**d["synth"], "n_t": n_t}
        pair = generate_one(validate_config(d), 0)
        e.append(residual(pair).cross_max_rel)
        h.append(pair.u.dt)
    slopes["lorenz cross-op"] = _slope(h, e)
    e, h = [], []
    for n_t in (257, 1025, 4097):
        d = shipped_config("boucwen")
        d["synth"] = {**d["synth"], "n_t": n_t}
        pair = generate_one(validate_config(d), 0)
        e.append(residual(pair).cross_max_rel)
        h.append(pair.u.dt)
    slopes["boucwen cross-op"] = _slope(h, e)
    for order in (1, 2):
        e, h = [], []
        for n in (64, 128, 256):
            t = np.linspace(0, 2, n)
            exact = np.cos(3 * t) * 3 if order == 1 else -9 * np.sin(3 * t)
            e.append(float(np.abs(fd_diff(np.sin(3 * t), 0, t[1], order) - exact).max()))
            h.append(t[1])
        slopes[f"fd order-{order} derivative"] = _slope(h, e)
    ok = all(abs(s - 2.0) <= 0.3 for s in slopes.values())
    report(6, ok, ", ".join(f"{k} {v:.2f}" for k, v in slopes.items()))


def test_criterion_7_ode_round_trips():
    errs = {}
    for fam, mod in (("boucwen", bw), ("lorenz", lz)):
        cfg = validate_config(shipped_config(fam))
        worst = 0.0
        for i in range(3):
            pair = generate_one(cfg, i)
            if fam == "boucwen":
                back = mod.simulate(pair.spec, pair.f, pair.u0[0], pair.u0[1])
                err = relative_l1(back.data, pair.u.data)
            else:
                back = mod.simulate(pair.spec, pair.f, pair.u0)
                err = relative_l1(back.data[:, 0], pair.u.data[:, 0])
            worst = max(worst, err)
        errs[fam] = worst
    report(7, all(v < 1e-3 for v in errs.values()),
           ", ".join(f"{k} relative L1 {v:.2g}" for k, v in errs.items()))


def _directional_check(fn, x, g, rng, n=50, eps=1e-5):
    worst = 0.0
    for _ in range(n):
        d = rng.standard_normal(x.shape)
        d /= np.linalg.norm(d)
        fd = (fn(x + eps * d) - fn(x - eps * d)) / (2 * eps)
        worst = max(worst, abs(float(np.sum(g * d)) - fd) / max(abs(fd), 1e-12))
    return worst


def test_criterion_8_gradient_correctness():
    rng = np.random.default_rng(8)
    worst = {}
    for name, layer in (("dense", Dense(4, 4, "tanh")), ("attention", Attention(4)),
                        ("feedforward", FeedForward(4)), ("decoder", Dense(4, 1, None))):
        p = {k: rng.standard_normal(s) for k, s in layer.shapes.items()}
        H = rng.standard_normal((1, 8, 4))
        out, cache = layer.forward(p, H)
        G = rng.standard_normal(out.shape)
        _, grads = layer.backward(p, cache, G[None])
        keys = list(layer.shapes)
        flat = np.concatenate([p[k].ravel() for k in keys])
        g = np.concatenate([grads[k][0].ravel() for k in keys])

        def fn(w):
            q, i = {}, 0
            for k in keys:
                q[k] = w[i:i + p[k].size].reshape(p[k].shape)
                i += p[k].size
            return float(np.sum(layer.forward(q, H)[0] * G))

        worst[name] = _directional_check(fn, flat, g, rng)
    model = init_model(4, 5, seed=1)
    X, Y = rng.standard_normal((1, 60, 4)), rng.standard_normal((1, 60, 1))
    _, g = loss_grad(model, (X, Y))
    worst["l1 loss"] = _directional_check(
        lambda w: float(np.mean(np.abs(forward(model.with_vector(w), X) - Y))), model.vector(), g, rng)
    J = jacobian(model, X)
    w = model.vector()
    Jfd = np.empty_like(J)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = 1e-6
        Jfd[:, i] = (forward(model.with_vector(w + e), X) - forward(model.with_vector(w - e), X)).ravel() / 2e-6
    H, Hfd = J.T @ J, Jfd.T @ Jfd
    h_err = float(np.abs(H - Hfd).max() / np.abs(Hfd).max())
    ok = all(v < 1e-5 for v in worst.values()) and h_err < 1e-6 and model.n_params <= 200
    report(8, ok, ", ".join(f"{k} {v:.1g}" for k, v in worst.items())
           + f"; H_GN vs FD {h_err:.1g} ({model.n_params} params)")


@pytest.mark.slow
def test_criterion_9_dilation_conditioning_study(tmp_path):
    t0 = time.perf_counter()
    cfg = StudyConfig.from_dict(shipped_config("condnum"))
    rep = condnum_study(cfg)
    elapsed = time.perf_counter() - t0
    (tmp_path / "condnum_report.json").write_text(json.dumps(rep.to_dict(), default=float))
    s = rep.summary()
    n_params = init_model(C_IN, cfg.h, 1, cfg.n_encoder, cfg.n_blocks).n_params
    tokens = (cfg.n_t - 1) * cfg.n_x
    ratio_ok = abs(s["S_ratio_min"] - cfg.N) < 1e-10 * cfg.N and abs(s["S_ratio_max"] - cfg.N) < 1e-10 * cfg.N
    shape_ok = cfg.N == 4 and cfg.seeds == 20 and cfg.steps == 500 and n_params <= 512 and tokens >= 2 * n_params
    ok = ratio_ok and shape_ok and s["kappa_lower_init"] and s["kappa_lower_final"] and elapsed < 600
    report(9, ok,
           f"S ratio [{s['S_ratio_min']:.15g}, {s['S_ratio_max']:.15g}]; median kappa raw/dilated "
           f"init {s['median_kappa_raw_init']:.3g}/{s['median_kappa_dilated_init']:.3g}, final "
           f"{s['median_kappa_raw_final']:.3g}/{s['median_kappa_dilated_final']:.3g}; "
           f"P={n_params}, tokens={tokens}, {elapsed:.0f} s")


def test_criterion_10_reproducibility_and_format(tmp_path):
    cfg = tmp_path / "lorenz.json"
    cfg.write_text(json.dumps(shipped_config("lorenz")))
    trees = []
    for w in (1, 2, 4):
        out = tmp_path / f"w{w}"
        assert main(["generate", "--config", str(cfg), "--count", "8", "--seed", "11", "--out", str(out),
                     "--workers", str(w)]) == EXIT_OK
        trees.append({str(p.relative_to(out)): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()})
    identical = trees[0] == trees[1] == trees[2]
    golden = b"DERG\x01\x01\x02\x00" + (2).to_bytes(8, "little") * 2 + np.array([1.0, 2, 3, 4]).tobytes()
    a = read_blob(golden)
    golden_ok = write_blob(a) == golden and a.tolist() == [[1.0, 2.0], [3.0, 4.0]]
    p = tmp_path / "w1" / "sample_000005" / "u.bin"
    b = bytearray(p.read_bytes())
    b[100] = (b[100] + 1) % 256
    p.write_bytes(bytes(b))
    failures = validate_dataset(tmp_path / "w1").failures
    tamper_ok = [f["sample"] for f in failures] == ["sample_000005"]
    report(10, identical and golden_ok and tamper_ok,
           f"trees identical at 1/2/4 workers: {identical}; golden blob: {golden_ok}; "
           f"single-byte tamper flagged: {tamper_ok}")
