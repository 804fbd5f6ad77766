"""Run configuration: schema validation and the per-sample generation pipeline."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import GENERATOR_VERSION
from .balance import (BoucWenSpec, LorenzSpec, balance_boucwen, balance_lorenz, balance_ns,
                      balance_snc, balance_wave)
from .balance.specs import DataPair
from .core import Grid
from .errors import ConfigError
from .sdo import DilationConfig, dilate
from .synth import SpectrumModel, derive_seed, gaussian_random_field, smooth_trajectory, synth_divfree

SCHEMA_VERSION = 1
FAMILIES = ("ns", "snc", "wave", "boucwen", "lorenz")
PDE_FAMILIES = ("ns", "snc", "wave")
PARAM_STREAM = 0xA5A5  # sub-stream index for per-sample parameter draws

_number = {"type": "number"}
# a parameter either fixed or drawn per sample from a uniform range
_param = {"oneOf": [
    _number,
    {"type": "object", "properties": {"uniform": {"type": "array", "items": _number,
                                                  "minItems": 2, "maxItems": 2}},
     "required": ["uniform"], "additionalProperties": False},
]}
_vector = {"type": "array", "items": _param, "minItems": 1}
_matrix = {"type": "array", "items": {"type": "array", "items": _number}, "minItems": 1}
# coefficient field mean + amplitude * sin(2 pi (mode . x) / L)
_coef = {"oneOf": [_param, {
    "type": "object",
    "properties": {"mean": _number, "amplitude": _number,
                   "mode": {"type": "array", "items": {"type": "integer"}, "minItems": 1}},
    "required": ["mean", "amplitude", "mode"], "additionalProperties": False}]}

_grid = {
    "type": "object",
    "properties": {
        "points": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1, "maxItems": 3},
        "extents": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1, "maxItems": 3},
        "periodic": {"type": "array", "items": {"type": "boolean"}, "minItems": 1, "maxItems": 3},
        "time_points": {"type": "integer", "minimum": 0},
        "t_end": {"type": "number", "minimum": 0},
        "time_periodic": {"type": "boolean"},
    },
    "required": ["points", "extents", "periodic"],
    "additionalProperties": False,
}

_spectrum = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["power_law", "pope", "single_mode"]},
        "amplitude": _number, "slope": _number, "k_low": _number, "k_high": _number,
        "k0": _number, "bandwidth": _number,
        "sweep": {"oneOf": [_number, {"type": "array", "items": _number}]},
        "sweep_width": _number, "length_scale": _number, "dissipation_scale": _number,
    },
    "additionalProperties": False,
}

_field_synth = {
    "type": "object",
    "properties": {
        "spectrum": _spectrum,
        "M": {"type": "integer", "minimum": 1},
        "frequency_bound": _number,
        "box_factor": {"type": "integer", "minimum": 1},
        "amplitude": _number,
    },
    "required": ["spectrum"],
    "additionalProperties": False,
}

_trajectory_schema = {
    "type": "object",
    "properties": {
        "n_t": {"type": "integer", "minimum": 4},
        "t_end": {"type": "number", "exclusiveMinimum": 0},
        "amplitude": _number, "offset": _number,
        "max_harmonic": {"type": "integer", "minimum": 1},
    },
    "required": ["n_t", "t_end"],
    "additionalProperties": False,
}

_params = {
    "ns": {"Re": _param, "dealias": {"type": "boolean"}},
    "snc": {"E": _param, "mu": _param},
    "wave": {"rho": _coef, "lam": _coef, "mu_lame": _coef},
    "boucwen": {"M": _matrix, "C": _matrix, "k": _vector, "alpha": _param, "A": _param,
                "beta": _param, "gamma": _param, "n": _param,
                "topology": {"enum": ["chain", "diagonal"]}},
    "lorenz": {"sigma": _param, "rho": _param, "beta": _param, "x_floor": _param},
}
_required = {"ns": ["Re"], "snc": ["E", "mu"], "wave": [], "boucwen": ["M", "C", "k"], "lorenz": []}


def schema_for(family: str) -> dict:
    pde = family in PDE_FAMILIES
    props = {
        "schema_version": {"const": SCHEMA_VERSION},
        "equation": {"const": family},
        "params": {"type": "object", "properties": _params[family], "required": _required[family],
                   "additionalProperties": False},
        "synth": _field_synth if pde else _trajectory_schema,
        "count": {"type": "integer", "minimum": 0},
        "master_seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "dilation": {"oneOf": [{"type": "null"}, {
            "type": "object",
            "properties": {"N": {"type": "integer", "minimum": 1}, "compatible": {"type": "boolean"}},
            "required": ["N"], "additionalProperties": False}]},
        "out": {"type": "string"},
        "workers": {"type": "integer", "minimum": 1},
    }
    required = ["equation", "params", "synth"]
    if pde:
        props["grid"] = _grid
        required.append("grid")
    return {"type": "object", "properties": props, "required": required, "additionalProperties": False}


@dataclass(frozen=True)
class RunConfig:
    """A validated generation run; ``raw`` keeps the parsed JSON."""

    raw: dict

    @property
    def equation(self) -> str:
        return self.raw["equation"]

    @property
    def count(self) -> int:
        return int(self.raw.get("count", 1))

    @property
    def master_seed(self) -> int:
        return int(self.raw.get("master_seed", 0))

    @property
    def workers(self) -> int:
        return int(self.raw.get("workers", 1))

    @property
    def out(self) -> str | None:
        return self.raw.get("out")

    @property
    def dilation(self) -> dict | None:
        return self.raw.get("dilation")

    @property
    def grid(self) -> Grid | None:
        g = self.raw.get("grid")
        return Grid.from_dict(g) if g is not None else None

    def with_overrides(self, **kw) -> "RunConfig":
        raw = copy.deepcopy(self.raw)
        raw.update({k: v for k, v in kw.items() if v is not None})
        return validate_config(raw)

    def to_dict(self) -> dict:
        return copy.deepcopy(self.raw)


def validate_config(raw: dict) -> RunConfig:
    """Check ``raw`` against its family schema and cross-field rules."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    family = raw.get("equation")
    if family not in FAMILIES:
        raise ConfigError(f"unknown or missing equation tag {family!r}; expected one of {FAMILIES}")
    try:
        jsonschema.validate(raw, schema_for(family))
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {e.message}") from None
    cfg = RunConfig(copy.deepcopy(raw))
    if family in PDE_FAMILIES:
        try:
            grid = cfg.grid
        except Exception as e:
            raise ConfigError(f"grid: {e}") from None
        if family in ("ns", "wave") and not grid.has_time:
            raise ConfigError(f"{family} needs time_points > 0")
        if family == "snc" and grid.has_time:
            raise ConfigError("snc is static; drop time_points")
        if family == "ns" and "M" not in raw["synth"]:
            raise ConfigError("ns synthesis needs the mode count M")
        try:
            SpectrumModel(**_spectrum_kw(raw["synth"]["spectrum"]))
        except Exception as e:
            raise ConfigError(f"synth/spectrum: {e}") from None
    elif cfg.dilation is not None:
        raise ConfigError("dilation applies to the PDE families only")
    for name, v in _walk_uniform(raw["params"]):
        lo, hi = v
        if not lo <= hi:
            raise ConfigError(f"params/{name}: uniform range needs lo <= hi")
    return cfg


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file {p} not found") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{p}: invalid JSON ({e})") from None
    return validate_config(raw)


def shipped_config(name: str) -> dict:
    """Parsed copy of one of the package's bundled configs (``ns``, ``lorenz``, ``condnum``...)."""
    return json.loads(resources.files("deforge").joinpath("configs", f"{name}.json").read_text())


def _walk_uniform(params: dict, prefix: str = ""):
    for k, v in params.items():
        if isinstance(v, dict) and "uniform" in v:
            yield prefix + k, v["uniform"]
        elif isinstance(v, list):
            for i, x in enumerate(v):
                if isinstance(x, dict) and "uniform" in x:
                    yield f"{prefix}{k}/{i}", x["uniform"]


def _spectrum_kw(d: dict) -> dict:
    d = dict(d)
    if "sweep" in d:
        d["sweep"] = tuple(np.atleast_1d(d["sweep"]))
    return d


def _draw(v, rng):
    if isinstance(v, dict) and "uniform" in v:
        lo, hi = v["uniform"]
        return float(rng.uniform(lo, hi))
    if isinstance(v, list):
        return [_draw(x, rng) for x in v]
    return v


def _coefficient(v, grid: Grid, rng):
    if isinstance(v, dict) and "mean" in v:
        mode = list(v["mode"]) + [0] * (grid.ndim - len(v["mode"]))
        phase = sum(2 * np.pi * m * X / L for m, X, L in zip(mode, grid.mesh(), grid.extents))
        return v["mean"] + v["amplitude"] * np.sin(phase)
    return _draw(v, rng)


def sample_params(cfg: RunConfig, seed: int) -> dict:
    """Concrete parameters for one sample; uniform ranges use a seed-derived stream."""
    rng = np.random.default_rng(derive_seed(seed, PARAM_STREAM))
    grid = cfg.grid
    out = {}
    for k, v in cfg.raw["params"].items():
        out[k] = _coefficient(v, grid, rng) if cfg.equation == "wave" else _draw(v, rng)
    return out


def _dilate(u, cfg: RunConfig):
    dil = cfg.dilation
    if not dil or dil["N"] == 1:
        return u, None, {}
    dc = DilationConfig(dil["N"])
    v, rep = dilate(u, dc)
    return v, dc.N, {"dilation_retained_energy": rep.retained_energy_fraction,
                     "dilation_discarded_modes": rep.discarded_mode_count}


def generate_one(cfg: RunConfig, index: int) -> DataPair:
    """Sample ``index`` of the run: synthesis, optional dilation, balancing."""
    seed = derive_seed(cfg.master_seed, index)
    fam = cfg.equation
    synth = cfg.raw["synth"]
    p = sample_params(cfg, seed)
    dil = cfg.dilation or {}
    compat = dil.get("N") if dil.get("compatible", True) and dil.get("N", 1) > 1 else None
    meta = {}
    N = None
    if fam in PDE_FAMILIES:
        grid = cfg.grid
        model = SpectrumModel(**_spectrum_kw(synth["spectrum"]))
        if fam == "ns":
            u = synth_divfree(model, synth["M"], grid, seed, compat, synth.get("frequency_bound"))
            u, N, meta = _dilate(u, cfg)
            pair = balance_ns(u, p["Re"], p.get("dealias", False))
        elif fam == "wave":
            u = gaussian_random_field(model, grid, seed, components=grid.ndim, compatible_N=compat,
                                      quantity="displacement")
            u = u.with_data(u.data * synth.get("amplitude", 1.0))
            u, N, meta = _dilate(u, cfg)
            pair = balance_wave(u, p.get("rho", 1.0), p.get("lam", 1.0), p.get("mu_lame", 1.0))
        else:
            pair = _snc(cfg, model, grid, seed, compat, p)
            N = pair.dilation
            meta = dict(pair.meta)
    elif fam == "boucwen":
        spec = BoucWenSpec(**{k: np.asarray(v) if k in ("M", "C", "k") else v for k, v in p.items()})
        pair = balance_boucwen(_trajectory(synth, spec.n_dof, seed), spec)
    else:
        spec = LorenzSpec(**p)
        pair = balance_lorenz(_trajectory(synth, 1, seed), spec)
    return replace(pair, seed=seed, dilation=N, meta={**pair.meta, **meta},
                   generator_version=GENERATOR_VERSION)


def _trajectory(synth: dict, channels: int, seed: int):
    n_t = synth["n_t"]
    return smooth_trajectory(n_t, synth["t_end"] / (n_t - 1), channels, seed,
                             synth.get("amplitude", 1.0), synth.get("offset", 0.0),
                             synth.get("max_harmonic", 4))


def _snc(cfg: RunConfig, model, window: Grid, seed: int, compat, p) -> DataPair:
    # the prescribed displacement lives on a periodic box with the window's
    # spacing; the emitted pair is its restriction to the window
    synth = cfg.raw["synth"]
    factor = synth.get("box_factor", 1)
    h = window.spacing
    if factor == 1 and window.fully_periodic:
        box, win = window, None
    else:
        pts = tuple((n - (0 if per else 1)) * factor for n, per in zip(window.points, window.periodic))
        box = Grid(pts, tuple(n * s for n, s in zip(pts, h)), (True,) * window.ndim)
        win = window.points
    u = gaussian_random_field(model, box, seed, components=2, compatible_N=compat, quantity="displacement")
    u = u.with_data(u.data * synth.get("amplitude", 1.0))
    u, N, meta = _dilate(u, cfg)
    pair = balance_snc(u, p["E"], p["mu"], window=win)
    return replace(pair, dilation=N, meta={**pair.meta, **meta})


__all__ = ["RunConfig", "validate_config", "load_config", "generate_one", "sample_params",
           "schema_for", "shipped_config"]
