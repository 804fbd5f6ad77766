"""Binary tensor blobs, per-sample manifests and dataset validation.

Blob layout (all little-endian)::

    b"DERG" | version u8 = 1 | dtype u8 = 1 (float64) | ndim u8 | reserved u8 = 0
    | ndim x u64 dims | row-major float64 payload

A dataset root holds ``sample_%06d/`` directories, each with a
``manifest.json`` and its blobs, plus a ``dataset.json`` index written last.
JSON is UTF-8 with sorted keys and floats printed with 17 significant digits.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import GENERATOR_VERSION
from .balance import residual, spec_from_dict
from .balance.specs import DataPair
from .core import BoundaryData, Field, Grid, TimeSeries
from .errors import BlobFormatError, DatasetError

MAGIC = b"DERG"
BLOB_VERSION = 1
DTYPE_F64 = 1
SCHEMA_VERSION = 1
MANIFEST = "manifest.json"
INDEX = "dataset.json"
DRIFT_TOL = 1e-12

_HEAD = struct.Struct("<4sBBBB")


# blobs

def write_blob(x) -> bytes:
    """Serialize a float64 array (or anything exposing ``.data``) to blob bytes."""
    a = np.asarray(getattr(x, "data", x), dtype=np.float64)
    if a.ndim < 1:
        raise BlobFormatError("blobs need ndim >= 1")
    if a.ndim > 255:
        raise BlobFormatError("ndim does not fit in one byte")
    if not np.all(np.isfinite(a)):
        raise BlobFormatError("refusing to write NaN or Inf")
    head = _HEAD.pack(MAGIC, BLOB_VERSION, DTYPE_F64, a.ndim, 0)
    dims = struct.pack(f"<{a.ndim}Q", *a.shape)
    return head + dims + np.ascontiguousarray(a, dtype="<f8").tobytes()


def read_blob(b: bytes) -> np.ndarray:
    """Parse blob bytes back into a float64 array."""
    b = bytes(b)
    if len(b) < _HEAD.size:
        raise BlobFormatError("truncated blob header")
    magic, version, dtype, ndim, reserved = _HEAD.unpack_from(b)
    if magic != MAGIC:
        raise BlobFormatError(f"bad magic {magic!r}")
    if version != BLOB_VERSION:
        raise BlobFormatError(f"unsupported blob version {version}")
    if dtype != DTYPE_F64:
        raise BlobFormatError(f"unsupported dtype code {dtype}")
    if ndim < 1:
        raise BlobFormatError("blob has no dimensions")
    if reserved != 0:
        raise BlobFormatError("reserved header byte must be 0")
    off = _HEAD.size + 8 * ndim
    if len(b) < off:
        raise BlobFormatError("truncated dims")
    dims = struct.unpack_from(f"<{ndim}Q", b, _HEAD.size)
    n = math.prod(dims)
    if len(b) != off + 8 * n:
        raise BlobFormatError(f"payload is {len(b) - off} bytes, expected {8 * n}")
    return np.frombuffer(b, dtype="<f8", offset=off).astype(np.float64).reshape(dims)


# canonical JSON

def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


def _encode(x, indent: int, level: int) -> str:
    pad, inner = " " * (indent * level), " " * (indent * (level + 1))
    if isinstance(x, dict):
        if not x:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {_encode(x[k], indent, level + 1)}" for k in sorted(x)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(x, list):
        if not x:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in x):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in x) + "]"
        return "[\n" + ",\n".join(inner + _encode(v, indent, level + 1) for v in x) + "\n" + pad + "]"
    if isinstance(x, bool) or x is None:
        return json.dumps(x)
    if isinstance(x, float):
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return format(x, ".17g")
    return json.dumps(x)


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, two-space indent, ``.17g`` floats."""
    return _encode(_plain(obj), 2, 0) + "\n"


def _sha256(b: bytes) -> str:
    return hashlib.sha256(b).hexdigest()


# samples

def sample_dir(root, index: int) -> Path:
    return Path(root) / f"sample_{index:06d}"


def _describe(x) -> dict:
    if isinstance(x, Field):
        return {"kind": "field", "grid": x.grid.to_dict(), "quantity": x.quantity}
    return {"kind": "timeseries", "dt": x.dt}


def _rebuild(desc: dict, a: np.ndarray):
    if desc["kind"] == "field":
        return Field(Grid.from_dict(desc["grid"]), a, desc["quantity"])
    return TimeSeries(a, desc["dt"])


def _arrays(pair: DataPair) -> dict:
    out = {"u": pair.u.data, "f": pair.f.data}
    if pair.u0 is not None:
        out["u0"] = pair.u0
    for key, a in pair.g.items():
        out[f"g_{BoundaryData.key_name(key)}"] = a
    for name, a in pair.aux.items():
        out[f"aux_{name}"] = a
    return out


def manifest_for(pair: DataPair, report, files: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "equation": pair.spec.to_dict(),
        "u": _describe(pair.u),
        "f": _describe(pair.f),
        "seed": pair.seed,
        "dilation": pair.dilation,
        "files": {k: v["path"] for k, v in files.items()},
        "sha256": {k: v["sha256"] for k, v in files.items()},
        "aux_grids": {k: g.to_dict() for k, g in pair.aux_grids.items()},
        "meta": pair.meta,
        "residual": {
            "same_op_max_rel": report.max_rel,
            "cross_op_max_rel": report.cross_max_rel,
            "equation": report.equation,
            "tolerance": report.tolerance,
            "cross_tolerance": report.cross_tolerance,
        },
        "generator_version": pair.generator_version or GENERATOR_VERSION,
    }


def write_sample(pair: DataPair, root, index: int, report=None) -> Path:
    """Write ``pair`` under ``root/sample_%06d``; refuses pairs that fail the residual check."""
    report = residual(pair) if report is None else report
    if not report.ok:
        raise DatasetError(
            f"pair fails its residual check (same-op {report.max_rel:.3g}, "
            f"cross {report.cross_max_rel:.3g}); not written")
    d = sample_dir(root, index)
    d.mkdir(parents=True, exist_ok=True)
    files = {}
    for name, a in _arrays(pair).items():
        b = write_blob(a)
        (d / f"{name}.bin").write_bytes(b)
        files[name] = {"path": f"{name}.bin", "sha256": _sha256(b)}
    (d / MANIFEST).write_text(dumps(manifest_for(pair, report, files)), encoding="utf-8")
    return d


def load_manifest(directory) -> dict:
    p = Path(directory) / MANIFEST
    if not p.is_file():
        raise DatasetError(f"missing {p}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DatasetError(f"{p}: {e}") from e


def read_sample(directory) -> DataPair:
    """Rebuild the pair stored in ``directory``, checking every blob's hash."""
    d = Path(directory)
    man = load_manifest(d)
    arrays = {}
    for name, rel in man["files"].items():
        p = d / rel
        if not p.is_file():
            raise DatasetError(f"missing blob {p}")
        b = p.read_bytes()
        if _sha256(b) != man["sha256"].get(name):
            raise DatasetError(f"hash mismatch for {p}")
        arrays[name] = read_blob(b)
    aux = {k[4:]: v for k, v in arrays.items() if k.startswith("aux_")}
    g = BoundaryData({BoundaryData.parse_key(k[2:]): v for k, v in arrays.items() if k.startswith("g_")})
    return DataPair(
        spec=spec_from_dict(man["equation"], aux),
        u=_rebuild(man["u"], arrays["u"]),
        f=_rebuild(man["f"], arrays["f"]),
        u0=arrays.get("u0"),
        g=g,
        aux=aux,
        aux_grids={k: Grid.from_dict(v) for k, v in man.get("aux_grids", {}).items()},
        meta=man.get("meta", {}),
        seed=man.get("seed"),
        dilation=man.get("dilation"),
        generator_version=man.get("generator_version", ""),
    )


def write_index(root, count: int, config: dict | None = None) -> Path:
    """Write ``dataset.json`` listing ``count`` samples with their manifest hashes."""
    root = Path(root)
    samples = []
    for i in range(count):
        m = sample_dir(root, i) / MANIFEST
        samples.append({"dir": m.parent.name, "manifest_sha256": _sha256(m.read_bytes())})
    index = {"schema_version": SCHEMA_VERSION, "count": count, "samples": samples,
             "generator_version": GENERATOR_VERSION, "config": config or {}}
    p = root / INDEX
    p.write_text(dumps(index), encoding="utf-8")
    return p


@dataclass
class ValidationReport:
    """Outcome of re-verifying a dataset tree."""

    root: str
    n_samples: int = 0
    n_ok: int = 0
    max_same_op: float = 0.0
    max_cross_op: float = 0.0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures and self.n_samples > 0

    def to_dict(self) -> dict:
        return {"root": self.root, "ok": self.ok, "n_samples": self.n_samples, "n_ok": self.n_ok,
                "max_same_op_max_rel": self.max_same_op, "max_cross_op_max_rel": self.max_cross_op,
                "failures": self.failures}


def _sample_dirs(root: Path, failures: list) -> list[Path]:
    idx = root / INDEX
    on_disk = sorted(p for p in root.glob("sample_*") if p.is_dir())
    if not idx.is_file():
        failures.append({"sample": INDEX, "error": "missing dataset index"})
        return on_disk
    index = json.loads(idx.read_text(encoding="utf-8"))
    listed = []
    for entry in index.get("samples", []):
        d = root / entry["dir"]
        listed.append(d)
        m = d / MANIFEST
        if m.is_file() and _sha256(m.read_bytes()) != entry.get("manifest_sha256"):
            failures.append({"sample": entry["dir"], "error": "manifest differs from the index hash"})
    if index.get("count") != len(listed):
        failures.append({"sample": INDEX, "error": "count does not match the sample list"})
    for d in sorted(set(on_disk) - set(listed)):
        failures.append({"sample": d.name, "error": "sample directory not in the index"})
    return listed


def validate_dataset(root, tol: float = DRIFT_TOL) -> ValidationReport:
    """Re-read every sample, recompute its residuals and compare with the manifest.

    A sample fails when a blob is missing or corrupt, when a recomputed
    residual differs from the recorded one by more than ``tol`` (absolute), or
    when it exceeds the family tolerance.
    """
    root = Path(root)
    rep = ValidationReport(str(root))
    dirs = _sample_dirs(root, rep.failures)
    rep.n_samples = len(dirs)
    for d in dirs:
        try:
            pair = read_sample(d)
            man = load_manifest(d)
            rec = man["residual"]
            r = residual(pair, rec.get("tolerance", 1e-10), rec.get("cross_tolerance", 1e-3))
        except Exception as e:  # any unreadable sample is a validation failure, not a crash
            rep.failures.append({"sample": d.name, "error": f"{type(e).__name__}: {e}"})
            continue
        rep.max_same_op = max(rep.max_same_op, r.max_rel)
        rep.max_cross_op = max(rep.max_cross_op, r.cross_max_rel)
        errs = []
        for key, val in (("same_op_max_rel", r.max_rel), ("cross_op_max_rel", r.cross_max_rel)):
            drift = abs(val - float(rec[key]))
            if not drift <= tol:
                errs.append(f"{key} drift {drift:.3g} (recorded {rec[key]}, recomputed {val:.17g})")
        if not r.ok:
            errs.append(f"residual above tolerance (same-op {r.max_rel:.3g}, cross {r.cross_max_rel:.3g})")
        if errs:
            rep.failures.append({"sample": d.name, "error": "; ".join(errs)})
        else:
            rep.n_ok += 1
    return rep
