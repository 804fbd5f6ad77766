"""``deforge`` command line: generate, verify, dilate, spectrum, condnum.

Exit codes: 0 ok, 1 verification failure, 2 usage or config error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .balance import residual
from .config import generate_one, load_config, shipped_config, validate_config
from .core import Field, Grid
from .dataio import (INDEX, dumps, read_blob, sample_dir, validate_dataset, write_blob, write_index,
                     write_sample)
from .errors import ConfigError, DeforgeError

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _err(msg: str):
    print(f"deforge: {msg}", file=sys.stderr)


# generate

def _generate_sample(raw: dict, index: int, out: str) -> dict:
    cfg = validate_config(raw)
    t = time.perf_counter()
    pair = generate_one(cfg, index)
    rep = residual(pair)
    write_sample(pair, out, index, rep)
    return {"index": index, "family": pair.family, "same_op": rep.max_rel,
            "cross_op": rep.cross_max_rel, "seconds": time.perf_counter() - t}


def _index_config(cfg) -> dict:
    # worker count and output path do not affect the data, keep them out of the tree
    return {k: v for k, v in cfg.to_dict().items() if k not in ("workers", "out")}


def cmd_generate(args) -> int:
    try:
        cfg = load_config(args.config)
        cfg = cfg.with_overrides(count=args.count, master_seed=args.seed, out=args.out,
                                 workers=args.workers)
    except ConfigError as e:
        _err(f"config error: {e}")
        return EXIT_USAGE
    if not cfg.out:
        _err("config error: no output directory (set 'out' or pass --out)")
        return EXIT_USAGE
    out = Path(cfg.out)
    if out.exists() and any(out.iterdir()):
        _err(f"output directory {out} is not empty")
        return EXIT_USAGE
    out.mkdir(parents=True, exist_ok=True)
    workers = cfg.raw.get("workers") or os.cpu_count() or 1
    t0 = time.perf_counter()
    results = []
    try:
        if workers > 1 and cfg.count > 1:
            with ProcessPoolExecutor(max_workers=workers) as ex:
                futs = {i: ex.submit(_generate_sample, cfg.raw, i, str(out)) for i in range(cfg.count)}
                for i, f in futs.items():
                    try:
                        results.append(f.result())
                    except Exception as e:
                        _err(f"generation failed at sample {i}: {type(e).__name__}: {e}")
                        return EXIT_RUNTIME
        else:
            for i in range(cfg.count):
                try:
                    results.append(_generate_sample(cfg.raw, i, str(out)))
                except Exception as e:
                    _err(f"generation failed at sample {i}: {type(e).__name__}: {e}")
                    return EXIT_RUNTIME
        write_index(out, cfg.count, _index_config(cfg))
    except OSError as e:
        _err(f"cannot write dataset: {e}")
        return EXIT_RUNTIME
    wall = time.perf_counter() - t0
    summary = {"dataset": str(out), "count": cfg.count, "equation": cfg.equation,
               "wall_seconds": wall, "samples_per_second": cfg.count / wall if wall > 0 else 0.0,
               "max_same_op_max_rel": max((r["same_op"] for r in results), default=0.0),
               "max_cross_op_max_rel": max((r["cross_op"] for r in results), default=0.0)}
    print(f"{cfg.equation}: {cfg.count} samples in {wall:.2f} s "
          f"({summary['samples_per_second']:.2f}/s); max residual same-op "
          f"{summary['max_same_op_max_rel']:.3g}, cross-op {summary['max_cross_op_max_rel']:.3g}")
    if args.summary:
        Path(args.summary).write_text(dumps(summary), encoding="utf-8")
    return EXIT_OK


# verify

def cmd_verify(args) -> int:
    root = Path(args.dataset)
    if not root.is_dir() or not (root / INDEX).is_file():
        _err(f"no dataset at {root}")
        return EXIT_USAGE
    try:
        rep = validate_dataset(root, args.tol)
    except Exception as e:
        _err(f"verification crashed: {type(e).__name__}: {e}")
        return EXIT_RUNTIME
    d = rep.to_dict()
    # an empty dataset written by --count 0 is valid
    ok = not rep.failures
    d["ok"] = ok
    text = dumps(d)
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    for f in rep.failures:
        _err(f"{f['sample']}: {f['error']}")
    return EXIT_OK if ok else EXIT_VERIFY


# dilate / spectrum

def _blob_field(path, length: float) -> Field:
    a = read_blob(Path(path).read_bytes())
    if a.ndim == 1:
        a = a[None]
    if not 2 <= a.ndim <= 4:
        raise DeforgeError("blob must be [c, n_1, .., n_d] with 1 to 3 spatial dims")
    d = a.ndim - 1
    return Field(Grid(a.shape[1:], (length,) * d, (True,) * d), a)


def cmd_dilate(args) -> int:
    from .sdo import DilationConfig, compatibility, dilate, undilate
    try:
        u = _blob_field(args.input, args.length)
        cfg = DilationConfig(args.factor)
        if args.inverse:
            v = undilate(u, cfg)
            rep = compatibility(v, cfg.N).to_dict()
        else:
            v, r = dilate(u, cfg)
            rep = r.to_dict()
        Path(args.output).write_bytes(write_blob(v.data))
    except (DeforgeError, OSError, ValueError) as e:
        _err(f"{type(e).__name__}: {e}")
        return EXIT_RUNTIME
    sys.stdout.write(dumps(rep))
    return EXIT_OK


def cmd_spectrum(args) -> int:
    from .plotting import plot_spectrum
    from .spectral import radial_spectrum
    try:
        u = _blob_field(args.input, args.length)
        s = radial_spectrum(u)
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with out.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "E"])
            for k, e in zip(s.k, s.energy):
                w.writerow([format(k, ".17g"), format(e, ".17g")])
        png = Path(args.png) if args.png else out.with_suffix(".png")
        plot_spectrum(s.k, s.energy, png, slope=args.slope)
    except (DeforgeError, OSError, ValueError) as e:
        _err(f"{type(e).__name__}: {e}")
        return EXIT_RUNTIME
    print(f"wrote {out} and {png}")
    return EXIT_OK


# condnum

def cmd_condnum(args) -> int:
    from .plotting import plot_condnum
    from .toysolver.study import StudyConfig, condnum_study
    try:
        d = json.loads(Path(args.config).read_text()) if args.config else shipped_config("condnum")
        if args.seeds is not None:
            d["seeds"] = args.seeds
        if args.steps is not None:
            d["steps"] = args.steps
        cfg = StudyConfig.from_dict(d)
    except (OSError, json.JSONDecodeError, TypeError, DeforgeError) as e:
        _err(f"config error: {e}")
        return EXIT_USAGE
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)

        def progress(i, row):
            if not args.quiet:
                print(f"seed {i + 1}/{cfg.seeds}: kappa raw {row['kappa_raw_init']:.3g} "
                      f"dilated {row['kappa_dilated_init']:.3g} (init)", flush=True)

        t = time.perf_counter()
        rep = condnum_study(cfg, progress)
        d = rep.to_dict()
        d["wall_seconds"] = time.perf_counter() - t
        (out / "condnum_report.json").write_text(dumps(d), encoding="utf-8")
        keys = list(rep.rows[0]) if rep.rows else []
        with (out / "condnum_rows.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(keys)
            for row in rep.rows:
                w.writerow([format(row[k], ".17g") if isinstance(row[k], float) else row[k] for k in keys])
        plot_condnum(rep, out / "condnum.png")
    except (DeforgeError, OSError, ValueError, ArithmeticError) as e:
        _err(f"{type(e).__name__}: {e}")
        return EXIT_RUNTIME
    s = rep.summary()
    print(f"S ratio in [{s['S_ratio_min']:.15g}, {s['S_ratio_max']:.15g}]; median kappa init "
          f"raw {s['median_kappa_raw_init']:.3g} dilated {s['median_kappa_dilated_init']:.3g}; final "
          f"raw {s['median_kappa_raw_final']:.3g} dilated {s['median_kappa_dilated_final']:.3g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="deforge", description="Manufactured-solution dataset generator.")
    p.add_argument("--version", action="version", version=f"deforge {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="generate a dataset from a run config")
    g.add_argument("--config", required=True)
    g.add_argument("--count", type=int)
    g.add_argument("--seed", type=int, help="master seed")
    g.add_argument("--out")
    g.add_argument("--workers", type=int)
    g.add_argument("--summary", help="also write the run summary JSON here")
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("verify", help="re-verify every sample of a dataset")
    v.add_argument("--dataset", required=True)
    v.add_argument("--tol", type=float, default=1e-12, help="allowed residual drift")
    v.add_argument("--report", help="also write the JSON report here")
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("dilate", help="dilate (or undo the dilation of) a periodic field blob")
    d.add_argument("--input", required=True)
    d.add_argument("--output", required=True)
    d.add_argument("--factor", type=int, required=True)
    d.add_argument("--inverse", action="store_true")
    d.add_argument("--length", type=float, default=2 * np.pi, help="period of every spatial dim")
    d.set_defaults(func=cmd_dilate)

    s = sub.add_parser("spectrum", help="radial energy spectrum of a field blob (CSV + PNG)")
    s.add_argument("--input", required=True)
    s.add_argument("--out", required=True, help="CSV path; the PNG goes next to it")
    s.add_argument("--png")
    s.add_argument("--length", type=float, default=2 * np.pi)
    s.add_argument("--slope", type=float, help="reference slope drawn on the plot")
    s.set_defaults(func=cmd_spectrum)

    c = sub.add_parser("condnum", help="raw vs dilated Gauss-Newton conditioning study")
    c.add_argument("--config", help="study config JSON; defaults to the shipped study")
    c.add_argument("--out", required=True)
    c.add_argument("--seeds", type=int)
    c.add_argument("--steps", type=int)
    c.add_argument("--quiet", action="store_true")
    c.set_defaults(func=cmd_condnum)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
