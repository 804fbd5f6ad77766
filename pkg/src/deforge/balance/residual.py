"""Residual verifier for manufactured data pairs."""

from __future__ import annotations

import numpy as np

from . import boucwen, lorenz, ns, snc, wave
from .specs import CROSS_OP_TOL, EPS, SAME_OP_TOL, DataPair, ResidualReport

EQUATIONS = {
    "ns": ns.equations,
    "snc": snc.equations,
    "wave": wave.equations,
    "boucwen": boucwen.equations,
    "lorenz": lorenz.equations,
}


def _check_shapes(pair: DataPair):
    u, f = pair.u.data, pair.f.data
    if pair.family in ("ns", "snc", "wave"):
        if u.shape != f.shape:
            raise ValueError(f"solution shape {u.shape} and source shape {f.shape} differ")
    elif u.shape[0] != f.shape[0]:
        raise ValueError(f"solution has {u.shape[0]} samples, source {f.shape[0]}")


def relative_residual(equations) -> tuple[float, str, tuple, dict]:
    """Worst ``linf(sum terms - rhs) / (max term linf + EPS)`` over a list of equations."""
    worst, name, loc, norms = -1.0, "", (), {}
    for eq, terms, rhs in equations:
        lhs = sum(terms.values())
        r = np.abs(lhs - rhs)
        scales = {k: float(np.abs(v).max()) for k, v in terms.items()}
        scales["rhs"] = float(np.abs(rhs).max())
        for k, v in scales.items():
            norms[f"{eq}.{k}"] = v
        rel = float(r.max()) / (max(scales.values()) + EPS)
        if rel > worst:
            worst, name = rel, eq
            loc = tuple(int(i) for i in np.unravel_index(int(np.argmax(r)), r.shape))
    return max(worst, 0.0), name, loc, norms


def residual(pair: DataPair, tolerance: float = SAME_OP_TOL,
             cross_tolerance: float = CROSS_OP_TOL) -> ResidualReport:
    """Re-derive every term of the pair's equations and report both relative residuals."""
    _check_shapes(pair)
    eqs = EQUATIONS[pair.family]
    same, name, loc, terms = relative_residual(eqs(pair, cross=False))
    cross, _, _, cross_terms = relative_residual(eqs(pair, cross=True))
    return ResidualReport(pair.family, terms, same, cross, loc, name, tolerance, cross_tolerance,
                          cross_terms)
