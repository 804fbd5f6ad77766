"""Report figures written next to the CSV/JSON outputs of the CLI."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_spectrum(k, E, path, title: str = "radial energy spectrum", slope: float | None = None):
    """Log-log shell spectrum; ``slope`` overlays a reference power law through the peak."""
    k, E = np.asarray(k), np.asarray(E)
    live = (k > 0) & (E > 0)
    fig, ax = plt.subplots(figsize=(5, 4))
    if live.any():
        ax.loglog(k[live], E[live], "o-", ms=3, label="E(k)")
        if slope is not None:
            i = np.argmax(np.where(live, E, 0))
            ax.loglog(k[live], E[i] * (k[live] / k[i]) ** slope, "--", label=f"k^{slope:.3g}")
            ax.legend()
    ax.set_xlabel("k")
    ax.set_ylabel("E(k)")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _finite(v, cap):
    v = np.asarray(v, dtype=float)
    return np.where(np.isfinite(v), v, cap)


def plot_condnum(report, path):
    """Per-seed raw vs dilated conditioning at init and after training.

    Rank-deficient (infinite) values are drawn at the top edge as crosses.
    """
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for ax, stage in zip(axes, ("init", "final")):
        raw = report.column(f"kappa_raw_{stage}")
        dil = report.column(f"kappa_dilated_{stage}")
        both = np.concatenate([raw, dil])
        fin = both[np.isfinite(both)]
        cap = 10 * fin.max() if fin.size else 1e30
        lo = fin.min() / 10 if fin.size else 1.0
        ok = np.isfinite(raw) & np.isfinite(dil)
        ax.loglog(_finite(raw, cap)[ok], _finite(dil, cap)[ok], "o", label="finite")
        if (~ok).any():
            ax.loglog(_finite(raw, cap)[~ok], _finite(dil, cap)[~ok], "x", color="C3",
                      label="rank deficient")
        ax.loglog([lo, cap], [lo, cap], "k:", lw=1)
        ax.set_xlabel("kappa raw")
        ax.set_ylabel("kappa dilated")
        ax.set_title(f"Gauss-Newton conditioning ({stage})")
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
