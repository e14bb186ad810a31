"""SVG figures for analysis reports (matplotlib, Agg backend).

Output is byte-stable for identical inputs: no timestamps, fixed hash salt.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "axes.labelsize": 10,
    "axes.linewidth": 0.8,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "xtick.direction": "in",
    "ytick.direction": "in",
    "lines.linewidth": 1.2,
    "svg.hashsalt": "casimir-si",
    "svg.fonttype": "path",
}


def _figure():
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.8, 3.4))
    return fig, ax


def _save(fig, path):
    path = Path(path)
    with plt.rc_context(STYLE):
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path


def plot_mean_force(mean_curve, path, theory=None):
    """Mean measured force against separation, with the theory curve if given."""
    with plt.rc_context(STYLE):
        fig, ax = _figure()
        ax.plot(mean_curve.z * 1e9, mean_curve.F * 1e12, ".", ms=1.5, color="0.25", label="mean measured")
        if theory is not None:
            ax.plot(theory.z * 1e9, theory.F * 1e12, "-", color="#B40F20", label="theory")
            ax.legend()
        ax.set_xlabel("separation (nm)")
        ax.set_ylabel("force magnitude (pN)")
    return _save(fig, path)


def plot_relative_errors(z, delta_expt, delta_theor, path):
    """Relative experimental (solid) and theoretical (dashed) errors in percent."""
    with plt.rc_context(STYLE):
        fig, ax = _figure()
        ax.plot(np.asarray(z) * 1e9, 100 * np.asarray(delta_expt), "-", color="k", label="experimental")
        ax.plot(np.asarray(z) * 1e9, 100 * np.broadcast_to(delta_theor, np.shape(z)), "--", color="k",
                label="theoretical")
        ax.set_xlabel("separation (nm)")
        ax.set_ylabel("relative error (%)")
        ax.legend()
    return _save(fig, path)


def plot_differences(report, path):
    """Theory minus mean experiment with the +/- envelope."""
    z = report.z * 1e9
    with plt.rc_context(STYLE):
        fig, ax = _figure()
        ax.plot(z, report.differences * 1e12, ".", ms=1.5, color="0.25")
        ax.plot(z, report.envelope.Xi * 1e12, "-", color="k")
        ax.plot(z, -report.envelope.Xi * 1e12, "-", color="k")
        ax.axhline(0.0, color="0.6", lw=0.5)
        ax.set_xlabel("separation (nm)")
        ax.set_ylabel("theory - experiment (pN)")
    return _save(fig, path)


def plot_ratio(rc, path, label="force ratio"):
    with plt.rc_context(STYLE):
        fig, ax = _figure()
        ax.plot(rc.z * 1e9, rc.ratio, "-", color="#0C5DA5")
        ax.set_xlabel("separation (nm)")
        ax.set_ylabel(label)
    return _save(fig, path)
