"""Static SVG figures (matplotlib, Agg backend, reproducible output).

SVG ids are salted with a fixed string and the date metadata is dropped unless
``timestamp=True``, so identical inputs give byte-identical files.
"""
from __future__ import annotations

import datetime

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams["svg.hashsalt"] = "spacetime-wf"


def _save(fig, path, timestamp=False):
    meta = {"Date": datetime.datetime.now().isoformat() if timestamp else None}
    fig.savefig(path, format="svg", metadata=meta)
    plt.close(fig)


def decay_plot(reports, labels, path, title="", timestamp=False):
    """log-log norms vs h for a list of DecayReports."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for rep, lab in zip(reports, labels):
        h = np.asarray(rep.h_values)
        n = np.maximum(np.asarray(rep.norms), 1e-300)
        ax.loglog(h, n, "o-", ms=3, lw=1, label=f"{lab} (slope {rep.slope:.2f})")
        if rep.floor:
            ax.axhline(rep.floor, color="0.7", lw=0.5, ls=":")
    ax.set_xlabel("h")
    ax.set_ylabel("test norm")
    ax.set_title(title)
    if len(labels) <= 12:
        ax.legend(fontsize=6)
    _save(fig, path, timestamp)


def heatmap_plot(u, path, x_range=None, t_stride=1, x_stride=1, timestamp=False):
    U = u.materialize()[::t_stride, ::x_stride]
    x, t = u.x[::x_stride], u.times[::t_stride]
    if x_range is not None:
        keep = (x >= x_range[0]) & (x <= x_range[1])
        U, x = U[:, keep], x[keep]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    im = ax.pcolormesh(x, t, np.abs(U) ** 2, shading="auto", cmap="viridis", rasterized=False)
    fig.colorbar(im, ax=ax, label="|u|^2")
    ax.set_xlabel("x")
    ax.set_ylabel("t")
    _save(fig, path, timestamp)


def orbit_plot(trajectories, points, path, point_labels=None, timestamp=False):
    """Classical orbits x(t) with predicted singular points (t, x) overlaid.

    trajectories: list of (t array, x array); points: list of (t, x, singular).
    """
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for t, x in trajectories:
        ax.plot(x, t, lw=0.8, color="C0")
    for i, (t, x, singular) in enumerate(points):
        ax.plot([x], [t], "o" if singular else "x", color="C3" if singular else "C2", ms=5)
        if point_labels:
            ax.annotate(point_labels[i], (x, t), fontsize=6)
    ax.set_xlabel("x")
    ax.set_ylabel("t")
    _save(fig, path, timestamp)
