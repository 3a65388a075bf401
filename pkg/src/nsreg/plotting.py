"""Figures written next to CLI reports. Uses the Agg backend only."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)
    return path


def region_figure(rows, path):
    """Admissible cells in the (1/p, 1/r) plane with the bounding lines."""
    x = np.array([r.inv_p for r in rows])
    y = np.array([r.inv_r for r in rows])
    ok = np.array([r.admissible for r in rows])
    fig, ax = plt.subplots(figsize=(4.5, 4))
    ax.scatter(x[~ok], y[~ok], s=4, c="0.85", marker="s", label="rejected")
    ax.scatter(x[ok], y[ok], s=6, c="tab:blue", marker="s", label="admissible")
    t = np.linspace(0, 1, 200)
    for a, b, c, style in ((1, 1, 1, "k-"), (3, 1, 2, "k--"), (3, 2, 2, "k:"), (3, 2, 3, "k-.")):
        ax.plot(t, (c - a * t) / b, style, lw=0.8, label=f"{a}/p+{b}/r={c}")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_xlabel("1/p")
    ax.set_ylabel("1/r")
    ax.legend(fontsize=7, frameon=False, loc="upper right")
    return _finish(fig, path)


def diagnose_figure(rows, path):
    """Local quantities against radius on log-log axes."""
    fig, ax = plt.subplots(figsize=(5, 3.6))
    radii = [row["r"] for row in rows]
    for key in ("A", "E", "C", "S", "D", "Bq"):
        vals = [row.get(key) for row in rows]
        if any(v is None for v in vals):
            continue
        vals = np.array(vals, dtype=float)
        if np.all(vals > 0):
            ax.loglog(radii, vals, ".-", label=key)
    ax.set_xlabel("r")
    ax.set_ylabel("value")
    ax.legend(fontsize=7, frameon=False)
    return _finish(fig, path)


def scan_figure(cset, path):
    """Ladder profiles of every base point, flagged points highlighted."""
    fig, ax = plt.subplots(figsize=(5, 3.6))
    radii = list(cset.radii)
    for e in cset.evaluated:
        vals = np.maximum(np.array(e.values, dtype=float), 1e-300)
        ax.loglog(radii, vals, "-", color="tab:red" if e.flagged else "0.7",
                  lw=1.2 if e.flagged else 0.6)
    ax.axhline(cset.threshold, color="k", ls="--", lw=0.8)
    ax.set_xlabel("r")
    ax.set_ylabel("B_q" if cset.mode == "bq" else "A")
    return _finish(fig, path)


def cover_figure(sweep, path):
    """Both sides of the covering chain across the eps_hat sweep."""
    fig, ax = plt.subplots(figsize=(5, 3.6))
    e = [row.epsilon_hat for row in sweep]
    for key, label in (("premeasure_estimate", "sum (5r)^{2δ}"), ("witness_bound", "witness"),
                       ("integral_bound", "slab integral")):
        vals = np.array([getattr(row, key) for row in sweep], dtype=float)
        ax.loglog(e, np.maximum(vals, 1e-300), ".-", label=label)
    ax.set_xlabel("eps_hat")
    ax.legend(fontsize=7, frameon=False)
    return _finish(fig, path)


def field_figure(v, path):
    """|v| on the mid-z plane at the final time."""
    g = v.grid
    mag = v.abs_slice(g.nt - 1)[g.nz // 2]
    fig, ax = plt.subplots(figsize=(4.2, 3.6))
    lo, hi = g.box_lo, g.box_hi
    im = ax.imshow(mag, origin="lower", extent=[lo[0], hi[0], lo[1], hi[1]], cmap="viridis")
    fig.colorbar(im, ax=ax, label="|v|")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    return _finish(fig, path)


def energy_figure(times, vals, path):
    fig, ax = plt.subplots(figsize=(5, 3.6))
    for row, label in zip(vals, ("∫|v|^{3-2δ}", "∫|∇w|²", "∫|∇v|²|v|^{1-2δ}")):
        ax.plot(times, row, ".-", label=label)
    ax.set_xlabel("t")
    ax.legend(fontsize=7, frameon=False)
    return _finish(fig, path)


def harness_figure(report, path):
    fig, ax = plt.subplots(figsize=(5, 3.2))
    keys = list(report.sup)
    vals = [report.sup[k] if report.sup[k] is not None and math.isfinite(report.sup[k]) else 0
            for k in keys]
    ax.bar(range(len(keys)), vals, color="tab:blue")
    ax.set_xticks(range(len(keys)))
    ax.set_xticklabels(keys, fontsize=7)
    ax.set_ylabel("fitted constant")
    return _finish(fig, path)


def lorentz_figure(f, path):
    """Distribution function of the input."""
    from .lorentz import _levels_and_measures, distribution_function
    levels, _ = _levels_and_measures(f)
    top = float(levels[0]) if len(levels) else 1.0
    alpha = np.linspace(0.0, 1.05 * top, 400)
    d = [distribution_function(f, a) for a in alpha]
    fig, ax = plt.subplots(figsize=(4.5, 3.4))
    ax.plot(alpha, d, "-")
    ax.set_xlabel("alpha")
    ax.set_ylabel("d(alpha)")
    return _finish(fig, path)
