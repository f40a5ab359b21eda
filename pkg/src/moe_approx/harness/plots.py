"""Figure rendering for experiment reports.

All functions save straight to files (Agg backend, no display) and return
the path they wrote, so experiment drivers can list figures in the bundle
index next to the CSV/JSON artifacts.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 150


def _finish(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    return path


def save_rate_figure(path, series, title="Approximation rate"):
    """Log-log error-vs-width plot.

    ``series`` is a list of ``(label, widths, errors, slope)`` tuples; the
    fitted slope is drawn as a dashed guide line anchored at the first point.
    """
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    markers = ["o", "s", "^", "d", "v"]
    for i, (label, widths, errors, slope) in enumerate(series):
        widths = np.asarray(widths, dtype=float)
        errors = np.asarray(errors, dtype=float)
        shown = np.maximum(errors, 1e-17)
        ax.loglog(widths, shown, marker=markers[i % len(markers)], label=label)
        if slope is not None and np.all(errors > 0):
            guide = errors[0] * (widths / widths[0]) ** slope
            ax.loglog(widths, guide, linestyle="--", linewidth=0.8, color="gray")
    ax.set_xlabel("expert width m")
    ax.set_ylabel("sup error")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    return _finish(fig, path)


def save_compare_figure(path, moe_rows, dense_rows, title="MoE vs dense at matched budget"):
    """Error against *active parameters* for both arms of a comparison."""
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    for rows, label, marker in ((moe_rows, "MoE", "o"), (dense_rows, "dense", "s")):
        params = [r["active_params"] for r in rows]
        errors = [max(r["error"], 1e-17) for r in rows]
        ax.loglog(params, errors, marker=marker, label=label)
    ax.set_xlabel("active parameters")
    ax.set_ylabel("sup error")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    return _finish(fig, path)


def save_gadget_figure(path, xs, taus, title="Cell indicator responses"):
    """Overlay of the per-cell indicator bump on a shared axis."""
    fig, ax = plt.subplots(figsize=(6.5, 3.0))
    for i in range(taus.shape[1]):
        ax.plot(xs, taus[:, i], linewidth=1.0, label=f"cell {i}" if taus.shape[1] <= 8 else None)
    ax.set_xlabel("x")
    ax.set_ylabel("indicator")
    ax.set_title(title)
    if taus.shape[1] <= 8:
        ax.legend(fontsize=7, ncol=4)
    return _finish(fig, path)


def save_error_profile(path, params, errors, title="Pointwise error"):
    """Error magnitude over a 1-d parameter sweep."""
    fig, ax = plt.subplots(figsize=(6.5, 3.0))
    ax.semilogy(params, np.maximum(errors, 1e-17), linewidth=0.8)
    ax.set_xlabel("parameter")
    ax.set_ylabel("|target - network|")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    return _finish(fig, path)


def save_error_heatmap(path, grid_x, grid_y, errors, title="Pointwise error"):
    """Error magnitude over a 2-d parameter grid (row-major ``errors``)."""
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    z = np.maximum(errors.reshape(len(grid_y), len(grid_x)), 1e-17)
    mesh = ax.pcolormesh(
        grid_x,
        grid_y,
        np.log10(z),
        shading="nearest",
        cmap="viridis",
    )
    fig.colorbar(mesh, ax=ax, label="log10 error")
    ax.set_xlabel("axis 0")
    ax.set_ylabel("axis 1")
    ax.set_title(title)
    return _finish(fig, path)


def save_selection_figure(path, params, selections, title="Routing decisions"):
    """Selected expert index along a 1-d parameter sweep, one line per block."""
    fig, ax = plt.subplots(figsize=(6.5, 3.0))
    for name, sel in selections:
        ax.step(params, sel, where="mid", linewidth=1.0, label=name)
    ax.set_xlabel("parameter")
    ax.set_ylabel("selected expert")
    ax.set_title(title)
    ax.legend(fontsize=7)
    return _finish(fig, path)
