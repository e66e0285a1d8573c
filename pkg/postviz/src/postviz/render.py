"""Figure generation: pseudocolor maps, mesh wireframes, cut plots,
error-vs-cost curves."""

from __future__ import annotations

import csv

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.collections import LineCollection, PolyCollection  # noqa: E402

from .fields import evaluate  # noqa: E402
from .reader import Snapshot  # noqa: E402

__all__ = ["pseudocolor", "mesh_wireframe", "cut_plot", "eoc_and_timing_plots",
           "cut_samples"]


def _subcell_polys(snap: Snapshot):
    """All nodal subcell quads of the mesh as one vertex array."""
    ne = snap.n_elements
    p1 = snap.N + 1
    x = snap.x
    y = snap.y
    quads = []
    for di, dj in ((0, 0), (1, 0), (1, 1), (0, 1)):
        quads.append(np.stack([x[:, di:p1 - 1 + di, dj:p1 - 1 + dj],
                               y[:, di:p1 - 1 + di, dj:p1 - 1 + dj]], axis=-1))
    verts = np.stack(quads, axis=-2)           # (ne, N, N, 4, 2)
    return verts.reshape(ne * (p1 - 1) ** 2, 4, 2)


def pseudocolor(snap: Snapshot, field, out, contours=0, cmap="viridis",
                title=None):
    """Pseudocolor map of a field expression; optional contour overlay."""
    vals = evaluate(snap, field)
    p1 = snap.N + 1
    cell = 0.25 * (vals[:, :-1, :-1] + vals[:, 1:, :-1]
                   + vals[:, :-1, 1:] + vals[:, 1:, 1:])
    verts = _subcell_polys(snap)
    fig, ax = plt.subplots(figsize=(7, 6))
    pc = PolyCollection(verts, array=cell.ravel(), cmap=cmap, edgecolors="none")
    ax.add_collection(pc)
    ax.autoscale()
    ax.set_aspect("equal")
    if contours > 0:
        import matplotlib.tri as mtri
        tri = mtri.Triangulation(snap.x.ravel(), snap.y.ravel())
        levels = np.linspace(vals.min(), vals.max(), contours)
        if levels[0] < levels[-1]:
            ax.tricontour(tri, vals.ravel(), levels=levels,
                          colors="k", linewidths=0.4)
    cb = fig.colorbar(pc, ax=ax)
    cb.set_label(field)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(title or f"{field} at t = {snap.time:g}")
    fig.savefig(out, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return float(cell.min()), float(cell.max())


def _element_outlines(snap: Snapshot):
    segs = []
    p1 = snap.N + 1
    for e in range(snap.n_elements):
        bx = np.concatenate([snap.x[e, :, 0], snap.x[e, -1, 1:],
                             snap.x[e, ::-1, -1][1:], snap.x[e, 0, ::-1][1:]])
        by = np.concatenate([snap.y[e, :, 0], snap.y[e, -1, 1:],
                             snap.y[e, ::-1, -1][1:], snap.y[e, 0, ::-1][1:]])
        segs.append(np.column_stack([bx, by]))
    return segs


def mesh_wireframe(snap: Snapshot, out, title=None):
    """Element outlines colored by refinement level."""
    segs = _element_outlines(snap)
    fig, ax = plt.subplots(figsize=(7, 6))
    lc = LineCollection(segs, array=snap.levels.astype(float),
                        cmap="plasma", linewidths=0.7)
    ax.add_collection(lc)
    ax.autoscale()
    ax.set_aspect("equal")
    cb = fig.colorbar(lc, ax=ax, ticks=np.unique(snap.levels))
    cb.set_label("refinement level")
    ax.set_title(title or f"mesh at t = {snap.time:g} "
                 f"({snap.n_elements} elements)")
    fig.savefig(out, dpi=150, bbox_inches="tight")
    plt.close(fig)
    hist = np.bincount(snap.levels)
    return {int(k): int(v) for k, v in enumerate(hist) if v}


def cut_samples(snap: Snapshot, field, line, band=None):
    """Nodal samples within a band of the cut line, projected on x.

    line = (x0, y0, x1, y1); band defaults to a fraction of the smallest
    nodal spacing so each sampled node keeps its exact value.
    """
    x0, y0, x1, y1 = line
    vals = evaluate(snap, field)
    dx, dy = x1 - x0, y1 - y0
    L = float(np.hypot(dx, dy))
    if L == 0:
        raise ValueError("degenerate cut line")
    nx, ny = -dy / L, dx / L
    dist = (snap.x - x0) * nx + (snap.y - y0) * ny
    s = ((snap.x - x0) * dx + (snap.y - y0) * dy) / L ** 2
    if band is None:
        # half the typical subcell size of the finest elements
        h = np.sqrt(np.abs(snap.detJ)).min()
        band = max(h, 1e-12)
    mask = (np.abs(dist) <= band) & (s >= -1e-12) & (s <= 1 + 1e-12)
    proj = snap.x[mask]     # projection onto the x axis
    order = np.argsort(proj)
    return proj[order], vals[mask][order]


def cut_plot(snap: Snapshot, field, line, out, label=None, overlays=(),
             band=None):
    """Scatter of nodal values along a cut, projected onto the x axis.

    overlays: extra (snapshot, label) pairs drawn on the same axes (the
    blast AMR-vs-uniform comparison)."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    px, pv = cut_samples(snap, field, line, band=band)
    ax.plot(px, pv, ".-", ms=3, lw=0.7, label=label or "solution")
    for other, lbl in overlays:
        ox, ov = cut_samples(other, field, line, band=band)
        ax.plot(ox, ov, "x--", ms=3, lw=0.7, label=lbl)
    ax.set_xlabel("x")
    ax.set_ylabel(field)
    ax.legend()
    ax.set_title(f"{field} along the cut, t = {snap.time:g}")
    fig.savefig(out, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return len(px)


def eoc_and_timing_plots(csv_paths, out, labels=None):
    """Error-versus-wall-clock curves from convergence CSV files.

    Each CSV needs columns n, l2, linf, wall; one curve per file.
    """
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.5))
    labels = labels or [str(p) for p in csv_paths]
    for path, lbl in zip(csv_paths, labels):
        with open(path) as f:
            rows = list(csv.DictReader(f))
        if not rows:
            raise ValueError(f"{path}: empty csv")
        for col in ("n", "l2", "linf", "wall"):
            if col not in rows[0]:
                raise ValueError(f"{path}: missing column {col!r}")
        wall = np.array([float(r["wall"]) for r in rows])
        l2 = np.array([float(r["l2"]) for r in rows])
        linf = np.array([float(r["linf"]) for r in rows])
        ax1.loglog(wall, l2, "o-", label=lbl)
        ax2.loglog(wall, linf, "s-", label=lbl)
    for ax, name in ((ax1, "L2 error"), (ax2, "Linf error")):
        ax.set_xlabel("wall-clock time [s]")
        ax.set_ylabel(name)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
    fig.savefig(out, dpi=150, bbox_inches="tight")
    plt.close(fig)
