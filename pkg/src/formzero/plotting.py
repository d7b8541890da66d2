"""Figures rendered next to CLI reports (Agg backend, no display needed)."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .framework import Framework


def _new(width=5.0, height=4.5):
    fig = Figure(figsize=(width, height), dpi=120)
    FigureCanvasAgg(fig)
    return fig, fig.add_subplot(1, 1, 1)


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, bbox_inches="tight", metadata={"Software": None})
    return path


def plot_polygon(fw: Framework, poly, path, missing_edges=()) -> Path:
    """Formation, zero loci and the shaded transmission polygon."""
    fig, ax = _new()
    pts = fw.positions
    lo = np.minimum(poly.vertices.min(axis=0), pts.min(axis=0))
    hi = np.maximum(poly.vertices.max(axis=0), pts.max(axis=0))
    margin = 0.15 * float(np.max(hi - lo)) + 0.5
    lo, hi = lo - margin, hi + margin

    ax.fill(poly.vertices[:, 0], poly.vertices[:, 1], color="tab:green", alpha=0.25, lw=0,
            label="transmission polygon")
    span = float(np.max(hi - lo)) * 2.0
    for h in poly.halfplanes:
        a, b, c = h.line()
        nrm = np.hypot(a, b)
        foot = np.array([a, b]) * c / nrm**2
        d = np.array([-b, a]) / nrm
        seg = np.array([foot - span * d, foot + span * d])
        ax.plot(seg[:, 0], seg[:, 1], "--", color="tab:red", lw=1.0)
        ax.annotate(f"L{h.node_id}", foot, color="tab:red", fontsize=8)
    for a, b in fw.edge_index:
        ax.plot(pts[[a, b], 0], pts[[a, b], 1], color="0.5", lw=1.5)
    for a, b in missing_edges:
        ia, ib = fw.index_of(a), fw.index_of(b)
        ax.plot(pts[[ia, ib], 0], pts[[ia, ib], 1], ":", color="k", lw=1.0)
    ax.scatter(pts[:, 0], pts[:, 1], color="k", zorder=3, s=18)
    for k, node_id in enumerate(fw.ids):
        ax.annotate(f"p{node_id}", pts[k], textcoords="offset points", xytext=(4, 4), fontsize=8)
    ax.plot(*fw.centroid, "x", color="tab:red", ms=7)
    ax.set_xlim(lo[0], hi[0])
    ax.set_ylim(lo[1], hi[1])
    ax.set_aspect("equal")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.grid(True, ls=":", alpha=0.5)
    ax.set_title(f"{fw.spec.name}: zero loci" + ("" if poly.bounded else " (clipped, unbounded)"))
    return _save(fig, path)


def plot_frequency_response(tables, path, labels=None) -> Path:
    """Log-log singular values of j*omega*G_ji(j*omega) for one or more tables."""
    fig, ax = _new(5.0, 4.0)
    if not isinstance(tables, (list, tuple)):
        tables = [tables]
    labels = labels or [f"{t.actuator}->{t.sensor}" for t in tables]
    for k, (tab, lab) in enumerate(zip(tables, labels)):
        color = f"C{k}"
        ax.loglog(tab.omega, tab.sigma_max, color=color, label=f"{lab} sigma_max")
        ax.loglog(tab.omega, np.maximum(tab.sigma_min, 1e-300), "--", color=color, label=f"{lab} sigma_min")
    ax.set_xlabel("frequency [rad/s]")
    ax.set_ylabel("magnitude")
    ax.grid(True, which="both", ls=":", alpha=0.4)
    ax.legend(fontsize=7, loc="lower right")
    return _save(fig, path)


def plot_simulation(sim, path) -> Path:
    fig, ax = _new(5.5, 3.5)
    ax.plot(sim.t, sim.y[:, 0], label="y1")
    ax.plot(sim.t, sim.y[:, 1], label="y2")
    ax.set_xlabel("t [s]")
    ax.set_ylabel(f"displacement of node {sim.sensor}")
    kind = "nonlinear" if sim.nonlinear else "linearized"
    ax.set_title(f"{kind}, disturbance at node {sim.actuator}", fontsize=9)
    ax.grid(True, ls=":", alpha=0.5)
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_determinant_histogram(report, path) -> Path:
    fig, ax = _new(5.5, 3.5)
    edges = report.histogram_edges
    ax.bar(edges[:-1], report.histogram_counts, width=np.diff(edges), align="edge",
           color="tab:blue", edgecolor="k", lw=0.4)
    ax.axvline(np.log10(report.zero_cut), color="tab:red", ls="--", lw=1.0, label="zero cut")
    ax.set_xlabel("log10 |det DC gain|")
    ax.set_ylabel("samples")
    ax.set_title(f"{report.graph}, pair ({report.actuator}, {report.sensor}), N={report.samples}", fontsize=9)
    ax.legend(fontsize=8)
    return _save(fig, path)
