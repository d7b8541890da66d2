"""Report payloads for each CLI command, renderable as JSON or CSV."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from . import io as fio
from .dcgain import ZeroTestResult, kernel_projector, pinned_check, transmission_zero_test
from .errors import NoPivotFound
from .dynamics import FrequencyResponseTable, SimResult
from .framework import ModalDecomposition, nullspace_via_pivot, rigidity_matrix
from .genericity import GenericityReport
from .geometry import TransmissionPolygon, locus_residual, polygon_membership, spatial_locus


@dataclass
class Report:
    payload: dict
    header: list
    rows: list
    comments: list = field(default_factory=list)
    footer: list = field(default_factory=list)

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return fio.dumps_json(self.payload)
        return fio.dumps_csv(self.header, self.rows, self.comments, self.footer)


def _pinned_names(flags: dict) -> list[str]:
    return [name for name, v in flags.items() if v]


def analyze_report(md: ModalDecomposition) -> Report:
    fw = md.framework
    R = rigidity_matrix(fw, fw.target)
    lam, _ = md.deformational
    pinned = {str(k): _pinned_names(pinned_check(md, k)) for k in fw.ids}
    try:
        angle = float(np.max(sla.subspace_angles(nullspace_via_pivot(fw), md.kernel_basis)))
    except NoPivotFound as exc:  # reported, not fatal for the summary
        angle = None
        pivot_note = type(exc).__name__
    else:
        pivot_note = None
    payload = {
        "formation": fw.spec.name,
        "nodes": fw.n,
        "edges": len(fw.edge_index),
        "centroid": fw.centroid,
        "polar_inertia": fw.polar_inertia,
        "rigidity_class": "infinitesimally rigid" if md.is_rigid else "flexible",
        "rank": 2 * fw.n - md.kernel_dim,
        "kernel_dim": md.kernel_dim,
        "n_f": md.n_f,
        "zero_threshold": md.zero_threshold,
        "eigenvalues": md.eigenvalues,
        "eigenvalue_summary": {
            "zero_count": md.kernel_dim,
            "slowest_nonzero": float(-np.max(lam)) if len(lam) else None,
            "fastest": float(-np.min(lam)) if len(lam) else None,
            "rigidity_matrix_norm": float(np.linalg.norm(R, 2)) if R.size else 0.0,
        },
        "pinned_modes": pinned,
        "pinned_nodes": [int(k) for k in fw.ids if pinned[str(k)]],
        "pivot_kernel_max_angle": angle,
        "pivot_kernel_error": pivot_note,
    }
    rows = [[k, v] for k, v in payload.items() if not isinstance(v, (dict, np.ndarray))]
    rows += [[f"eigenvalue_{m}", v] for m, v in enumerate(md.eigenvalues)]
    rows += [[f"pinned_{k}", v] for k, v in pinned.items()]
    return Report(payload, ["key", "value"], rows)


DCGAIN_HEADER = [
    "actuator", "sensor", "verdict", "det_direct", "det_sylvester", "det_schur", "schur_scalar",
    "det_tolerance", "routes_agree", "rank", "trace", "blocked_direction_x", "blocked_direction_y",
    "pinned_actuator", "pinned_sensor", "p00", "p01", "p10", "p11",
]


def dcgain_row(r: ZeroTestResult) -> dict:
    u = r.block.blocked_direction
    b = r.block.block
    return {
        "actuator": r.actuator,
        "sensor": r.sensor,
        "verdict": r.verdict.value,
        "det_direct": r.det_direct,
        "det_sylvester": r.det_sylvester,
        "det_schur": r.det_schur,
        "schur_scalar": r.coupling.schur_scalar,
        "det_tolerance": r.det_tolerance,
        "routes_agree": r.routes_agree,
        "rank": r.block.rank,
        "trace": r.block.trace,
        "blocked_direction_x": None if u is None else float(u[0]),
        "blocked_direction_y": None if u is None else float(u[1]),
        "pinned_actuator": _pinned_names(r.pinned_actuator),
        "pinned_sensor": _pinned_names(r.pinned_sensor),
        "p00": b[0, 0], "p01": b[0, 1], "p10": b[1, 0], "p11": b[1, 1],
    }


def dcgain_report(md: ModalDecomposition, pairs, strict: bool = True) -> Report:
    P = kernel_projector(md)
    results = [dcgain_row(transmission_zero_test(md, i, j, strict=strict, projector=P)) for i, j in pairs]
    payload = {
        "formation": md.framework.spec.name,
        "rigidity_class": "infinitesimally rigid" if md.is_rigid else "flexible",
        "n_f": md.n_f,
        "pairs": results,
    }
    return Report(payload, DCGAIN_HEADER, [[row[k] for k in DCGAIN_HEADER] for row in results])


def locus_report(md: ModalDecomposition, i: int) -> Report:
    fw = md.framework
    h = spatial_locus(fw, i)
    a, b, c = h.line()
    residuals = []
    for k in fw.ids:
        res = locus_residual(fw, i, fw.positions[fw.index_of(k)])
        residuals.append({"node": k, "residual": res, "on_locus": bool(abs(res) < 1e-9)})
    payload = {
        "formation": fw.spec.name,
        "actuator": i,
        "rigidity_class": "infinitesimally rigid" if md.is_rigid else "flexible",
        "normal": h.normal,
        "offset": h.offset,
        "line": {"a": a, "b": b, "c": c},
        "centroid": fw.centroid,
        "polar_inertia": fw.polar_inertia,
        "residuals": [r for r in residuals if r["node"] != i],
        "collocated_residual": next(r["residual"] for r in residuals if r["node"] == i),
    }
    rows = [[r["node"], r["residual"], r["on_locus"]] for r in residuals]
    return Report(payload, ["node", "residual", "on_locus"], rows, comments=[["line", a, b, c]])


def polygon_report(md: ModalDecomposition, poly: TransmissionPolygon) -> Report:
    fw = md.framework
    membership = []
    for k in fw.ids:
        m = polygon_membership(poly, fw.positions[fw.index_of(k)])
        membership.append({"node": k, "placement": m.placement.value, "node_ids": list(m.node_ids),
                           "label": str(m)})
    cm = polygon_membership(poly, fw.centroid)
    payload = {
        "formation": fw.spec.name,
        "rigidity_class": "infinitesimally rigid" if md.is_rigid else "flexible",
        "halfplanes": [{"node": h.node_id, "normal": h.normal, "offset": h.offset} for h in poly.halfplanes],
        "vertices": poly.vertices,
        "vertex_count": len(poly.vertices),
        "edge_labels": [str(x) for x in poly.edge_labels],
        "bounded": poly.bounded,
        "clip_box": poly.clip_box,
        "centroid": fw.centroid,
        "centroid_membership": str(cm),
        "skipped_nodes": poly.skipped,
        "membership": membership,
    }
    return Report(payload, ["x", "y"], [list(v) for v in poly.vertices],
                  comments=[["bounded", poly.bounded]])


def freqresp_report(table: FrequencyResponseTable, name: str) -> Report:
    payload = {
        "formation": name,
        "actuator": table.actuator,
        "sensor": table.sensor,
        "omega": table.omega,
        "sigma_min": table.sigma_min,
        "sigma_max": table.sigma_max,
    }
    rows = [[w, lo, hi] for w, lo, hi in zip(table.omega, table.sigma_min, table.sigma_max)]
    return Report(payload, ["omega", "sigma_min", "sigma_max"], rows)


def simulation_report(sim: SimResult, name: str) -> Report:
    payload = {
        "formation": name,
        "actuator": sim.actuator,
        "sensor": sim.sensor,
        "w": sim.w,
        "nonlinear": sim.nonlinear,
        "step": sim.step,
        "t": sim.t,
        "y": sim.y,
        "drift_estimate": sim.drift_estimate,
    }
    rows = [[t, y[0], y[1]] for t, y in zip(sim.t, sim.y)]
    return Report(payload, ["t", "y1", "y2"], rows,
                  footer=[["drift_estimate", sim.drift_estimate[0], sim.drift_estimate[1]]])


def montecarlo_report(rep: GenericityReport) -> Report:
    b = rep.bisection
    bis = None if b is None else {
        "found": b.found,
        "det": b.det,
        "segments_tried": b.segments_tried,
        "parameter": b.parameter,
        "configuration": b.configuration,
    }
    payload = {
        "graph": rep.graph,
        "actuator": rep.actuator,
        "sensor": rep.sensor,
        "samples": rep.samples,
        "seed": rep.seed,
        "box": rep.box,
        "zero_cut": rep.zero_cut,
        "generic_kernel_dim": rep.generic_kernel_dim,
        "n_f": rep.n_f,
        "near_zero_count": rep.near_zero_count,
        "min_abs_det": rep.min_abs_det,
        "degenerate_count": rep.degenerate_count,
        "degenerate_reasons": rep.degenerate_reasons,
        "histogram": {"edges": rep.histogram_edges, "counts": rep.histogram_counts},
        "bisection": bis,
        "determinants": rep.determinants,
    }
    edges = rep.histogram_edges
    rows = [[lo, hi, c] for lo, hi, c in zip(edges[:-1], edges[1:], rep.histogram_counts)]
    return Report(payload, ["log10_det_lo", "log10_det_hi", "count"], rows,
                  comments=[["near_zero_count", rep.near_zero_count], ["min_abs_det", rep.min_abs_det]])
