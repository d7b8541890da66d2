"""Zero loci, safe half-planes and the transmission polygon of a rigid formation."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import CentroidActuator, CentroidNodeSkipped, EmptyIntersection
from .framework import Framework

BOUNDARY_TOL = 1e-9
BOX = "box"


@dataclass(frozen=True, eq=False)
class HalfPlane:
    """Safe side ``<normal, x - centroid> > offset`` of actuator ``node_id``'s zero locus."""

    node_id: int
    normal: np.ndarray
    offset: float
    centroid: np.ndarray

    def value(self, x) -> float:
        return float(self.normal @ (np.asarray(x, dtype=float) - self.centroid) - self.offset)

    def signed_distance(self, x) -> float:
        return self.value(x) / float(np.linalg.norm(self.normal))

    def line(self) -> tuple[float, float, float]:
        """Coefficients ``(a, b, c)`` of the locus ``a*x1 + b*x2 = c``."""
        a, b = self.normal
        return float(a), float(b), float(self.normal @ self.centroid + self.offset)


def spatial_locus(fw: Framework, i: int) -> HalfPlane:
    normal = fw.relative(i)
    if not np.any(normal):
        raise CentroidActuator(f"node {i} sits at the centroid; its zero locus is undefined")
    return HalfPlane(i, normal, -fw.polar_inertia / fw.n, np.array(fw.centroid))


def locus_residual(fw: Framework, i: int, x) -> float:
    """``1 + (n/J_p) <p_i - p_cm, x - p_cm>``: zero on the locus, positive on the safe side."""
    rel = np.asarray(x, dtype=float) - fw.centroid
    return 1.0 + fw.n / fw.polar_inertia * float(fw.relative(i) @ rel)


@dataclass(frozen=True, eq=False)
class TransmissionPolygon:
    halfplanes: list[HalfPlane]
    vertices: np.ndarray            # counterclockwise, m x 2
    edge_labels: list               # label of edge vertices[k] -> vertices[k+1]
    bounded: bool
    clip_box: float
    centroid: np.ndarray
    skipped: list[int] = field(default_factory=list)

    def vertex_constraints(self, tol: float = BOUNDARY_TOL) -> list[list[int]]:
        """Node ids whose locus passes through each vertex."""
        out = []
        for v in self.vertices:
            out.append([h.node_id for h in self.halfplanes if abs(h.signed_distance(v)) <= tol * max(1.0, np.abs(v).max())])
        return out


def _clip(vertices, labels, h: HalfPlane):
    """Clip a convex CCW polygon by one half-plane, tracking edge provenance."""
    out_v, out_l = [], []
    m = len(vertices)
    s = [h.value(v) for v in vertices]
    for k in range(m):
        cur, nxt = vertices[k], vertices[(k + 1) % m]
        sc, sn = s[k], s[(k + 1) % m]
        if sc >= 0.0:
            out_v.append(cur)
            out_l.append(labels[k])
            if sn < 0.0:
                t = sc / (sc - sn)
                out_v.append(cur + t * (nxt - cur))
                out_l.append(h.node_id)
        elif sn >= 0.0:
            t = sc / (sc - sn)
            out_v.append(cur + t * (nxt - cur))
            out_l.append(labels[k])
    return out_v, out_l


def _dedupe(vertices, labels, tol):
    if not vertices:
        return vertices, labels
    keep_v, keep_l = [vertices[0]], [labels[0]]
    for v, lab in zip(vertices[1:], labels[1:]):
        if np.linalg.norm(v - keep_v[-1]) <= tol:
            keep_l[-1] = lab
        else:
            keep_v.append(v)
            keep_l.append(lab)
    while len(keep_v) > 1 and np.linalg.norm(keep_v[0] - keep_v[-1]) <= tol:
        keep_v.pop()
        keep_l.pop()
    return keep_v, keep_l


def transmission_polygon(fw: Framework, clip_box: float | None = None) -> TransmissionPolygon:
    """Intersection of all safe half-planes, clipped to a square around the centroid.

    ``bounded`` is False when any side of the clipping square survives.
    """
    spread = float(np.max(np.linalg.norm(fw.positions - fw.centroid, axis=1)))
    if clip_box is None:
        clip_box = 4.0 * spread
    if clip_box <= 0:
        raise ValueError("clip_box must be positive")

    halfplanes, skipped = [], []
    for node_id in fw.ids:
        try:
            halfplanes.append(spatial_locus(fw, node_id))
        except CentroidActuator:
            skipped.append(node_id)
            warnings.warn(f"node {node_id} at the centroid is excluded from the polygon", CentroidNodeSkipped, stacklevel=2)

    c = np.array(fw.centroid)
    b = float(clip_box)
    verts = [c + np.array(d) for d in ((-b, -b), (b, -b), (b, b), (-b, b))]
    labels = [BOX] * 4
    tol = 1e-12 * max(b, 1.0)
    for h in halfplanes:
        verts, labels = _clip(verts, labels, h)
        verts, labels = _dedupe(verts, labels, tol)
        if len(verts) < 3:
            raise EmptyIntersection("half-plane intersection collapsed; the centroid should always be inside")

    bounded = BOX not in labels
    return TransmissionPolygon(halfplanes, np.array(verts), labels, bounded, b, c, skipped)


class Placement(str, enum.Enum):
    INTERIOR = "Interior"
    BOUNDARY = "Boundary"
    EXTERIOR = "Exterior"


@dataclass(frozen=True)
class Membership:
    placement: Placement
    node_ids: tuple[int, ...] = ()

    def __str__(self) -> str:
        if self.placement is Placement.INTERIOR:
            return "Interior"
        return f"{self.placement.value}({{{', '.join(map(str, self.node_ids))}}})"


def polygon_membership(poly: TransmissionPolygon, x, tol: float = BOUNDARY_TOL) -> Membership:
    """Where ``x`` lies relative to every safe half-plane.

    Exterior lists the violated constraints; Boundary lists the binding ones.
    """
    dist = [(h.node_id, h.signed_distance(x)) for h in poly.halfplanes]
    outside = tuple(k for k, d in dist if d < -tol)
    if outside:
        return Membership(Placement.EXTERIOR, outside)
    binding = tuple(k for k, d in dist if abs(d) <= tol)
    if binding:
        return Membership(Placement.BOUNDARY, binding)
    return Membership(Placement.INTERIOR)
