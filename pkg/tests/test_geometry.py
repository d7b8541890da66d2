import itertools
import math
import warnings
from fractions import Fraction

import numpy as np
import pytest

from formzero.dcgain import transmission_zero_test
from formzero.errors import CentroidActuator, CentroidNodeSkipped
from formzero.framework import FormationSpec, build_framework, modal_decomposition
from formzero.geometry import (
    Placement,
    locus_residual,
    polygon_membership,
    spatial_locus,
    transmission_polygon,
)

from conftest import QUAD_POSITIONS
from factories import random_rigid_spec

QUAD_VERTICES = [(2.5, -1.0), (4 / 9, 28 / 9), (-8 / 3, 0.0), (-8 / 13, -40 / 13)]


def exact_vertices(positions):
    """Pairwise line intersections in rational arithmetic, filtered by every constraint."""
    pts = [(Fraction(x), Fraction(y)) for x, y in positions]
    n = len(pts)
    cx = sum(p[0] for p in pts) / n
    cy = sum(p[1] for p in pts) / n
    J = sum((x - cx) ** 2 + (y - cy) ** 2 for x, y in pts)
    # <p_i - c, x - c> >= -J/n  <=>  a x + b y >= a cx + b cy - J/n
    lines = [(x - cx, y - cy, (x - cx) * cx + (y - cy) * cy - J / n) for x, y in pts]
    out = set()
    for (a1, b1, c1), (a2, b2, c2) in itertools.combinations(lines, 2):
        det = a1 * b2 - a2 * b1
        if det == 0:
            continue
        v = ((c1 * b2 - c2 * b1) / det, (a1 * c2 - a2 * c1) / det)
        if all(a * v[0] + b * v[1] >= c for a, b, c in lines):
            out.add(v)
    return sorted(out)


def as_sorted(arr):
    return sorted(tuple(map(float, v)) for v in arr)


# -- locus -------------------------------------------------------------------------

def test_quad_locus_line(quad_fw):
    a, b, c = spatial_locus(quad_fw, 1).line()
    assert (a / a, b / a, c / a) == (1.0, pytest.approx(2 / 3), pytest.approx(-8 / 3))
    assert (1.5, 1.0, -4.0) == (a, b, c)


def test_quad_rank_loss_geometry(quad_fw):
    p1, p2 = quad_fw.relative(1), quad_fw.relative(2)
    assert p1 @ p2 == -4.0 == -quad_fw.polar_inertia / quad_fw.n
    assert locus_residual(quad_fw, 1, quad_fw.positions[1]) == 0.0


def test_residual_examples(quad_fw):
    assert locus_residual(quad_fw, 1, quad_fw.centroid) == 1.0
    assert locus_residual(quad_fw, 1, quad_fw.positions[0]) == 1.8125


def test_triangle_residual(triangle_fw):
    fw = triangle_fw
    expected = 1 + fw.n / fw.polar_inertia * float(fw.relative(1) @ fw.relative(2))
    assert locus_residual(fw, 1, fw.positions[1]) == pytest.approx(expected, abs=1e-15)
    # equal sides: <r1, r2> = (1/3) cos 120 deg = -1/6
    assert expected == pytest.approx(0.5, abs=1e-14)


def test_centroid_actuator_raises():
    fw = build_framework(FormationSpec.from_arrays(
        "hub", [(1, 0), (0, 1), (-1, 0), (0, -1), (0, 0)], [(1, 2), (2, 3), (3, 4), (4, 1), (1, 5), (2, 5), (3, 5)]))
    with pytest.raises(CentroidActuator):
        spatial_locus(fw, 5)
    with pytest.warns(CentroidNodeSkipped):
        poly = transmission_polygon(fw)
    assert poly.skipped == [5]
    assert len(poly.halfplanes) == 4


def test_collocated_residual_at_least_one():
    rng = np.random.default_rng(21)
    for _ in range(50):
        n = int(rng.integers(2, 9))
        pos = rng.uniform(-4, 4, size=(n, 2))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fw = build_framework(FormationSpec.from_arrays("r", pos, [(1, 2)]))
        for k, i in enumerate(fw.ids):
            assert locus_residual(fw, i, fw.positions[k]) >= 1.0


def test_residual_symmetric_in_pair():
    rng = np.random.default_rng(22)
    for _ in range(30):
        fw = build_framework(random_rigid_spec(rng, int(rng.integers(3, 8))))
        for a, b in itertools.permutations(fw.ids, 2):
            ra = locus_residual(fw, a, fw.positions[fw.index_of(b)])
            rb = locus_residual(fw, b, fw.positions[fw.index_of(a)])
            assert ra == pytest.approx(rb, abs=1e-12)


def test_locus_scales_with_formation(quad_fw):
    for s in (0.1, 3.0, 250.0):
        scaled = build_framework(quad_fw.spec.with_positions(s * quad_fw.positions))
        a, b, c = spatial_locus(scaled, 1).line()
        a0, b0, c0 = spatial_locus(quad_fw, 1).line()
        assert (a, b, c) == pytest.approx((s * a0, s * b0, s * s * c0), rel=1e-13)


# -- polygon -------------------------------------------------------------------------

def test_quad_polygon(quad_fw):
    poly = transmission_polygon(quad_fw)
    assert poly.bounded
    assert len(poly.vertices) == 4
    assert np.max(np.abs(np.array(as_sorted(poly.vertices)) - np.array(sorted(QUAD_VERTICES)))) < 1e-9
    oracle = [(float(x), float(y)) for x, y in exact_vertices(QUAD_POSITIONS)]
    assert np.max(np.abs(np.array(as_sorted(poly.vertices)) - np.array(oracle))) < 1e-12


def test_quad_membership(quad_fw):
    poly = transmission_polygon(quad_fw)
    labels = [str(polygon_membership(poly, p)) for p in quad_fw.positions]
    assert labels == ["Boundary({2})", "Boundary({1})", "Interior", "Interior"]
    assert polygon_membership(poly, quad_fw.centroid).placement is Placement.INTERIOR
    far = polygon_membership(poly, (10.0, 10.0))
    assert far.placement is Placement.EXTERIOR


def test_vertex_constraints_and_orientation(quad_fw):
    poly = transmission_polygon(quad_fw)
    for ids in poly.vertex_constraints():
        assert len(ids) == 2
    v = poly.vertices
    area = 0.5 * np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
    assert area > 0


def test_two_node_strip_unbounded():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fw = build_framework(FormationSpec.from_arrays("seg", [(-1, 0), (1, 0)], [(1, 2)]))
    poly = transmission_polygon(fw, clip_box=5.0)
    assert not poly.bounded
    # strip |x| <= 1 (J/n = 1), clipped by the square of half-width 5
    assert as_sorted(poly.vertices) == as_sorted([(-1, -5), (1, -5), (1, 5), (-1, 5)])


def test_random_polygons_match_rational_oracle():
    rng = np.random.default_rng(23)
    checked = 0
    for _ in range(40):
        spec = random_rigid_spec(rng, int(rng.integers(3, 9)))
        fw = build_framework(spec)
        poly = transmission_polygon(fw, clip_box=1e6)
        oracle = exact_vertices([tuple(p) for p in fw.positions])
        if not poly.bounded:
            continue
        got = np.array(as_sorted(poly.vertices))
        want = np.array([(float(x), float(y)) for x, y in oracle])
        # collapse near-duplicate oracle vertices (three loci through one point)
        want = np.unique(np.round(want, 9), axis=0)
        assert got.shape == want.shape
        assert np.max(np.abs(np.unique(np.round(got, 9), axis=0) - want)) < 1e-8
        checked += 1
    assert checked > 20


def test_membership_matches_zero_test():
    """Sensors outside the polygon or on it are exactly the ones a locus passes through or beyond."""
    rng = np.random.default_rng(24)
    for _ in range(30):
        fw = build_framework(random_rigid_spec(rng, int(rng.integers(3, 8))))
        md = modal_decomposition(fw)
        poly = transmission_polygon(fw)
        for j in fw.ids:
            m = polygon_membership(poly, fw.positions[fw.index_of(j)])
            zeros = [i for i in fw.ids if transmission_zero_test(md, i, j).is_zero]
            if m.placement is Placement.INTERIOR:
                assert zeros == []
            if zeros:
                assert m.placement is Placement.BOUNDARY and set(zeros) <= set(m.node_ids)


def test_centroid_always_interior():
    rng = np.random.default_rng(25)
    for _ in range(30):
        fw = build_framework(random_rigid_spec(rng, int(rng.integers(3, 9))))
        poly = transmission_polygon(fw)
        m = polygon_membership(poly, fw.centroid)
        assert m.placement is Placement.INTERIOR
        assert all(math.isclose(h.value(fw.centroid), fw.polar_inertia / fw.n) for h in poly.halfplanes)
