import warnings

import numpy as np
import pytest
from scipy.linalg import null_space

from formzero import dcgain
from formzero.dcgain import (
    Verdict,
    cross_coupling,
    dc_gain_block,
    kernel_projector,
    pinned_check,
    projector_block,
    relative_route_disagreement,
    transmission_zero_test,
)
from formzero.errors import RouteDisagreement, SchurUnavailable
from formzero.framework import FormationSpec, build_framework, modal_decomposition, rigidity_matrix

from factories import random_flexible_spec, random_rigid_spec

P0_21 = np.array([[0.1875, 0.09375], [0.125, 0.0625]])


def random_mds(seed, count, flexible_every=2):
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        n = int(rng.integers(3, 9))
        spec = random_flexible_spec(rng, n) if k % flexible_every == 0 else random_rigid_spec(rng, n)
        out.append(modal_decomposition(build_framework(spec)))
    return out


# -- kernel projector --------------------------------------------------------

def test_quad_block_value(quad_md):
    P = kernel_projector(quad_md)
    assert np.max(np.abs(projector_block(P, quad_md, 1, 2) - P0_21)) < 1e-12


def test_projector_matches_null_space_oracle(quad_md, fourbar_md):
    for md in (quad_md, fourbar_md):
        fw = md.framework
        K = null_space(rigidity_matrix(fw, fw.target))
        assert np.max(np.abs(kernel_projector(md) - K @ K.T)) < 1e-12


def test_projector_trace_is_kernel_dim(fixture_md):
    assert np.trace(kernel_projector(fixture_md)) == pytest.approx(fixture_md.kernel_dim, abs=1e-12)


def test_segment_projector():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fw = build_framework(FormationSpec.from_arrays("seg", [(-1, 0), (1, 0)], [(1, 2)]))
    md = modal_decomposition(fw)
    # 1/2 I from translations, rotation component (0, -1)/sqrt(2) at node 1
    expected = 0.5 * np.eye(2) + np.outer([0, -1], [0, -1]) / 2
    assert np.allclose(projector_block(kernel_projector(md), md, 1, 1), expected, atol=1e-14)


def test_projector_laws_random():
    for md in random_mds(3, 40):
        fw = md.framework
        P = kernel_projector(md)
        R = rigidity_matrix(fw, fw.target)
        assert np.max(np.abs(P @ P - P)) < 1e-10
        assert np.max(np.abs(P - P.T)) == 0.0
        assert np.max(np.abs(R @ P)) < 1e-9 * np.linalg.norm(R, 2)


# -- dc gain block -------------------------------------------------------------

def test_quad_rank_loss(quad_md):
    b = dc_gain_block(quad_md, 1, 2)
    assert b.rank == 1
    assert abs(b.determinant) < 1e-15
    assert np.allclose(b.blocked_direction, np.array([1, -2]) / np.sqrt(5), atol=1e-12)
    assert np.linalg.norm(b.block @ b.blocked_direction) <= 1e-10 * np.linalg.norm(b.block, 2)


def test_fourbar_full_rank(fourbar_md):
    b = dc_gain_block(fourbar_md, 1, 2)
    assert b.rank == 2
    assert b.blocked_direction is None


def test_collocated_full_rank(fixture_md):
    for k in fixture_md.framework.ids:
        b = dc_gain_block(fixture_md, k, k)
        assert b.rank == 2
        assert b.trace >= 2 / fixture_md.framework.n - 1e-12


# -- cross coupling --------------------------------------------------------------

def test_cross_coupling_rigid_examples(quad_md):
    cc = cross_coupling(quad_md, 1, 2)
    assert cc.H.shape == (1, 1)
    assert cc.psi_rr == -0.25
    assert cc.H[0, 0] == 0.0
    assert cc.schur_scalar == cc.H[0, 0]

    cc = cross_coupling(quad_md, 1, 3)
    assert cc.psi_rr == 0.046875
    assert cc.H[0, 0] == 1.1875


def test_cross_coupling_flexible_shapes(fourbar_md):
    cc = cross_coupling(fourbar_md, 1, 2)
    assert cc.H.shape == (2, 2)
    assert cc.psi_rz.shape == (1, 1) and cc.psi_zr.shape == (1, 1)
    assert cc.schur_available


def test_schur_unavailable_surface(fourbar_md, monkeypatch):
    monkeypatch.setattr(dcgain, "SCHUR_MAX_COND", 0.5)
    cc = cross_coupling(fourbar_md, 1, 2)
    assert cc.schur_scalar is None
    assert np.isfinite(cc.det_H)
    with pytest.raises(SchurUnavailable) as info:
        cross_coupling(fourbar_md, 1, 2, strict=True)
    assert info.value.coupling.det_H == cc.det_H


# -- zero test ---------------------------------------------------------------------

def test_zero_test_quad(quad_md):
    r = transmission_zero_test(quad_md, 1, 2)
    assert r.verdict is Verdict.ZERO
    for d in (r.det_direct, r.det_sylvester, r.det_schur):
        assert abs(d) < 1e-15
    r = transmission_zero_test(quad_md, 1, 3)
    assert r.verdict is Verdict.FULL_RANK
    assert r.det_sylvester == 0.07421875
    assert r.det_direct == pytest.approx(0.07421875, abs=1e-15)


def test_reciprocity_quad(quad_md):
    ids = quad_md.framework.ids
    for i in ids:
        for j in ids:
            a = transmission_zero_test(quad_md, i, j)
            b = transmission_zero_test(quad_md, j, i)
            assert a.verdict == b.verdict


def test_route_disagreement_surface(quad_md, monkeypatch):
    monkeypatch.setattr(dcgain, "ROUTE_REL_TOL", -1.0)
    with pytest.warns(RuntimeWarning):
        r = transmission_zero_test(quad_md, 1, 3)
    assert not r.routes_agree
    with pytest.raises(RouteDisagreement) as info:
        transmission_zero_test(quad_md, 1, 3, strict=True)
    assert info.value.details()["det_sylvester"] == 0.07421875


def test_sylvester_and_schur_random():
    for md in random_mds(5, 60):
        P = kernel_projector(md)
        for i in md.framework.ids:
            for j in md.framework.ids:
                r = transmission_zero_test(md, i, j, projector=P)
                cc = r.coupling
                assert abs(r.det_direct - cc.det_H / md.framework.n**2) < 1e-9 * (1 + abs(cc.det_H))
                if cc.schur_available:
                    assert abs(cc.det_H - cc.det_M * cc.schur_scalar) < 1e-9 * (1 + abs(cc.det_H))
                assert relative_route_disagreement(r) < 1e-8


def test_rigid_reciprocity_random():
    for md in random_mds(6, 30, flexible_every=10**9):
        ids = md.framework.ids
        for i in ids:
            for j in ids:
                a = transmission_zero_test(md, i, j)
                b = transmission_zero_test(md, j, i)
                assert a.verdict == b.verdict
                assert np.sign(a.det_direct) == np.sign(b.det_direct)


def test_zero_determinant_means_rank_one(quad_md):
    r = transmission_zero_test(quad_md, 2, 1)
    assert r.is_zero and r.block.rank == 1


# -- pinned check ---------------------------------------------------------------------

def test_pinned_centroid_node():
    pos = [(1, 0), (0, 1), (-1, 0), (0, -1), (0, 0)]
    edges = [(1, 2), (2, 3), (3, 4), (4, 1), (1, 5), (2, 5), (3, 5)]
    md = modal_decomposition(build_framework(FormationSpec.from_arrays("hub", pos, edges)))
    flags = pinned_check(md, 5)
    assert flags["v_r"] is True
    assert flags["v_x"] is False and flags["v_y"] is False
    assert pinned_check(md, 1)["v_r"] is False


def test_quad_nodes_not_pinned(quad_md, fourbar_md):
    for md in (quad_md, fourbar_md):
        for k in md.framework.ids:
            flags = pinned_check(md, k)
            assert not any(flags.values())
            assert set(flags) == set(md.mode_names())
