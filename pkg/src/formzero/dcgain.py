"""Steady-state (DC) gain between an actuated node and a sensed node.

The DC gain from node i to node j is the (j, i) 2x2 block of the orthogonal
projector onto ker R(p*). Rank loss of that block is tested three ways:

* direct determinant of the block, with the projector built from the
  eigenvectors of the stiffness matrix;
* ``det(H) / n**2`` where H is the modal cross-coupling matrix built from the
  explicit rotation mode and the extracted flexes;
* ``det(M) * schur / n**2`` using the Schur complement of the flex block M.

The routes share no intermediate beyond the decomposition itself, so a
mismatch between them flags a numerical problem rather than a finding.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import RouteDisagreement, SchurUnavailable
from .framework import ModalDecomposition

RANK_REL_TOL = 1e-10
PIN_TOL = 1e-10
SCHUR_MAX_COND = 1e12
DET_REL_TOL = 1e-9
ROUTE_REL_TOL = 1e-9


def kernel_projector(md: ModalDecomposition) -> np.ndarray:
    K = md.kernel_basis
    P = K @ K.T
    return 0.5 * (P + P.T)


def projector_block(P: np.ndarray, md: ModalDecomposition, i: int, j: int) -> np.ndarray:
    """Rows of sensor ``j``, columns of actuator ``i``."""
    fw = md.framework
    a, b = fw.index_of(i), fw.index_of(j)
    return np.array(P[2 * b:2 * b + 2, 2 * a:2 * a + 2])


@dataclass(frozen=True, eq=False)
class DcGainBlock:
    actuator: int
    sensor: int
    block: np.ndarray
    determinant: float
    trace: float
    rank: int
    singular_values: np.ndarray
    blocked_direction: np.ndarray | None = None


def _det2(m: np.ndarray) -> float:
    return float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])


def _canonical_sign(u: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(u) > 1e-14))
    return -u if u[k] < 0 else u


def classify_block(block: np.ndarray, i: int, j: int) -> DcGainBlock:
    _, s, vt = np.linalg.svd(block)
    if s[0] == 0.0:
        rank = 0
    elif s[1] <= RANK_REL_TOL * s[0]:
        rank = 1
    else:
        rank = 2
    direction = _canonical_sign(vt[1]) if rank == 1 else None
    return DcGainBlock(i, j, block, _det2(block), float(np.trace(block)), rank, s, direction)


def dc_gain_block(md: ModalDecomposition, i: int, j: int, projector: np.ndarray | None = None) -> DcGainBlock:
    """DC gain block for actuator ``i`` and sensor ``j``.

    Pass a precomputed ``projector`` when scanning many pairs.
    """
    P = kernel_projector(md) if projector is None else projector
    return classify_block(projector_block(P, md, i, j), i, j)


@dataclass(frozen=True, eq=False)
class CrossCoupling:
    H: np.ndarray
    psi_rr: float
    psi_rz: np.ndarray     # 1 x n_f
    psi_zr: np.ndarray     # n_f x 1
    psi_zz: np.ndarray     # n_f x n_f
    det_H: float
    det_M: float
    cond_M: float
    schur_scalar: float | None

    @property
    def schur_available(self) -> bool:
        return self.schur_scalar is not None


def cross_coupling(md: ModalDecomposition, i: int, j: int, strict: bool = False) -> CrossCoupling:
    """Modal cross-coupling matrix H for actuator ``i`` and sensor ``j``.

    With ``strict=True`` a singular flex block raises :class:`SchurUnavailable`
    (the exception carries the otherwise complete result).
    """
    fw = md.framework
    n = fw.n
    r_i = fw.block(md.rbm_basis[:, 2], i)
    r_j = fw.block(md.rbm_basis[:, 2], j)
    Z_i = fw.block(md.flex_basis, i)
    Z_j = fw.block(md.flex_basis, j)
    nf = md.n_f

    psi_rr = float(r_i @ r_j)
    psi_rz = (r_i @ Z_j).reshape(1, nf)
    psi_zr = (Z_i.T @ r_j).reshape(nf, 1)
    psi_zz = Z_i.T @ Z_j

    M = np.eye(nf) + n * psi_zz
    H = np.block([[np.array([[1.0 + n * psi_rr]]), n * psi_rz], [n * psi_zr, M]])
    det_H = float(np.linalg.det(H))

    if nf == 0:
        det_M, cond_M = 1.0, 1.0
        schur = 1.0 + n * psi_rr
    else:
        det_M = float(np.linalg.det(M))
        cond_M = float(np.linalg.cond(M))
        schur = None
        if np.isfinite(cond_M) and cond_M < SCHUR_MAX_COND:
            correction = (psi_rz @ np.linalg.solve(M, psi_zr)).item()
            schur = 1.0 + n * psi_rr - n * n * correction

    result = CrossCoupling(H, psi_rr, psi_rz, psi_zr, psi_zz, det_H, det_M, cond_M, schur)
    if strict and schur is None:
        raise SchurUnavailable(f"flex block for pair ({i}, {j}) has condition number {cond_M:.3e}", result)
    return result


def pinned_check(md: ModalDecomposition, k: int) -> dict[str, bool]:
    """Per kernel mode, whether its local component at node ``k`` vanishes."""
    fw = md.framework
    local = fw.block(md.modal_basis, k)
    norms = np.linalg.norm(local, axis=0)
    return {name: bool(v < PIN_TOL) for name, v in zip(md.mode_names(), norms)}


class Verdict(str, enum.Enum):
    ZERO = "Zero"
    FULL_RANK = "FullRank"


@dataclass(frozen=True, eq=False)
class ZeroTestResult:
    verdict: Verdict
    block: DcGainBlock
    coupling: CrossCoupling
    det_direct: float
    det_sylvester: float
    det_schur: float | None
    det_tolerance: float
    route_tolerance: float
    max_disagreement: float
    pinned_actuator: dict
    pinned_sensor: dict
    n: int

    @property
    def routes_agree(self) -> bool:
        return self.max_disagreement <= self.route_tolerance

    @property
    def actuator(self) -> int:
        return self.block.actuator

    @property
    def sensor(self) -> int:
        return self.block.sensor

    @property
    def is_zero(self) -> bool:
        return self.verdict is Verdict.ZERO


def transmission_zero_test(
    md: ModalDecomposition,
    i: int,
    j: int,
    strict: bool = False,
    projector: np.ndarray | None = None,
) -> ZeroTestResult:
    """Classify the (i -> j) channel as a steady-state transmission zero or full rank.

    Disagreement between the three determinant routes beyond
    ``1e-9 * (1 + |det H|)`` warns, or raises :class:`RouteDisagreement`
    when ``strict``.
    """
    n = md.framework.n
    block = dc_gain_block(md, i, j, projector)
    cc = cross_coupling(md, i, j)

    det_direct = block.determinant
    det_syl = cc.det_H / n**2
    det_schur = cc.det_M * cc.schur_scalar / n**2 if cc.schur_available else None

    routes = [det_direct, det_syl] + ([det_schur] if det_schur is not None else [])
    spread = max(routes) - min(routes)
    route_tol = ROUTE_REL_TOL * (1.0 + abs(cc.det_H))
    det_tol = DET_REL_TOL / n**2 * (1.0 + np.linalg.norm(cc.H, 2))
    verdict = Verdict.ZERO if abs(det_direct) < det_tol else Verdict.FULL_RANK

    result = ZeroTestResult(
        verdict, block, cc, det_direct, det_syl, det_schur, float(det_tol), float(route_tol), float(spread),
        pinned_check(md, i), pinned_check(md, j), n,
    )
    if not result.routes_agree:
        msg = f"determinant routes for pair ({i}, {j}) disagree by {spread:.3e}"
        if strict:
            raise RouteDisagreement(msg, result)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return result


def relative_route_disagreement(result: ZeroTestResult) -> float:
    """Largest pairwise route gap over the determinant scale ``(1 + |det H|) / n**2``.

    The scale bounds ``|det|`` from above and never collapses to round-off
    for near-zero determinants.
    """
    scale = (1.0 + abs(result.coupling.det_H)) / result.n**2
    return result.max_disagreement / scale
