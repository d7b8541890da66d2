"""Formation frameworks, the rigidity map and the stiffness-matrix modal structure.

Stacked configurations use the node ids sorted ascending: node with the k-th
smallest id occupies entries ``2k, 2k+1`` of every 2n-vector.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg as sla

from .errors import (
    CoincidentAllNodes,
    DegenerateSpan,
    DuplicateEdge,
    DuplicateNodeId,
    FormationError,
    NonFinitePosition,
    NoPivotFound,
    SelfLoop,
    ThresholdAmbiguity,
    UnknownNodeId,
    ZeroInertia,
)

# 90 degree rotation generator
OMEGA = np.array([[0.0, -1.0], [1.0, 0.0]])

FLEX_DISCARD_NORM = 1e-8
AMBIGUITY_FACTOR = 10.0


@dataclass(frozen=True)
class FormationSpec:
    """Named sensing graph plus target coordinates for every node."""

    name: str
    nodes: tuple[tuple[int, tuple[float, float]], ...]
    edges: tuple[tuple[int, int], ...]
    dimension: int = 2

    @classmethod
    def from_arrays(cls, name: str, positions, edges, ids: Sequence[int] | None = None):
        positions = np.asarray(positions, dtype=float).reshape(-1, 2)
        if ids is None:
            ids = range(1, len(positions) + 1)
        nodes = tuple((int(k), (float(x), float(y))) for k, (x, y) in zip(ids, positions))
        return cls(name=name, nodes=nodes, edges=tuple((int(a), int(b)) for a, b in edges))

    @property
    def node_ids(self) -> list[int]:
        return [k for k, _ in self.nodes]

    def without_edge(self, a: int, b: int, name: str | None = None) -> "FormationSpec":
        key = frozenset((a, b))
        kept = tuple(e for e in self.edges if frozenset(e) != key)
        if len(kept) == len(self.edges):
            raise UnknownNodeId(f"edge ({a}, {b}) not in formation {self.name!r}")
        return FormationSpec(name or self.name, self.nodes, kept, self.dimension)

    def with_positions(self, positions, name: str | None = None) -> "FormationSpec":
        """Same graph, new coordinates given in sorted-id block order."""
        positions = np.asarray(positions, dtype=float).reshape(-1, 2)
        ids = sorted(self.node_ids)
        if len(ids) != len(positions):
            raise ValueError("position count does not match node count")
        nodes = tuple((k, (float(x), float(y))) for k, (x, y) in zip(ids, positions))
        return FormationSpec(name or self.name, nodes, self.edges, self.dimension)


def validate_spec(spec: FormationSpec) -> list[FormationError]:
    """Return every invariant violation of ``spec`` (empty when valid)."""
    problems = []
    seen = set()
    for node_id, pos in spec.nodes:
        if node_id in seen:
            problems.append(DuplicateNodeId(f"node id {node_id} appears more than once"))
        seen.add(node_id)
        if isinstance(node_id, bool) or not isinstance(node_id, int) or node_id <= 0:
            problems.append(UnknownNodeId(f"node id {node_id!r} is not a positive integer"))
        if len(pos) != 2 or not all(math.isfinite(c) for c in pos):
            problems.append(NonFinitePosition(f"node {node_id} position {pos!r} is not a finite 2-vector"))
    edge_keys = set()
    for a, b in spec.edges:
        for end in (a, b):
            if end not in seen:
                problems.append(UnknownNodeId(f"edge ({a}, {b}) references unknown node id {end}"))
        if a == b:
            problems.append(SelfLoop(f"edge ({a}, {b}) is a self-loop"))
            continue
        key = frozenset((a, b))
        if key in edge_keys:
            problems.append(DuplicateEdge(f"edge ({a}, {b}) duplicates an earlier edge"))
        edge_keys.add(key)
    if spec.dimension != 2:
        problems.append(FormationError(f"dimension {spec.dimension} unsupported; only 2 is implemented"))
    return problems


@dataclass(frozen=True, eq=False)
class Framework:
    spec: FormationSpec
    ids: tuple[int, ...]
    positions: np.ndarray          # n x 2, rows in sorted-id order
    edge_index: np.ndarray         # |E| x 2 internal indices
    centroid: np.ndarray
    polar_inertia: float
    _index: dict = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def target(self) -> np.ndarray:
        """Stacked target configuration p*."""
        return self.positions.ravel().copy()

    def index_of(self, node_id: int) -> int:
        try:
            return self._index[node_id]
        except KeyError:
            raise UnknownNodeId(f"node id {node_id} not in formation {self.spec.name!r}") from None

    def block(self, v: np.ndarray, node_id: int) -> np.ndarray:
        """2-vector (or 2-row block) of a stacked quantity at ``node_id``."""
        k = self.index_of(node_id)
        return np.asarray(v)[2 * k:2 * k + 2]

    def relative(self, node_id: int) -> np.ndarray:
        return self.positions[self.index_of(node_id)] - self.centroid


def build_framework(spec: FormationSpec) -> Framework:
    problems = validate_spec(spec)
    if problems:
        raise problems[0]
    ids = tuple(sorted(spec.node_ids))
    index = {k: i for i, k in enumerate(ids)}
    pos_of = dict(spec.nodes)
    positions = np.array([pos_of[k] for k in ids], dtype=float).reshape(-1, 2)
    edge_index = np.array([(index[a], index[b]) for a, b in spec.edges], dtype=int).reshape(-1, 2)

    centroid = positions.mean(axis=0)
    rel = positions - centroid
    inertia = float(np.sum(rel * rel))
    if inertia == 0.0:
        raise CoincidentAllNodes(f"all {len(ids)} nodes of {spec.name!r} coincide; polar inertia is zero")
    if len(ids) < 3 or np.linalg.matrix_rank(rel, tol=1e-12 * math.sqrt(inertia)) < 2:
        warnings.warn(f"nodes of {spec.name!r} do not affinely span the plane", DegenerateSpan, stacklevel=2)

    positions.setflags(write=False)
    centroid.setflags(write=False)
    return Framework(spec, ids, positions, edge_index, centroid, inertia, index)


def _as_points(fw: Framework, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return p.reshape(fw.n, 2)


def rigidity_function(fw: Framework, p) -> np.ndarray:
    """Half squared length of every edge, in edge order."""
    q = _as_points(fw, p)
    d = q[fw.edge_index[:, 0]] - q[fw.edge_index[:, 1]]
    return 0.5 * np.sum(d * d, axis=1)


def rigidity_matrix(fw: Framework, p) -> np.ndarray:
    """Jacobian of :func:`rigidity_function`, shape ``(|E|, 2n)``."""
    q = _as_points(fw, p)
    a, b = fw.edge_index[:, 0], fw.edge_index[:, 1]
    d = q[a] - q[b]
    m = len(d)
    R = np.zeros((m, 2 * fw.n))
    rows = np.arange(m)
    for c in range(2):
        R[rows, 2 * a + c] = d[:, c]
        R[rows, 2 * b + c] = -d[:, c]
    if m and np.any(np.all(d == 0.0, axis=1)):
        warnings.warn("rigidity matrix has zero rows (coincident edge endpoints)", RuntimeWarning, stacklevel=2)
    return R


def rbm_basis(fw: Framework) -> np.ndarray:
    """Columns v_x, v_y, v_r: unit translations and the unit rotation about the centroid."""
    if fw.polar_inertia <= 0.0:
        raise ZeroInertia("rotation mode undefined for zero polar inertia")
    n = fw.n
    V = np.zeros((2 * n, 3))
    V[0::2, 0] = 1.0 / math.sqrt(n)
    V[1::2, 1] = 1.0 / math.sqrt(n)
    rot = (fw.positions - fw.centroid) @ OMEGA.T / math.sqrt(fw.polar_inertia)
    V[:, 2] = rot.ravel()
    return V


@dataclass(frozen=True, eq=False)
class ModalDecomposition:
    framework: Framework
    eigenvalues: np.ndarray     # of -R^T R, zeros first, then increasingly negative
    eigenvectors: np.ndarray    # columns, orthonormal
    kernel_dim: int
    rbm_basis: np.ndarray       # 2n x 3
    flex_basis: np.ndarray      # 2n x n_f
    zero_threshold: float

    @property
    def n_f(self) -> int:
        return self.flex_basis.shape[1]

    @property
    def is_rigid(self) -> bool:
        return self.kernel_dim == 3

    @property
    def kernel_basis(self) -> np.ndarray:
        return self.eigenvectors[:, :self.kernel_dim]

    @property
    def modal_basis(self) -> np.ndarray:
        """Kernel spanned by rbm then flex columns."""
        return np.hstack([self.rbm_basis, self.flex_basis])

    @property
    def deformational(self) -> tuple[np.ndarray, np.ndarray]:
        """Strictly negative eigenvalues and their eigenvectors."""
        k = self.kernel_dim
        return self.eigenvalues[k:], self.eigenvectors[:, k:]

    def mode_names(self) -> list[str]:
        return ["v_x", "v_y", "v_r"] + [f"z_{a + 1}" for a in range(self.n_f)]


def zero_threshold(eigenvalues: np.ndarray) -> float:
    n2 = len(eigenvalues)
    lam_max = float(np.max(np.abs(eigenvalues))) if n2 else 0.0
    return n2 * lam_max * 1e-12


def _orthonormalize(vectors: np.ndarray, discard: float = FLEX_DISCARD_NORM) -> np.ndarray:
    """Modified Gram-Schmidt with largest-residual pivoting; drops residuals below ``discard``."""
    work = np.array(vectors, dtype=float, copy=True)
    kept = []
    remaining = list(range(work.shape[1]))
    while remaining:
        norms = [np.linalg.norm(work[:, c]) for c in remaining]
        pick = int(np.argmax(norms))
        if norms[pick] < discard:
            break
        c = remaining.pop(pick)
        q = work[:, c] / norms[pick]
        kept.append(q)
        for r in remaining:
            work[:, r] -= q * (q @ work[:, r])
    if not kept:
        return np.zeros((work.shape[0], 0))
    return np.column_stack(kept)


def modal_decomposition(fw: Framework) -> ModalDecomposition:
    R = rigidity_matrix(fw, fw.target)
    stiffness = R.T @ R
    mu, vecs = np.linalg.eigh(stiffness)
    # eigh is ascending in mu = -lambda, i.e. zeros first already
    lam = -mu
    thr = zero_threshold(lam)
    near = np.abs(lam)
    ambiguous = (near > thr / AMBIGUITY_FACTOR) & (near < thr * AMBIGUITY_FACTOR)
    if thr > 0 and np.any(ambiguous):
        raise ThresholdAmbiguity(
            f"{int(ambiguous.sum())} eigenvalue(s) of {fw.spec.name!r} lie within a factor "
            f"{AMBIGUITY_FACTOR:g} of the zero threshold {thr:.3e}",
            eigenvalues=lam[ambiguous],
            threshold=thr,
        )
    kernel_dim = int(np.sum(near <= thr))
    rbm = rbm_basis(fw)
    K = vecs[:, :kernel_dim]
    flex = _orthonormalize(K - rbm @ (rbm.T @ K))
    lam.setflags(write=False)
    vecs.setflags(write=False)
    return ModalDecomposition(fw, lam, vecs, kernel_dim, rbm, flex, thr)


def svd_kernel(R: np.ndarray, n_cols: int | None = None) -> np.ndarray:
    """Orthonormal kernel basis of ``R`` from the full SVD."""
    _, s, vt = np.linalg.svd(R)
    ncols = R.shape[1]
    if n_cols is None:
        tol = max(R.shape) * (s[0] if len(s) else 0.0) * np.finfo(float).eps * 10
        rank = int(np.sum(s > tol))
        n_cols = ncols - rank
    return vt[ncols - n_cols:].T


def nullspace_via_pivot(fw: Framework, rel_tol: float = 1e-10, max_cond: float = 1e12) -> np.ndarray:
    """Kernel basis [-R_piv^-1 R_free; I] in the original coordinate order.

    The pivot block comes from column-pivoted QR, so rows are combined
    orthogonally and the r x r triangular factor plays the role of R_piv.
    """
    R = rigidity_matrix(fw, fw.target)
    ncols = R.shape[1]
    if R.shape[0] == 0:
        return np.eye(ncols)
    _, T, perm = sla.qr(R, mode="economic", pivoting=True)
    diag = np.abs(np.diag(T))
    if diag[0] == 0.0:
        return np.eye(ncols)
    scaled = diag / diag[0]
    rank = int(np.sum(scaled > rel_tol))
    grey = (scaled > rel_tol * 1e-3) & (scaled < rel_tol * 1e3)
    if np.any(grey):
        raise NoPivotFound(f"pivoted QR diagonal of {fw.spec.name!r} has no clear rank gap")
    T11 = T[:rank, :rank]
    T12 = T[:rank, rank:]
    if rank and np.linalg.cond(T11) > max_cond:
        raise NoPivotFound(f"pivot block of {fw.spec.name!r} is ill-conditioned")
    free = ncols - rank
    Z = np.zeros((ncols, free))
    Z[perm[:rank]] = -sla.solve_triangular(T11, T12) if rank else np.zeros((0, free))
    Z[perm[rank:]] = np.eye(free)
    return Z
