"""Time and frequency response of the closed-loop formation under a node disturbance."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .dcgain import kernel_projector, projector_block
from .errors import Divergence
from .framework import Framework, ModalDecomposition, modal_decomposition, rigidity_function

DRIFT_WINDOW = 0.2


@dataclass(frozen=True, eq=False)
class SimResult:
    t: np.ndarray
    states: np.ndarray      # samples x 2n, displacement from p*
    y: np.ndarray           # samples x 2, displacement of the sensed node
    drift_estimate: np.ndarray
    actuator: int
    sensor: int
    w: np.ndarray
    nonlinear: bool = False
    step: float | None = None


@dataclass(frozen=True, eq=False)
class FrequencyResponseTable:
    omega: np.ndarray
    sigma_min: np.ndarray
    sigma_max: np.ndarray
    actuator: int
    sensor: int


def drift_estimate(t, y, window: float = DRIFT_WINDOW) -> np.ndarray:
    """Least-squares slope of ``y`` against ``t`` over the final ``window`` fraction."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    start = min(int(math.floor((1.0 - window) * len(t))), len(t) - 2)
    tt, yy = t[start:], y[start:]
    design = np.column_stack([tt - tt.mean(), np.ones_like(tt)])
    coef, *_ = np.linalg.lstsq(design, yy, rcond=None)
    return coef[0]


def slowest_rate(md: ModalDecomposition) -> float:
    lam, _ = md.deformational
    return float(np.min(np.abs(lam))) if len(lam) else 0.0


def fastest_rate(md: ModalDecomposition) -> float:
    return float(np.max(np.abs(md.eigenvalues)))


def lti_response(md: ModalDecomposition, i: int, j: int, w, t_final: float,
                 samples: int = 1001, x0=None) -> SimResult:
    """Exact modal solution of the linearized loop driven by a constant ``w`` at node ``i``.

    ``x0`` is an optional initial displacement (defaults to rest at p*).
    """
    if t_final <= 0:
        raise ValueError("t_final must be positive")
    fw = md.framework
    w = np.asarray(w, dtype=float).reshape(2)
    t = np.linspace(0.0, t_final, samples)
    phi = md.eigenvectors
    lam = np.array(md.eigenvalues)
    lam[:md.kernel_dim] = 0.0

    forcing = fw.block(phi, i).T @ w                       # [phi_k]_i . w
    gain = np.empty((samples, len(lam)))
    gain[:, :md.kernel_dim] = t[:, None]
    neg = lam[md.kernel_dim:]
    gain[:, md.kernel_dim:] = np.expm1(np.outer(t, neg)) / neg
    coeff = gain * forcing
    if x0 is not None:
        coeff = coeff + np.exp(np.outer(t, lam)) * (phi.T @ np.asarray(x0, dtype=float))
    states = coeff @ phi.T
    y = states[:, 2 * fw.index_of(j):2 * fw.index_of(j) + 2]
    return SimResult(t, states, y, drift_estimate(t, y), i, j, w)


@numba.njit(cache=True)
def _rk4_kernel(p0, edges, f0, k_in, w, h, n_rec, stride, escape):
    n2 = p0.shape[0]
    m = edges.shape[0]
    rec = np.empty((n_rec + 1, n2))
    p = p0.copy()
    rec[0] = p
    stages = np.empty((4, n2))
    tmp = np.empty(n2)

    def rhs(q, out):
        for c in range(n2):
            out[c] = 0.0
        for e in range(m):
            a = edges[e, 0]
            b = edges[e, 1]
            dx = q[2 * a] - q[2 * b]
            dy = q[2 * a + 1] - q[2 * b + 1]
            err = 0.5 * (dx * dx + dy * dy) - f0[e]
            out[2 * a] -= err * dx
            out[2 * a + 1] -= err * dy
            out[2 * b] += err * dx
            out[2 * b + 1] += err * dy
        out[2 * k_in] += w[0]
        out[2 * k_in + 1] += w[1]

    for r in range(1, n_rec + 1):
        for _ in range(stride):
            rhs(p, stages[0])
            for c in range(n2):
                tmp[c] = p[c] + 0.5 * h * stages[0, c]
            rhs(tmp, stages[1])
            for c in range(n2):
                tmp[c] = p[c] + 0.5 * h * stages[1, c]
            rhs(tmp, stages[2])
            for c in range(n2):
                tmp[c] = p[c] + h * stages[2, c]
            rhs(tmp, stages[3])
            for c in range(n2):
                p[c] += h / 6.0 * (stages[0, c] + 2.0 * stages[1, c] + 2.0 * stages[2, c] + stages[3, c])
        rec[r] = p
        dist = 0.0
        for c in range(n2):
            dist += (p[c] - p0[c]) ** 2
        if not dist <= escape * escape:
            return rec, r
    return rec, -1


def nonlinear_simulate(fw: Framework, i: int, w, t_final: float, h: float | None = None,
                       j: int | None = None, samples: int = 1001,
                       escape_radius: float | None = None) -> SimResult:
    """Fixed-step RK4 on the gradient flow from rest at p*.

    The step is shrunk so that ``t_final`` is hit exactly with ``samples``
    equally spaced records; ``h`` defaults to ``1e-3 / |lambda|_max``.
    """
    if t_final <= 0:
        raise ValueError("t_final must be positive")
    j = i if j is None else j
    w = np.asarray(w, dtype=float).reshape(2)
    if h is None:
        h = 1e-3 / fastest_rate(modal_decomposition(fw))
    if h <= 0:
        raise ValueError("step must be positive")
    if escape_radius is None:
        lengths = np.sqrt(2.0 * rigidity_function(fw, fw.target))
        escape_radius = 10.0 * float(lengths.max()) if len(lengths) else 10.0 * math.sqrt(fw.polar_inertia)

    n_rec = max(samples - 1, 1)
    stride = max(1, math.ceil(t_final / h / n_rec))
    step = t_final / (stride * n_rec)
    p0 = fw.target
    rec, bad = _rk4_kernel(p0, fw.edge_index.astype(np.int64), rigidity_function(fw, p0),
                           fw.index_of(i), w, step, n_rec, stride, float(escape_radius))
    t = np.linspace(0.0, t_final, n_rec + 1)
    if bad >= 0:
        raise Divergence(f"trajectory left the escape radius {escape_radius:g} at t={t[bad]:.6g}", float(t[bad]))
    states = rec - p0
    k = fw.index_of(j)
    y = states[:, 2 * k:2 * k + 2]
    return SimResult(t, states, y, drift_estimate(t, y), i, j, w, nonlinear=True, step=step)


def log_grid(omega_min: float, omega_max: float, points: int) -> np.ndarray:
    if omega_min <= 0 or omega_max < omega_min:
        raise ValueError("need 0 < omega_min <= omega_max")
    return np.logspace(math.log10(omega_min), math.log10(omega_max), points)


def scaled_transfer(md: ModalDecomposition, i: int, j: int, omega) -> np.ndarray:
    """``j*omega * G_ji(j*omega)`` from the modal expansion, shape ``(len(omega), 2, 2)``."""
    fw = md.framework
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    dc = projector_block(kernel_projector(md), md, i, j)
    lam, phi = md.deformational
    outer = np.einsum("ak,bk->kab", fw.block(phi, j), fw.block(phi, i))
    s = 1j * omega
    weights = s[:, None] / (s[:, None] - lam[None, :])
    return dc[None] + np.einsum("wk,kab->wab", weights, outer)


def frequency_response(md: ModalDecomposition, i: int, j: int, omega_min: float = 1e-6,
                       omega_max: float = 1e2, points: int = 200) -> FrequencyResponseTable:
    omega = log_grid(omega_min, omega_max, points)
    sv = np.linalg.svd(scaled_transfer(md, i, j, omega), compute_uv=False)
    return FrequencyResponseTable(omega, sv[:, 1], sv[:, 0], i, j)
