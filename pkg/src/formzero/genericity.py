"""Monte Carlo evidence that DC-gain rank loss is non-generic on flexible graphs."""

from __future__ import annotations

import warnings
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.sparse import csgraph, csr_matrix

from .dcgain import PIN_TOL, kernel_projector, projector_block
from .errors import FormationError, FormzeroError, NotFlexibleGraph, ThresholdAmbiguity
from .framework import FormationSpec, build_framework, modal_decomposition

ZERO_CUT = 1e-12
HIST_EDGES = np.arange(-18.0, 1.0 + 0.25, 0.5)

_SAMPLE_STREAM = 0
_BISECT_STREAM = 1


class DisconnectedGraph(FormzeroError, ValueError):
    pass


def sample_stream(seed: int, index: int, purpose: int = _SAMPLE_STREAM) -> np.random.Generator:
    """Independent generator for one (seed, sample-index) pair."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(purpose, int(index))))


def sample_configuration(spec: FormationSpec, box: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform coordinates on ``[-box, box]`` for every node, sorted-id block order."""
    if box <= 0:
        raise ValueError("box must be positive")
    return rng.uniform(-box, box, size=(len(spec.nodes), 2))


def is_connected(spec: FormationSpec) -> bool:
    ids = sorted(spec.node_ids)
    index = {k: a for a, k in enumerate(ids)}
    if not spec.edges:
        return len(ids) <= 1
    rows = [index[a] for a, _ in spec.edges]
    cols = [index[b] for _, b in spec.edges]
    adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(ids), len(ids)))
    count, _ = csgraph.connected_components(adj, directed=False)
    return count == 1


@dataclass(frozen=True)
class SampleOutcome:
    det: float          # NaN when degenerate
    kernel_dim: int     # -1 when undetermined
    reason: str | None  # degeneracy tag


def evaluate_configuration(spec: FormationSpec, positions, i: int, j: int) -> SampleOutcome:
    """DC-gain determinant of the (i -> j) channel at one embedding of ``spec``'s graph."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fw = build_framework(spec.with_positions(positions))
        md = modal_decomposition(fw)
    except ThresholdAmbiguity:
        return SampleOutcome(float("nan"), -1, "threshold_ambiguity")
    except FormationError:
        return SampleOutcome(float("nan"), -1, "coincident")
    local = np.vstack([fw.block(md.modal_basis, i), fw.block(md.modal_basis, j)])
    if np.any(np.linalg.norm(local[:2], axis=0) < PIN_TOL) or np.any(np.linalg.norm(local[2:], axis=0) < PIN_TOL):
        return SampleOutcome(float("nan"), md.kernel_dim, "pinned")
    block = projector_block(kernel_projector(md), md, i, j)
    det = float(block[0, 0] * block[1, 1] - block[0, 1] * block[1, 0])
    return SampleOutcome(det, md.kernel_dim, None)


def _run_chunk(args):
    spec, i, j, seed, box, indices = args
    return [evaluate_configuration(spec, sample_configuration(spec, box, sample_stream(seed, k)), i, j)
            for k in indices]


@dataclass(frozen=True, eq=False)
class GenericityReport:
    graph: str
    actuator: int
    sensor: int
    samples: int
    seed: int
    box: float
    zero_cut: float
    determinants: np.ndarray        # NaN for degenerate samples
    near_zero_count: int
    min_abs_det: float | None
    degenerate_count: int
    degenerate_reasons: dict
    generic_kernel_dim: int | None
    n_f: int | None
    histogram_edges: np.ndarray
    histogram_counts: np.ndarray
    bisection: "BisectionResult | None" = field(default=None)


def _histogram(abs_dets: np.ndarray):
    if abs_dets.size == 0:
        return HIST_EDGES.copy(), np.zeros(len(HIST_EDGES) - 1, dtype=int)
    logs = np.log10(np.maximum(abs_dets, 1e-300))
    logs = np.clip(logs, HIST_EDGES[0], HIST_EDGES[-1] - 1e-12)
    counts, _ = np.histogram(logs, bins=HIST_EDGES)
    return HIST_EDGES.copy(), counts


def generic_kernel_dim(spec: FormationSpec, seed: int, box: float, attempts: int = 16) -> int:
    """Kernel dimension at the first non-degenerate sample of the seeded stream."""
    for k in range(attempts):
        pos = sample_configuration(spec, box, sample_stream(seed, k))
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                md = modal_decomposition(build_framework(spec.with_positions(pos)))
        except (ThresholdAmbiguity, FormationError):
            continue
        return md.kernel_dim
    raise NotFlexibleGraph(f"no non-degenerate sample of {spec.name!r} in {attempts} attempts")


def genericity_experiment(spec: FormationSpec, i: int, j: int, samples: int, seed: int, box: float,
                          zero_cut: float = ZERO_CUT, workers: int = 1) -> GenericityReport:
    """Sample random embeddings of ``spec``'s graph and tally near-vanishing DC determinants.

    Sample ``k`` always uses the stream derived from ``(seed, k)``, so the
    report does not depend on ``workers``.
    """
    if box <= 0:
        raise ValueError("box must be positive")
    if samples < 0:
        raise ValueError("samples must be non-negative")
    ids = set(spec.node_ids)
    for node in (i, j):
        if node not in ids:
            raise FormationError(f"node id {node} not in graph {spec.name!r}")
    if not is_connected(spec):
        raise DisconnectedGraph(f"graph {spec.name!r} is not connected")

    kdim = generic_kernel_dim(spec, seed, box)
    n_f = kdim - 3
    if n_f <= 0:
        raise NotFlexibleGraph(f"graph {spec.name!r} is generically rigid; use the locus test instead")

    if samples == 0:
        edges, counts = _histogram(np.empty(0))
        return GenericityReport(spec.name, i, j, 0, seed, box, zero_cut, np.empty(0), 0, None, 0, {},
                                kdim, n_f, edges, counts)

    indices = np.arange(samples)
    if workers > 1:
        chunks = np.array_split(indices, workers * 4)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_run_chunk, [(spec, i, j, seed, box, c.tolist()) for c in chunks])
            outcomes = [o for part in parts for o in part]
    else:
        outcomes = _run_chunk((spec, i, j, seed, box, indices.tolist()))

    reasons = Counter()
    dets = np.full(samples, np.nan)
    for k, o in enumerate(outcomes):
        if o.reason is None and o.kernel_dim != kdim:
            reasons["rank_collapse"] += 1
        elif o.reason is not None:
            reasons[o.reason] += 1
        else:
            dets[k] = o.det
    good = np.abs(dets[np.isfinite(dets)])
    edges, counts = _histogram(good)
    return GenericityReport(
        graph=spec.name, actuator=i, sensor=j, samples=samples, seed=int(seed), box=float(box),
        zero_cut=zero_cut, determinants=dets, near_zero_count=int(np.sum(good < zero_cut)),
        min_abs_det=float(good.min()) if good.size else None,
        degenerate_count=int(sum(reasons.values())), degenerate_reasons=dict(sorted(reasons.items())),
        generic_kernel_dim=kdim, n_f=n_f, histogram_edges=edges, histogram_counts=counts,
    )


@dataclass(frozen=True, eq=False)
class BisectionResult:
    found: bool
    configuration: np.ndarray | None
    det: float | None
    segments_tried: int
    endpoints: tuple | None = None
    parameter: float | None = None


def bisect_zero(spec: FormationSpec, i: int, j: int, seed: int, box: float,
                tol: float = ZERO_CUT, max_segments: int = 200) -> BisectionResult:
    """Locate a configuration on the rank-loss set by bisecting det along random segments.

    Segments whose endpoint determinants share a sign are skipped; a sign
    change produced by a jump in kernel dimension is rejected after the
    bisection fails to drive ``|det|`` below ``tol``.
    """
    kdim = generic_kernel_dim(spec, seed, box)

    def det_at(a, b, t):
        o = evaluate_configuration(spec, a + t * (b - a), i, j)
        if o.reason is not None or o.kernel_dim != kdim:
            raise ValueError("degenerate configuration on segment")
        return o.det

    for k in range(max_segments):
        rng = sample_stream(seed, k, _BISECT_STREAM)
        a = sample_configuration(spec, box, rng)
        b = sample_configuration(spec, box, rng)
        try:
            fa, fb = det_at(a, b, 0.0), det_at(a, b, 1.0)
        except ValueError:
            continue
        if np.sign(fa) == np.sign(fb):
            continue
        try:
            t = optimize.bisect(lambda s: det_at(a, b, s), 0.0, 1.0, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200)
            value = det_at(a, b, t)
        except (ValueError, RuntimeError):
            continue
        if abs(value) < tol:
            return BisectionResult(True, a + t * (b - a), value, k + 1, (a, b), t)
    return BisectionResult(False, None, None, max_segments)
