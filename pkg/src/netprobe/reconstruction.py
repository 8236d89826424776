"""Blind assembly of a network adjacency matrix from probe measurements.

Pipeline: detect the eigenfrequencies, probe every node at each of them to
get mode-weight magnitudes, probe node pairs to fix relative signs, project
the assembled matrix onto the nearest orthogonal one, and rebuild the
adjacency matrix from the estimated modes.  Everything runs against the
measurement-only oracle interface; the total number of readouts scales with
the square of the network size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .dynamics import ProbeInit, SqueezedVacuum, initial_probe_occupation
from .errors import (
    DegenerateContrast,
    DegenerateSpacing,
    IncompleteSpectrum,
    RankDeficient,
    SignFlip,
    ValidationError,
)
from .network import AdjacencyMatrix
from .probing import (
    NetworkOracle,
    ProbeSchedule,
    detect_eigenfrequencies,
    estimate_density_point,
    measure_thermal_time,
)
from .spectral import descending_gaps

ROW_NORM_BOUNDS = (0.8, 1.2)  # squared-norm window outside which a row is suspect


@dataclass(frozen=True)
class MagnitudeTable:
    """|K_ji| estimates: row j = probed node, column i = eigenmode."""

    m: np.ndarray

    def suspect_rows(self) -> tuple[int, ...]:
        "Rows whose squared norm falls outside the plausible window for a unit row."
        norms = np.sum(self.m**2, axis=1)
        lo, hi = ROW_NORM_BOUNDS
        return tuple(int(i) for i in np.nonzero((norms < lo) | (norms > hi))[0])


@dataclass(frozen=True)
class SignedK:
    """Mode matrix with relative signs resolved; column-sign gauge is free."""

    k_est: np.ndarray
    ambiguous: tuple[tuple[int, int], ...] = ()  # (node, mode) pairs defaulted to same-sign
    fallback_modes: tuple[int, ...] = ()  # modes resolved against a non-default reference

    def orthogonality_residual(self) -> float:
        n = self.k_est.shape[0]
        return float(np.abs(self.k_est.T @ self.k_est - np.eye(n)).max())


@dataclass(frozen=True)
class ComparisonMetrics:
    rel_frobenius: float
    link_precision: float
    link_recall: float
    max_diag_error: float
    n_true_links: int
    n_est_links: int
    threshold: float


@dataclass(frozen=True)
class ReconstructionReport:
    omegas_est: np.ndarray
    k_est: np.ndarray  # after orthogonal projection
    a_est: np.ndarray
    orthogonality_residual: float  # before projection
    measurement_count: int
    sign_flags: tuple[tuple[int, int], ...]
    fallback_modes: tuple[int, ...]
    suspect_rows: tuple[int, ...]
    tau_f: float
    tau_thermal: float
    t_detect: float
    t_magnitude: float
    detection_nodes: tuple[int, ...]
    comparison: ComparisonMetrics | None = None


@dataclass(frozen=True)
class ReconstructConfig:
    """Protocol knobs for a blind reconstruction run.

    Defaults follow the probing conventions used across the package: probe
    prepared in squeezed vacuum (so there is contrast even against a
    zero-temperature network), detection at three times the recurrence-time
    estimate, magnitude probing halfway between the recurrence and the
    energy-flow-reversal times.
    """

    k: float
    temperature: float = 0.0
    init: ProbeInit = field(default_factory=lambda: SqueezedVacuum(r=1.0, phi=math.pi / 2))
    omega_window: tuple[float, float] = (0.15, 2.0)
    pilot_points: int = 160
    pilot_time: float = 200.0
    detect_points_per_mode: int = 40
    detect_extra_points: int = 200
    detect_time_factor: float = 3.0
    max_detection_nodes: int = 3
    prominence_factor: float = 3.0
    thermal_horizon_factor: float = 12.0
    thermal_points: int = 48
    ref_node: int = 0
    ref_eps: float = 1e-3
    ambiguity_margin: float = 0.1
    support_floor: float = 0.02
    threads: int = 1


# ---------------------------------------------------------------------------
# Pure pipeline algebra


def magnitudes_from_density(
    j_vals: Sequence[float] | np.ndarray, omegas: Sequence[float] | np.ndarray, k: float
) -> np.ndarray:
    """Mode-weight magnitudes |g_i| = sqrt(2 J(Omega_i) Omega_i dOmega_i / (pi k^2)).

    omegas must be distinct and descending; the final interval reuses the
    previous one.  Inverts the binned comb exactly.
    """
    omegas = np.asarray(omegas, dtype=float)
    j_vals = np.asarray(j_vals, dtype=float)
    if j_vals.shape != omegas.shape:
        raise ValidationError("j_vals and omegas must have matching shapes")
    if np.any(j_vals < 0):
        raise ValidationError("spectral density values must be >= 0")
    if k <= 0:
        raise ValidationError(f"coupling must be positive, got {k}")
    gaps = descending_gaps(omegas)
    if np.any(gaps < 1e-9 * omegas[0]):
        raise DegenerateSpacing("repeated eigenfrequency: interval weight undefined")
    return np.sqrt(2.0 * j_vals * omegas * gaps / (np.pi * k**2))


def resolve_signs(
    magnitudes: MagnitudeTable,
    pair_values: Mapping[tuple[int, int, int], float],
    ref_node: int = 0,
    mode_refs: Sequence[int] | None = None,
    ambiguity_margin: float = 0.1,
) -> SignedK:
    """Fix relative signs of the magnitude table from pair-probing values.

    pair_values maps (reference node, other node, mode) to the measured
    |K_ref,i + K_ji|.  For magnitudes a, b and pair value s, the entries have
    the same sign when s is closer to a + b than to |a - b| (threshold at
    the midpoint).  The reference row of each mode is set non-negative (the
    per-column sign gauge leaves the adjacency matrix unchanged).  Pairs
    whose s lands within ambiguity_margin * 2 min(a, b) of the midpoint are
    flagged and defaulted to same-sign, as are missing pairs.
    """
    m = magnitudes.m
    n_nodes, n_modes = m.shape
    refs = [ref_node] * n_modes if mode_refs is None else list(mode_refs)
    if len(refs) != n_modes:
        raise ValidationError("mode_refs must give one reference node per mode")
    signs = np.ones((n_nodes, n_modes))
    ambiguous: list[tuple[int, int]] = []
    fallback = tuple(i for i, r in enumerate(refs) if r != ref_node)
    for i in range(n_modes):
        r = refs[i]
        a = m[r, i]
        for j in range(n_nodes):
            if j == r:
                continue
            b = m[j, i]
            s = pair_values.get((r, j, i), pair_values.get((j, r, i)))
            if s is None:
                ambiguous.append((j, i))
                continue
            same = a + b
            opposite = abs(a - b)
            midpoint = 0.5 * (same + opposite)
            if abs(s - midpoint) <= ambiguity_margin * (same - opposite):
                ambiguous.append((j, i))  # defaulted to same sign
                continue
            if s < midpoint:
                signs[j, i] = -1.0
    return SignedK(
        k_est=m * signs,
        ambiguous=tuple(ambiguous),
        fallback_modes=fallback,
    )


def nearest_orthonormal(matrix: np.ndarray) -> np.ndarray:
    """Orthogonal polar factor: for M = W N V^T the closest orthogonal matrix is W V^T."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {matrix.shape}")
    w, singulars, vt = np.linalg.svd(matrix)
    if singulars[-1] <= 1e-12 * singulars[0]:
        raise RankDeficient(
            f"smallest singular value {singulars[-1]:.3g} is negligible against {singulars[0]:.3g}"
        )
    return w @ vt


def assemble_adjacency(k_est: np.ndarray, omegas_est: np.ndarray) -> AdjacencyMatrix:
    """Adjacency estimate K diag(Omega^2 / 2) K^T, explicitly symmetrized."""
    omegas_est = np.asarray(omegas_est, dtype=float)
    if np.any(omegas_est <= 0):
        raise ValidationError("estimated eigenfrequencies must be positive")
    a = (k_est * (0.5 * omegas_est**2)) @ k_est.T
    return AdjacencyMatrix(0.5 * (a + a.T))


def compare_adjacency(
    a_est: np.ndarray | AdjacencyMatrix,
    a_true: np.ndarray | AdjacencyMatrix,
    link_threshold: float | None = None,
) -> ComparisonMetrics:
    """Error norms plus off-diagonal link precision/recall at a threshold.

    The default threshold is 10% of the largest off-diagonal magnitude of
    the estimate.
    """
    est = a_est.a if isinstance(a_est, AdjacencyMatrix) else np.asarray(a_est, dtype=float)
    true = a_true.a if isinstance(a_true, AdjacencyMatrix) else np.asarray(a_true, dtype=float)
    if est.shape != true.shape:
        raise ValidationError(f"shape mismatch: {est.shape} vs {true.shape}")
    n = est.shape[0]
    off = ~np.eye(n, dtype=bool)
    if link_threshold is None:
        link_threshold = 0.1 * float(np.abs(est[off]).max()) if n > 1 else 0.0
    iu = np.triu_indices(n, k=1)
    true_links = np.abs(true[iu]) > 0
    est_links = np.abs(est[iu]) >= link_threshold
    hits = int(np.sum(true_links & est_links))
    n_est = int(np.sum(est_links))
    n_true = int(np.sum(true_links))
    return ComparisonMetrics(
        rel_frobenius=float(np.linalg.norm(est - true) / np.linalg.norm(true)),
        link_precision=hits / n_est if n_est else 1.0,
        link_recall=hits / n_true if n_true else 1.0,
        max_diag_error=float(np.abs(np.diag(est) - np.diag(true)).max()),
        n_true_links=n_true,
        n_est_links=n_est,
        threshold=float(link_threshold),
    )


# ---------------------------------------------------------------------------
# Measurement-driven orchestration


class _CountingOracle:
    """Wraps any oracle to count readouts without peeking at anything else."""

    def __init__(self, inner: NetworkOracle):
        self._inner = inner
        self.count = 0

    def measure(self, node_set, omega_s, k, init, t) -> float:
        self.count += 1
        return self._inner.measure(node_set, omega_s, k, init, t)


def _estimate_j(
    oracle: NetworkOracle,
    node_set: tuple[int, ...],
    omega_s: float,
    cfg: ReconstructConfig,
    t: float,
) -> float:
    """One decay-law inversion; unusable points count as an invisible mode."""
    n0 = initial_probe_occupation(cfg.init, omega_s)
    try:
        n_t = oracle.measure(node_set, omega_s, cfg.k, cfg.init, t)
        return estimate_density_point(n_t, n0, omega_s, t, cfg.temperature)
    except (DegenerateContrast, SignFlip):
        return 0.0


def _detect_union(
    oracle: NetworkOracle, n_modes: int, cfg: ReconstructConfig, window: tuple[float, float], t_detect: float
) -> tuple[np.ndarray, np.ndarray, float, tuple[int, ...]]:
    """Union of per-node eigenfrequency detections until n_modes accumulate."""
    n_points = cfg.detect_points_per_mode * n_modes + cfg.detect_extra_points
    grid = np.linspace(window[0], window[1], n_points)
    step = float(grid[1] - grid[0])
    found: list[tuple[float, float]] = []  # (frequency, height)
    nodes_used: list[int] = []
    for node in range(min(cfg.max_detection_nodes, n_modes)):
        schedule = ProbeSchedule(
            omegas=grid,
            t=t_detect,
            k=cfg.k,
            init=cfg.init,
            temperature=cfg.temperature,
            node_set=(node,),
        )
        result = detect_eigenfrequencies(
            oracle, schedule, n_modes, prominence_factor=cfg.prominence_factor, threads=cfg.threads
        )
        nodes_used.append(node)
        for freq, height in zip(result.omegas, result.heights):
            for idx, (f0, h0) in enumerate(found):
                if abs(freq - f0) <= step:
                    if height > h0:
                        found[idx] = (freq, height)
                    break
            else:
                found.append((float(freq), float(height)))
        if len(found) >= n_modes:
            break
    if len(found) < n_modes:
        raise IncompleteSpectrum(
            f"found {len(found)} of {n_modes} eigenfrequencies after probing nodes {nodes_used}"
        )
    found.sort(key=lambda fh: fh[1], reverse=True)
    kept = found[:n_modes]
    kept.sort(key=lambda fh: fh[0], reverse=True)
    omegas = np.array([f for f, _ in kept])
    heights = np.array([h for _, h in kept])
    return omegas, heights, step, tuple(nodes_used)


def reconstruct(
    oracle: NetworkOracle, n_nodes: int, config: ReconstructConfig
) -> ReconstructionReport:
    """Recover the full adjacency matrix of an unknown network of known size.

    Stages: (1) pilot scan to locate the spectral support and estimate the
    recurrence time, (2) discrete-regime eigenfrequency detection per node
    until n_nodes distinct frequencies accumulate, (3) energy-flow-reversal
    time at the strongest detected mode, (4) per-node magnitude probing at
    every eigenfrequency, (5) pair probing against the reference node for
    relative signs (with per-mode fallback references where the default
    reference barely couples), (6) orthogonal projection and reassembly.
    """
    if n_nodes < 1:
        raise ValidationError(f"n_nodes must be positive, got {n_nodes}")
    counting = _CountingOracle(oracle)

    # (1) locate the band and size the time windows from it
    pilot_grid = np.linspace(config.omega_window[0], config.omega_window[1], config.pilot_points)
    pilot = ProbeSchedule(
        omegas=pilot_grid,
        t=config.pilot_time,
        k=config.k,
        init=config.init,
        temperature=config.temperature,
        node_set=(config.ref_node,),
    )
    from .probing import scan_density

    pilot_scan = scan_density(counting, pilot, threads=config.threads)
    j_pilot = np.where(np.isfinite(pilot_scan.j_est), pilot_scan.j_est, 0.0)
    if not np.any(j_pilot > 0):
        raise IncompleteSpectrum("pilot scan found no spectral weight in the search window")
    lit = pilot_grid[j_pilot >= config.support_floor * j_pilot.max()]
    width = float(lit[-1] - lit[0]) if lit.size > 1 else float(np.diff(pilot_grid)[0])
    pad = 0.05 * width + 2.0 * float(np.diff(pilot_grid)[0])
    window = (max(1e-3, float(lit[0] - pad)), float(lit[-1] + pad))
    tau_f = 4.0 * n_nodes / width
    t_detect = config.detect_time_factor * tau_f

    # (2) eigenfrequencies
    omegas_est, heights, grid_step, detection_nodes = _detect_union(
        counting, n_nodes, config, window, t_detect
    )

    # (3) usable upper end of the discrete window
    t_grid = np.linspace(1.05 * tau_f, config.thermal_horizon_factor * tau_f, config.thermal_points)
    strongest = float(omegas_est[int(np.argmax(heights))])
    thermal = measure_thermal_time(
        counting,
        strongest,
        config.k,
        config.init,
        t_grid,
        node_set=(config.ref_node,),
    )
    tau_thermal = thermal.tau_thermal
    t_mag = 0.5 * (tau_f + tau_thermal)

    # (4) magnitudes: every node at every eigenfrequency
    j_table = np.zeros((n_nodes, n_nodes))
    for j in range(n_nodes):
        for i, omega in enumerate(omegas_est):
            j_table[j, i] = _estimate_j(counting, (j,), float(omega), config, t_mag)
    mags = MagnitudeTable(
        m=np.vstack([magnitudes_from_density(j_table[j], omegas_est, config.k) for j in range(n_nodes)])
    )

    # (5) pair probing for signs
    gaps = descending_gaps(omegas_est)
    pair_values: dict[tuple[int, int, int], float] = {}

    def pair_value(a_node: int, b_node: int, i: int) -> float:
        j_pair = _estimate_j(counting, (a_node, b_node), float(omegas_est[i]), config, t_mag)
        return float(np.sqrt(2.0 * j_pair * omegas_est[i] * gaps[i] / (np.pi * config.k**2)))

    ref = config.ref_node
    for j in range(n_nodes):
        if j == ref:
            continue
        for i in range(n_nodes):
            pair_values[(ref, j, i)] = pair_value(ref, j, i)
    mode_refs = [ref] * n_nodes
    for i in range(n_nodes):
        if mags.m[ref, i] < config.ref_eps:
            alt = int(np.argmax(mags.m[:, i]))
            mode_refs[i] = alt
            for j in range(n_nodes):
                if j != alt and (alt, j, i) not in pair_values and (j, alt, i) not in pair_values:
                    pair_values[(alt, j, i)] = pair_value(alt, j, i)
    signed = resolve_signs(
        mags, pair_values, ref_node=ref, mode_refs=mode_refs, ambiguity_margin=config.ambiguity_margin
    )

    # (6) orthogonalize and reassemble
    residual = signed.orthogonality_residual()
    k_proj = nearest_orthonormal(signed.k_est)
    a_est = assemble_adjacency(k_proj, omegas_est)

    return ReconstructionReport(
        omegas_est=omegas_est,
        k_est=k_proj,
        a_est=a_est.a,
        orthogonality_residual=residual,
        measurement_count=counting.count,
        sign_flags=signed.ambiguous,
        fallback_modes=signed.fallback_modes,
        suspect_rows=mags.suspect_rows(),
        tau_f=tau_f,
        tau_thermal=tau_thermal,
        t_detect=t_detect,
        t_magnitude=t_mag,
        detection_nodes=detection_nodes,
    )
