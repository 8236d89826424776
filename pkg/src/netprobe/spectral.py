"""Eigenmode analysis: couplings, damping kernel and spectral densities.

Diagonalizing the adjacency matrix A with an orthogonal K (K^T A K = D,
D_ii = Omega_i^2 / 2) moves the network into independent eigenmodes with
frequencies Omega_i.  A probe attached to node j couples to mode i with the
dimensionless weight g_i = K_ji; for a pair of nodes the row sum.  Everything
downstream (damping kernel, spectral density in comb or smoothed form) is a
function of (Omega_i, g_i, k) only.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from . import network
from .errors import RegimeWarning, ValidationError

DEGENERACY_RTOL = 1e-8  # relative gap below which two eigenfrequencies are flagged


@dataclass(frozen=True)
class EigenSystem:
    """Orthogonal mode matrix and eigenfrequencies, highest frequency first.

    k_matrix columns are eigenvectors of the adjacency matrix; omegas[i] is
    the eigenfrequency of column i.  Column signs follow a deterministic
    convention (first largest-magnitude entry positive) and degenerate
    indices i with Omega_i ~= Omega_{i+1} are flagged because interval-based
    mode weights are ill-defined there.
    """

    k_matrix: np.ndarray
    omegas: np.ndarray
    degenerate: tuple[int, ...] = ()

    @property
    def n(self) -> int:
        return self.omegas.shape[0]


@dataclass(frozen=True)
class CouplingVector:
    """Probe-to-eigenmode coupling weights for a probed node (or pair)."""

    g: np.ndarray
    node_set: tuple[int, ...]


@dataclass(frozen=True)
class SpectralComb:
    """Discrete spectral density: one line (Omega_i, w_i) per eigenmode.

    Weights are w_i = (pi/2) k^2 g_i^2 / Omega_i; frequencies descending.
    """

    omegas: np.ndarray
    weights: np.ndarray

    def binned_density(self) -> np.ndarray:
        """Comb weight spread over its local frequency interval, w_i / dOmega_i."""
        return self.weights / descending_gaps(self.omegas)

    def moment_sum(self) -> float:
        """(2/pi) * sum_i w_i Omega_i, equal to k^2 sum_i g_i^2 exactly."""
        return float(2.0 / np.pi * np.dot(self.weights, self.omegas))


@dataclass(frozen=True)
class SampledSpectrum:
    """Smooth spectral density J(omega) sampled on a strictly increasing grid.

    Values may dip slightly negative between lines from finite-time
    truncation ringing; they are reported as-is.
    """

    omegas: np.ndarray
    j: np.ndarray
    t_max: float

    def __post_init__(self):
        om = np.asarray(self.omegas, dtype=float)
        if om.ndim != 1 or np.any(np.diff(om) <= 0):
            raise ValidationError("frequency grid must be strictly increasing")

    def support(self, rel_floor: float = 0.05) -> tuple[float, float]:
        """Lowest and highest grid frequency where J exceeds rel_floor * max(J)."""
        floor = rel_floor * float(self.j.max())
        idx = np.nonzero(self.j >= floor)[0]
        if idx.size == 0:
            return (float("nan"), float("nan"))
        return (float(self.omegas[idx[0]]), float(self.omegas[idx[-1]]))

    def integral(self) -> float:
        """Trapezoid integral of J over the grid."""
        return float(np.trapezoid(self.j, self.omegas))

    def moment_integral(self) -> float:
        """(2/pi) * trapezoid integral of J(omega) * omega over the grid."""
        return float(2.0 / np.pi * np.trapezoid(self.j * self.omegas, self.omegas))


# ---------------------------------------------------------------------------
# Operations


def diagonalize(adj: network.AdjacencyMatrix) -> EigenSystem:
    """Orthogonally diagonalize an adjacency matrix.

    Returns eigenfrequencies Omega_i = sqrt(2 * eigenvalue) in descending
    order with a deterministic eigenvector sign convention.  Raises
    NotPositiveDefinite for unstable input.
    """
    network.validate_stability(adj)
    evals, vecs = np.linalg.eigh(adj.a)
    evals = evals[::-1]
    vecs = vecs[:, ::-1]
    # sign convention: first largest-magnitude entry of each column positive
    for i in range(vecs.shape[1]):
        col = vecs[:, i]
        lead = int(np.argmax(np.abs(col)))
        if col[lead] < 0:
            vecs[:, i] = -col
    # stable tie-break inside (numerically) degenerate groups
    degenerate: list[int] = []
    tol = DEGENERACY_RTOL * evals[0]
    start = 0
    for stop in range(1, len(evals) + 1):
        if stop == len(evals) or evals[start] - evals[stop] > tol:
            if stop - start > 1:
                degenerate.extend(range(start, stop - 1))
                block = vecs[:, start:stop]
                order = np.lexsort(block[::-1])
                vecs[:, start:stop] = block[:, order]
            start = stop
    return EigenSystem(
        k_matrix=vecs,
        omegas=np.sqrt(2.0 * evals),
        degenerate=tuple(degenerate),
    )


def probe_couplings(eig: EigenSystem, node_set: Iterable[int]) -> CouplingVector:
    """Coupling weights g_i = sum over probed nodes of K_ji (one or two nodes)."""
    nodes = tuple(node_set)
    if len(nodes) not in (1, 2) or len(set(nodes)) != len(nodes):
        raise ValidationError(f"node_set must contain one or two distinct nodes, got {nodes}")
    for j in nodes:
        if not (0 <= j < eig.n):
            raise ValidationError(f"node {j} out of range for {eig.n} modes")
    g = eig.k_matrix[list(nodes), :].sum(axis=0)
    return CouplingVector(g=g, node_set=nodes)


def damping_kernel(
    eig: EigenSystem, g: CouplingVector, k: float, t: Union[float, np.ndarray]
) -> Union[float, np.ndarray]:
    """Memory kernel gamma(t) = sum_i (k^2 g_i^2 / Omega_i^2) cos(Omega_i t)."""
    t = np.asarray(t, dtype=float)
    coeff = k**2 * g.g**2 / eig.omegas**2
    out = np.cos(np.multiply.outer(t, eig.omegas)) @ coeff
    return float(out) if out.ndim == 0 else out


def spectral_density_comb(eig: EigenSystem, g: CouplingVector, k: float) -> SpectralComb:
    """Delta-comb spectral density: weight (pi/2) k^2 g_i^2 / Omega_i per mode."""
    weights = 0.5 * np.pi * k**2 * g.g**2 / eig.omegas
    return SpectralComb(omegas=eig.omegas.copy(), weights=weights)


def spectral_density_smooth(
    eig: EigenSystem,
    g: CouplingVector,
    k: float,
    omega_grid: Sequence[float] | np.ndarray,
    t_max: float,
) -> SampledSpectrum:
    """Finite-time spectral density J(omega) on a frequency grid.

    J(omega) = omega * integral_0^t_max gamma(t) cos(omega t) dt, evaluated
    through the closed-form antiderivative of each cosine product:

        J(omega) = omega * sum_i (k^2 g_i^2 / Omega_i^2) * (t_max / 2)
                   * [sinc((omega - Omega_i) t_max) + sinc((omega + Omega_i) t_max)]

    with sinc(x) = sin(x)/x, so the removable point omega = Omega_i needs no
    special casing and there is no quadrature error.  Warns when t_max is
    beyond the recurrence-time estimate (the result is then the discrete
    regime, not a smooth density).
    """
    if t_max <= 0:
        raise ValidationError(f"t_max must be positive, got {t_max}")
    grid = np.asarray(omega_grid, dtype=float)
    tau_f = recurrence_time(eig)
    if t_max > tau_f:
        warnings.warn(
            f"t_max={t_max:.4g} exceeds the recurrence-time estimate {tau_f:.4g}; "
            "the sampled density is in the discrete regime",
            RegimeWarning,
            stacklevel=2,
        )
    coeff = k**2 * g.g**2 / eig.omegas**2
    diff = np.subtract.outer(grid, eig.omegas)
    summ = np.add.outer(grid, eig.omegas)
    kernels = np.sinc(diff * (t_max / np.pi)) + np.sinc(summ * (t_max / np.pi))
    j = grid * (0.5 * t_max) * (kernels @ coeff)
    return SampledSpectrum(omegas=grid, j=j, t_max=float(t_max))


def recurrence_time(source: Union[EigenSystem, network.NetworkSpec, np.ndarray]) -> float:
    """Finite-size recurrence-time estimate tau_f = 2N / v_max.

    v_max is a discrete group-velocity estimate from the sorted spectrum,
    max_i (Omega_i - Omega_{i+1}) / (pi / N).  For a homogeneous chain this
    reproduces the maximum group velocity of its dispersion relation.  A
    single mode (or a fully degenerate spectrum) never recurs: +inf.
    """
    if isinstance(source, network.NetworkSpec):
        omegas = diagonalize(network.to_adjacency(source)).omegas
    elif isinstance(source, EigenSystem):
        omegas = source.omegas
    else:
        omegas = np.sort(np.asarray(source, dtype=float))[::-1]
    n = omegas.shape[0]
    if n < 2:
        return float("inf")
    max_gap = float(np.max(-np.diff(omegas)))
    if max_gap <= 0:
        return float("inf")
    v_max = max_gap * n / np.pi
    return 2.0 * n / v_max


def descending_gaps(omegas: np.ndarray) -> np.ndarray:
    """Mode spacings dOmega_i = Omega_i - Omega_{i+1} for a descending list.

    The undefined final interval reuses the previous one; a single mode gets
    its own frequency as the (arbitrary but positive) interval.
    """
    omegas = np.asarray(omegas, dtype=float)
    if omegas.ndim != 1 or omegas.size == 0:
        raise ValidationError("omegas must be a non-empty 1-d array")
    if omegas.size == 1:
        return np.array([omegas[0]])
    gaps = -np.diff(omegas)
    if np.any(gaps < 0):
        raise ValidationError("omegas must be sorted in descending order")
    return np.append(gaps, gaps[-1])


# ---------------------------------------------------------------------------
# Band-shape diagnostics for sampled spectra


def count_bands(
    spectrum: SampledSpectrum, band_floor: float = 0.05, gap_floor: float = 0.01
) -> int:
    """Number of frequency bands in a sampled spectrum.

    A band is a run of samples with J >= band_floor * max(J); two runs count
    as separate bands only when J dips below gap_floor * max(J) somewhere
    between them, otherwise they merge.
    """
    jmax = float(spectrum.j.max())
    above = spectrum.j >= band_floor * jmax
    gap_open = spectrum.j < gap_floor * jmax
    bands = 0
    in_band = False
    separated = True  # a true gap has been seen since the last band
    for hi, lo in zip(above, gap_open):
        if hi:
            if not in_band and separated:
                bands += 1
                separated = False
            in_band = True
        else:
            in_band = False
            if lo:
                separated = True
    return bands


def count_spikes(spectrum: SampledSpectrum, prominence_frac: float = 0.1) -> int:
    """Number of local maxima with prominence >= prominence_frac * max(J)."""
    from scipy.signal import find_peaks

    peaks, _ = find_peaks(spectrum.j, prominence=prominence_frac * float(spectrum.j.max()))
    return int(peaks.size)
