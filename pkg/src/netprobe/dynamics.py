"""Exact Gaussian dynamics of probe + network as one closed system.

The probe (index 0) and the N network oscillators form an (N+1)-oscillator
quadratic Hamiltonian H = p^T p / 2 + q^T A_tot q.  All states used here are
zero-mean Gaussians, fully described by a covariance matrix in (q..., p...)
ordering.  Time evolution diagonalizes A_tot once and applies the exact
closed-form symplectic propagator, so there is no time-stepping error and
the cost of each additional time point is one matrix sandwich.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .errors import NotPositiveDefinite, ValidationError
from .network import STABILITY_RTOL, AdjacencyMatrix
from .spectral import EigenSystem


@dataclass(frozen=True)
class Vacuum:
    """Probe ground state."""


@dataclass(frozen=True)
class SqueezedVacuum:
    """Squeezed probe vacuum: mean occupation sinh(r)^2 regardless of phi."""

    r: float
    phi: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.r):
            raise ValidationError(f"squeezing parameter must be finite, got {self.r}")


@dataclass(frozen=True)
class Thermal:
    """Probe thermal state at temperature t_p."""

    t_p: float

    def __post_init__(self):
        if self.t_p < 0:
            raise ValidationError(f"probe temperature must be >= 0, got {self.t_p}")


ProbeInit = Union[Vacuum, SqueezedVacuum, Thermal]


@dataclass(frozen=True)
class TotalSystem:
    """Probe + network quadratic form with its cached eigendecomposition.

    a_tot has the probe at index 0 (diagonal omega_s^2/2), the network block
    from the adjacency matrix and entries k/2 linking the probe to each
    probed node.  nus are the total-system mode frequencies, k_tot the
    orthogonal mode matrix.
    """

    a_tot: np.ndarray
    omega_s: float
    k: float
    node_set: tuple[int, ...]
    k_tot: np.ndarray
    nus: np.ndarray

    @property
    def dim(self) -> int:
        return self.a_tot.shape[0]


@dataclass(frozen=True)
class GaussianState:
    """First moments and covariance matrix, (q_0..q_{M-1}, p_0..p_{M-1}) order."""

    mean: np.ndarray
    cov: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.mean.shape[0] // 2


def symplectic_form(n_modes: int) -> np.ndarray:
    """The 2M x 2M form sigma with [q, p] commutators: sigma = [[0, I], [-I, 0]]."""
    eye = np.eye(n_modes)
    zero = np.zeros((n_modes, n_modes))
    return np.block([[zero, eye], [-eye, zero]])


def uncertainty_defect(state: GaussianState) -> float:
    """Smallest eigenvalue of cov + i sigma / 2; physical states give >= 0."""
    sigma = symplectic_form(state.n_modes)
    h = state.cov + 0.5j * sigma
    return float(np.linalg.eigvalsh(h)[0])


# ---------------------------------------------------------------------------
# Operations


def assemble_total(
    adj: AdjacencyMatrix, omega_s: float, k: float, node_set: Iterable[int]
) -> TotalSystem:
    """Attach a probe of frequency omega_s to the given node(s) with strength k.

    Raises NotPositiveDefinite when the coupling destabilizes the combined
    quadratic form (k too large for the network at this probe frequency).
    """
    if omega_s <= 0:
        raise ValidationError(f"probe frequency must be positive, got {omega_s}")
    if k < 0:
        raise ValidationError(f"coupling must be non-negative, got {k}")
    nodes = tuple(node_set)
    if len(nodes) == 0 or len(set(nodes)) != len(nodes):
        raise ValidationError(f"node_set must hold distinct nodes, got {nodes}")
    n = adj.dim
    for j in nodes:
        if not (0 <= j < n):
            raise ValidationError(f"probed node {j} out of range for {n} nodes")
    a_tot = np.zeros((n + 1, n + 1))
    a_tot[0, 0] = 0.5 * omega_s**2
    a_tot[1:, 1:] = adj.a
    for j in nodes:
        a_tot[0, j + 1] = a_tot[j + 1, 0] = 0.5 * k
    evals, vecs = np.linalg.eigh(a_tot)
    if evals[0] <= STABILITY_RTOL * evals[-1]:
        raise NotPositiveDefinite(float(evals[0]))
    return TotalSystem(
        a_tot=a_tot,
        omega_s=omega_s,
        k=k,
        node_set=nodes,
        k_tot=vecs[:, ::-1].copy(),
        nus=np.sqrt(2.0 * evals[::-1]),
    )


def thermal_occupation(omega: float, temperature: float) -> float:
    """Planck mean boson number 1 / (exp(omega/T) - 1); zero at T = 0."""
    if omega <= 0:
        raise ValidationError(f"frequency must be positive, got {omega}")
    if temperature < 0:
        raise ValidationError(f"temperature must be >= 0, got {temperature}")
    if temperature == 0:
        return 0.0
    return float(1.0 / np.expm1(omega / temperature))


def initial_probe_occupation(init: ProbeInit, omega_s: float) -> float:
    """Mean occupation of the probe's initial state (known before any contact)."""
    if isinstance(init, Vacuum):
        return 0.0
    if isinstance(init, SqueezedVacuum):
        return float(np.sinh(init.r) ** 2)
    if isinstance(init, Thermal):
        return thermal_occupation(omega_s, init.t_p)
    raise ValidationError(f"unknown probe state {type(init).__name__}")


def _probe_cov_block(init: ProbeInit, omega_s: float) -> tuple[float, float, float]:
    """(qq, pp, qp) second moments of the probe's initial state."""
    qq_vac, pp_vac = 0.5 / omega_s, 0.5 * omega_s
    if isinstance(init, Vacuum):
        return qq_vac, pp_vac, 0.0
    if isinstance(init, SqueezedVacuum):
        ch, sh = np.cosh(2 * init.r), np.sinh(2 * init.r)
        qq = (ch - sh * np.cos(init.phi)) / (2 * omega_s)
        pp = omega_s * (ch + sh * np.cos(init.phi)) / 2
        qp = -0.5 * sh * np.sin(init.phi)
        return float(qq), float(pp), float(qp)
    if isinstance(init, Thermal):
        scale = 2.0 * thermal_occupation(omega_s, init.t_p) + 1.0
        return scale * qq_vac, scale * pp_vac, 0.0
    raise ValidationError(f"unknown probe state {type(init).__name__}")


def initial_state(
    init: ProbeInit, omega_s: float, eig: EigenSystem, temperature: float
) -> GaussianState:
    """Uncorrelated product of a probe state and a thermal network state.

    The network block is thermal at the given temperature with respect to
    its own Hamiltonian: each eigenmode carries (2 N(Omega_i, T) + 1) times
    its vacuum variances, rotated back to the node picture.
    """
    if temperature < 0:
        raise ValidationError(f"temperature must be >= 0, got {temperature}")
    n = eig.n
    m = n + 1
    occ = np.array([thermal_occupation(w, temperature) for w in eig.omegas])
    scale = 2.0 * occ + 1.0
    kmat = eig.k_matrix
    net_qq = (kmat * (scale / (2.0 * eig.omegas))) @ kmat.T
    net_pp = (kmat * (scale * eig.omegas / 2.0)) @ kmat.T
    cov = np.zeros((2 * m, 2 * m))
    cov[1:m, 1:m] = net_qq
    cov[m + 1 :, m + 1 :] = net_pp
    qq, pp, qp = _probe_cov_block(init, omega_s)
    cov[0, 0] = qq
    cov[m, m] = pp
    cov[0, m] = cov[m, 0] = qp
    return GaussianState(mean=np.zeros(2 * m), cov=cov)


def _propagator(sys: TotalSystem, t: float) -> np.ndarray:
    """Symplectic propagator S(t) in the node picture, (q..., p...) blocks."""
    cos = np.cos(sys.nus * t)
    sin = np.sin(sys.nus * t)
    kt = sys.k_tot
    s_qq = (kt * cos) @ kt.T
    s_qp = (kt * (sin / sys.nus)) @ kt.T
    s_pq = (kt * (-sys.nus * sin)) @ kt.T
    return np.block([[s_qq, s_qp], [s_pq, s_qq]])


def evolve(sys: TotalSystem, state: GaussianState, t: float) -> GaussianState:
    """Propagate a Gaussian state for time t >= 0, exactly.

    In mode coordinates Q(t) = Q cos(nu t) + P sin(nu t)/nu and
    P(t) = -nu Q sin(nu t) + P cos(nu t); the induced symplectic map acts on
    the covariance as S cov S^T and on the mean as S mean.
    """
    if t < 0:
        raise ValidationError(f"time must be >= 0, got {t}")
    if state.n_modes != sys.dim:
        raise ValidationError(
            f"state has {state.n_modes} modes, system expects {sys.dim}"
        )
    if t == 0:
        return state
    s = _propagator(sys, t)
    return GaussianState(mean=s @ state.mean, cov=s @ state.cov @ s.T)


def probe_second_moments(sys: TotalSystem, state: GaussianState, t: float) -> tuple[float, float]:
    """(<q_S^2>, <p_S^2>) of the evolved state without building the full state.

    Same propagator as evolve, restricted to the two rows that the probe
    marginal needs; O(M^2) per time point after the cached diagonalization.
    """
    if state.n_modes != sys.dim:
        raise ValidationError(
            f"state has {state.n_modes} modes, system expects {sys.dim}"
        )
    kt = sys.k_tot
    k0 = kt[0, :]
    cos = np.cos(sys.nus * t)
    sin = np.sin(sys.nus * t)
    row_q = np.concatenate([(k0 * cos) @ kt.T, (k0 * sin / sys.nus) @ kt.T])
    row_p = np.concatenate([(-k0 * sys.nus * sin) @ kt.T, (k0 * cos) @ kt.T])
    qq = float(row_q @ state.cov @ row_q)
    pp = float(row_p @ state.cov @ row_p)
    return qq, pp


def mean_occupation(state: GaussianState, omega_s: float) -> float:
    """Probe mean boson number from its marginal second moments (zero mean)."""
    m = state.n_modes
    qq = state.cov[0, 0]
    pp = state.cov[m, m]
    return float(0.5 * (omega_s * qq + pp / omega_s) - 0.5)


def total_energy(sys: TotalSystem, state: GaussianState) -> float:
    """<H> = tr(cov_pp) / 2 + tr(A_tot cov_qq) for a zero-mean state."""
    m = state.n_modes
    cov_qq = state.cov[:m, :m]
    cov_pp = state.cov[m:, m:]
    return float(0.5 * np.trace(cov_pp) + np.sum(sys.a_tot * cov_qq))


def predicted_occupation(
    t: Union[float, np.ndarray], j_at_omega_s: float, omega_s: float, temperature: float, n0: float
) -> Union[float, np.ndarray]:
    """Weak-coupling decay law for the probe occupation.

    <n(t)> = exp(-Gamma t) n0 + N(omega_s, T) (1 - exp(-Gamma t)) with decay
    rate Gamma = J(omega_s) / omega_s.
    """
    if j_at_omega_s < 0:
        raise ValidationError(f"spectral density must be >= 0, got {j_at_omega_s}")
    gamma = j_at_omega_s / omega_s
    decay = np.exp(-gamma * np.asarray(t, dtype=float))
    out = decay * n0 + thermal_occupation(omega_s, temperature) * (1.0 - decay)
    return float(out) if out.ndim == 0 else out
