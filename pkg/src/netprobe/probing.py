"""Measurement-only probing protocol.

Everything in this module sees the network exclusively through the
NetworkOracle interface: attach a probe, let it interact for a time t, read
its mean occupation.  From such readings it estimates the spectral density
(continuum regime, interaction time below the recurrence time) or detects
individual eigenfrequencies (discrete regime, longer times).
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

import numpy as np
from scipy.signal import find_peaks

from .dynamics import ProbeInit, Vacuum, initial_probe_occupation, thermal_occupation
from .errors import (
    DegenerateContrast,
    GridTooCoarse,
    RegimeWarning,
    SignFlip,
    ValidationError,
)
from .spectral import SampledSpectrum

CONTRAST_EPS_SCALE = 1e-9  # |dn(0)| below this times max(1, N(w)) carries no signal

STATUS_OK = "ok"
STATUS_DEGENERATE = "degenerate_contrast"
STATUS_SIGN_FLIP = "sign_flip"
STATUS_UNSTABLE = "unstable"


class NetworkOracle(Protocol):
    """Single capability exposed by an unknown network: occupation readout."""

    def measure(
        self,
        node_set: Iterable[int],
        omega_s: float,
        k: float,
        init: ProbeInit,
        t: float,
    ) -> float:
        """Mean probe occupation after interacting with the node(s) for time t."""
        ...


@dataclass(frozen=True)
class ProbeSchedule:
    """A frequency scan plan: grid, interaction time, coupling and probe state.

    The network temperature is assumed known.  tau_f_hint and omega_max_hint
    are optional prior estimates used only to annotate the regime and check
    the non-Markovian floor t >= 10 / omega_max.
    """

    omegas: np.ndarray
    t: float
    k: float
    init: ProbeInit = field(default_factory=Vacuum)
    temperature: float = 0.0
    node_set: tuple[int, ...] = (0,)
    tau_f_hint: float | None = None
    omega_max_hint: float | None = None

    def __post_init__(self):
        grid = np.asarray(self.omegas, dtype=float)
        if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) <= 0):
            raise ValidationError("frequency grid must be non-empty and strictly increasing")
        object.__setattr__(self, "omegas", grid)
        if self.t <= 0:
            raise ValidationError(f"interaction time must be positive, got {self.t}")
        if self.k <= 0:
            raise ValidationError(f"coupling must be positive, got {self.k}")
        if self.temperature < 0:
            raise ValidationError(f"temperature must be >= 0, got {self.temperature}")

    @property
    def regime(self) -> str:
        if self.tau_f_hint is None:
            return "unknown"
        return "continuum" if self.t < self.tau_f_hint else "discrete"

    def grid_step(self) -> float:
        if self.omegas.size < 2:
            return 0.0
        return float(np.min(np.diff(self.omegas)))


@dataclass(frozen=True)
class ScanResult:
    """Per-frequency spectral-density estimates with per-point status codes."""

    omegas: np.ndarray
    j_est: np.ndarray  # NaN where the point could not be estimated
    status: tuple[str, ...]
    t: float

    def ok(self) -> np.ndarray:
        return np.array([s == STATUS_OK for s in self.status])

    def to_spectrum(self) -> SampledSpectrum:
        """Valid points only, as a SampledSpectrum (t_max = interaction time)."""
        mask = self.ok()
        return SampledSpectrum(omegas=self.omegas[mask], j=self.j_est[mask], t_max=self.t)


@dataclass(frozen=True)
class DetectionResult:
    """Eigenfrequency candidates (descending), with detection diagnostics."""

    omegas: np.ndarray
    heights: np.ndarray
    complete: bool
    expected_count: int
    grid_step: float


@dataclass(frozen=True)
class ThermalTimeResult:
    """First time the probe-network energy flow reverses, if it does."""

    tau_thermal: float
    reversed: bool


# ---------------------------------------------------------------------------
# Operations


def estimate_density_point(
    n_t: float, n_0: float, omega_s: float, t: float, temperature: float
) -> float:
    """Invert the occupation decay law for the spectral density at omega_s.

    J(omega_s) = (omega_s / t) * ln(dn(0) / dn(t)) with dn(t) = N(omega_s) - <n(t)>.
    Tiny negative results (noise floor) are clipped to zero.  Raises
    DegenerateContrast when the probe starts at the thermal fixed point and
    SignFlip when the contrast crosses zero before t.
    """
    n_eq = thermal_occupation(omega_s, temperature)
    dn0 = n_eq - n_0
    dnt = n_eq - n_t
    eps = CONTRAST_EPS_SCALE * max(1.0, n_eq)
    if abs(dn0) < eps:
        raise DegenerateContrast(
            f"initial contrast {dn0:.3g} below {eps:.3g} at omega_s={omega_s:.6g}"
        )
    if dn0 * dnt <= 0 or abs(dnt) < eps:
        raise SignFlip(
            f"contrast changed sign between 0 and t={t:.6g} at omega_s={omega_s:.6g}"
        )
    return max(0.0, float(omega_s / t * np.log(dn0 / dnt)))


def scan_density(
    oracle: NetworkOracle, schedule: ProbeSchedule, threads: int = 1
) -> ScanResult:
    """Estimate J on the schedule grid from one occupation readout per point.

    Points that cannot be inverted (no contrast, sign flip, unstable probe
    frequency) become NaN gaps with a reason code instead of failing the scan.
    """
    if schedule.omega_max_hint is not None and schedule.t < 10.0 / schedule.omega_max_hint:
        warnings.warn(
            f"t={schedule.t:.4g} is inside the non-Markovian transient "
            f"(10/omega_max = {10.0 / schedule.omega_max_hint:.4g})",
            RegimeWarning,
            stacklevel=2,
        )

    def one(omega_s: float) -> tuple[float, str]:
        n_0 = initial_probe_occupation(schedule.init, omega_s)
        try:
            n_t = oracle.measure(schedule.node_set, omega_s, schedule.k, schedule.init, schedule.t)
        except Exception:
            return float("nan"), STATUS_UNSTABLE
        try:
            j = estimate_density_point(n_t, n_0, omega_s, schedule.t, schedule.temperature)
        except DegenerateContrast:
            return float("nan"), STATUS_DEGENERATE
        except SignFlip:
            return float("nan"), STATUS_SIGN_FLIP
        return j, STATUS_OK

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, schedule.omegas))
    else:
        results = [one(w) for w in schedule.omegas]
    j_est = np.array([r[0] for r in results])
    status = tuple(r[1] for r in results)
    return ScanResult(omegas=schedule.omegas, j_est=j_est, status=status, t=schedule.t)


def detect_eigenfrequencies(
    oracle: NetworkOracle,
    schedule: ProbeSchedule,
    expected_count: int,
    prominence_factor: float = 3.0,
    threads: int = 1,
) -> DetectionResult:
    """Locate eigenfrequencies as peaks of the discrete-regime J estimate.

    Peaks must rise above prominence_factor times the median of the scan
    curve; positions are refined by three-point parabolic interpolation.
    Finding fewer than expected_count peaks is reported (complete=False),
    not an error: the probed node may simply not couple to every mode.
    Raises GridTooCoarse when two refined peaks sit closer than two grid
    steps, since they cannot be trusted as separate modes.
    """
    scan = scan_density(oracle, schedule, threads=threads)
    j = np.where(np.isfinite(scan.j_est), scan.j_est, 0.0)
    if not np.any(j > 0):
        return DetectionResult(
            omegas=np.array([]),
            heights=np.array([]),
            complete=expected_count == 0,
            expected_count=expected_count,
            grid_step=schedule.grid_step(),
        )
    floor = prominence_factor * float(np.median(j))
    idx, _ = find_peaks(j, prominence=floor if floor > 0 else None)
    omegas = scan.omegas
    refined = []
    for i in idx:
        if 0 < i < len(j) - 1:
            denom = j[i - 1] - 2 * j[i] + j[i + 1]
            shift = 0.0 if denom == 0 else 0.5 * (j[i - 1] - j[i + 1]) / denom
            shift = float(np.clip(shift, -0.5, 0.5))
            refined.append(omegas[i] + shift * (omegas[min(i + 1, len(j) - 1)] - omegas[i]))
        else:
            refined.append(omegas[i])
    freqs = np.sort(np.asarray(refined))[::-1]
    step = schedule.grid_step()
    if freqs.size >= 2 and np.any(-np.diff(freqs) < 2.0 * step):
        raise GridTooCoarse(
            f"adjacent peaks closer than two grid steps ({2 * step:.3g}); refine the grid"
        )
    heights = j[idx][np.argsort(np.asarray(refined))[::-1]]
    return DetectionResult(
        omegas=freqs,
        heights=heights,
        complete=freqs.size >= expected_count,
        expected_count=expected_count,
        grid_step=step,
    )


def measure_thermal_time(
    oracle: NetworkOracle,
    omega_s: float,
    k: float,
    init: ProbeInit,
    t_grid: Sequence[float] | np.ndarray,
    node_set: Iterable[int] = (0,),
    slope_tol: float = 1e-3,
) -> ThermalTimeResult:
    """First time the occupation slope reverses after the initial transient.

    Scans <n(t)> on t_grid, establishes the initial flow direction from the
    first finite-difference slope exceeding slope_tol times the largest one,
    and reports the midpoint of the first interval with the opposite sign.
    Without a reversal inside the grid, returns the grid end flagged.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 3 or np.any(np.diff(t_grid) <= 0):
        raise ValidationError("t_grid must be an increasing grid with >= 3 points")
    nodes = tuple(node_set)
    n_vals = np.array([oracle.measure(nodes, omega_s, k, init, t) for t in t_grid])
    slopes = np.diff(n_vals)
    scale = float(np.abs(slopes).max())
    if scale == 0.0:
        return ThermalTimeResult(tau_thermal=float(t_grid[-1]), reversed=False)
    floor = slope_tol * scale
    direction = 0.0
    for i, s in enumerate(slopes):
        if direction == 0.0:
            if abs(s) > floor:
                direction = np.sign(s)
            continue
        if s * direction < 0 and abs(s) > floor:
            return ThermalTimeResult(
                tau_thermal=float(0.5 * (t_grid[i] + t_grid[i + 1])), reversed=True
            )
    return ThermalTimeResult(tau_thermal=float(t_grid[-1]), reversed=False)
