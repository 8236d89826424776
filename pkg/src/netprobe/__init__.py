"""Coupled harmonic-oscillator networks: spectral densities, exact probe
dynamics, and blind reconstruction of spectra and topology from
probe-occupation measurements."""

from .network import (
    AdjacencyMatrix,
    Chain,
    ErdosRenyi,
    NetworkSpec,
    PeriodicChain,
    ShortcutChain,
    SmallWorld,
    TopologyRecipe,
    generate,
    to_adjacency,
    validate_stability,
)
from .spectral import (
    CouplingVector,
    EigenSystem,
    SampledSpectrum,
    SpectralComb,
    damping_kernel,
    diagonalize,
    probe_couplings,
    recurrence_time,
    spectral_density_comb,
    spectral_density_smooth,
)
from .dynamics import (
    GaussianState,
    SqueezedVacuum,
    Thermal,
    TotalSystem,
    Vacuum,
    assemble_total,
    evolve,
    initial_state,
    mean_occupation,
    predicted_occupation,
    thermal_occupation,
)
from .oracle import NoisyOracle, SimulatorOracle
from .probing import (
    NetworkOracle,
    ProbeSchedule,
    detect_eigenfrequencies,
    estimate_density_point,
    measure_thermal_time,
    scan_density,
)
from .reconstruction import (
    MagnitudeTable,
    ReconstructConfig,
    ReconstructionReport,
    SignedK,
    assemble_adjacency,
    compare_adjacency,
    magnitudes_from_density,
    nearest_orthonormal,
    reconstruct,
    resolve_signs,
)

__version__ = "0.1.0"
