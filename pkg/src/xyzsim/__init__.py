"""Dissipative XYZ Heisenberg lattice simulator.

Spin-1/2 lattices with anisotropic XYZ exchange and local spin-flip
dissipation: deterministic master-equation evolution, quantum-jump and
homodyne trajectory unravelings, exact Liouvillian spectra, and
magnetization-distribution analysis.
"""

__version__ = "0.1.0"

from .analysis import (
    DecayFit,
    MagHistogram,
    bimodality,
    bimodality_sweep,
    build_histogram,
    detect_modes,
    fit_decay,
    gap_sweep,
)
from .config import ExperimentConfig, load_config, load_preset
from .integrate import (
    TimeSeries,
    expectation,
    product_pure_state,
    product_state,
    rk4_evolve,
)
from .lattice import LatticeGeometry, build_chain, build_rect
from .liouville import (
    LiouvillianSpectrum,
    build_liouvillian,
    full_spectrum,
    steady_state_direct,
)
from .operators import (
    Couplings,
    PauliString,
    apply_pauli_string,
    build_effective_hamiltonian,
    build_hamiltonian,
    magnetization_x,
    pauli_matrix,
    z2_operator,
)
from .trajectories import (
    EnsembleResult,
    TrajectoryRecord,
    homodyne_trajectory,
    mcwf_trajectory,
    run_ensemble,
)

__all__ = [
    "Couplings",
    "DecayFit",
    "EnsembleResult",
    "ExperimentConfig",
    "LatticeGeometry",
    "LiouvillianSpectrum",
    "MagHistogram",
    "PauliString",
    "TimeSeries",
    "TrajectoryRecord",
    "apply_pauli_string",
    "bimodality",
    "bimodality_sweep",
    "build_chain",
    "build_effective_hamiltonian",
    "build_hamiltonian",
    "build_histogram",
    "build_liouvillian",
    "build_rect",
    "detect_modes",
    "expectation",
    "fit_decay",
    "full_spectrum",
    "gap_sweep",
    "homodyne_trajectory",
    "load_config",
    "load_preset",
    "magnetization_x",
    "mcwf_trajectory",
    "pauli_matrix",
    "product_pure_state",
    "product_state",
    "rk4_evolve",
    "run_ensemble",
    "steady_state_direct",
    "z2_operator",
]
