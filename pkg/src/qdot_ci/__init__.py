"""Double-quantum-dot two-electron spectra from tight-binding orbitals and CI."""

from .analysis import (
    ChargeStabilityMap,
    OscillationTrace,
    SweepTable,
    TLSParams,
    charge_stability,
    coherent_oscillation,
    detuning_sweep,
    distance_sweep,
    fit_anticrossing,
    run_point,
)
from .ci import (
    CoulombParams,
    Determinant,
    DeterminantBasis,
    IntegralTable,
    ManyBodySpectrum,
    SpinOrbital,
    build_determinant_basis,
    compute_integrals,
    diagonalize_ci,
    slater_condon_element,
    spin_squared,
)
from .config import RunConfig, load_config, parse_config
from .eigensolver import SingleParticleSpectrum, dense_eigensolve, partial_eigensolve
from .errors import CapacityError, ConvergenceError, PipelineError, QdotError, ValidationError
from .hamiltonian import (
    SparseHamiltonian,
    TightBindingParams,
    TwoWellPotential,
    assemble_hamiltonian,
    evaluate_potential,
)
from .lattice import Lattice, LatticeSpec, build_lattice

__version__ = "0.1.0"
