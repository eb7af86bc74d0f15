"""Time-dependent harmonic oscillator dynamics via time-dependent dilatations.

The engine reduces the Schroedinger dynamics of an arbitrary oscillator
m(t), omega(t) to a scalar auxiliary ODE, builds the closed-form evolution
operator factorization and its Heisenberg symplectic map, classifies the
exactly-solvable mass/frequency family, and checks everything against
independent brute-force oracles.  hbar = 1 throughout.
"""

from .auxode import (
    AuxiliarySolution,
    residual,
    rescale,
    solve_classical,
    solve_ermakov,
    wronskian,
)
from .canon import (
    DiffeoKind,
    DilatationParameter,
    LINEAR,
    QUADRATIC,
    QuadraticHamiltonian,
    classify,
    diffeo_jacobian,
    diffeo_map,
    dilatation_transform,
    effective_frequency_sq,
    exponential,
    flow_compose,
    induced_metric,
    solvability_residual,
    standardize,
)
from .errors import (
    BoxOverflowError,
    ConfigError,
    DomainError,
    GridMismatchError,
    ImaginaryFrequencyError,
    PositivityError,
    PositivityHorizonError,
    StiffnessError,
    TdhoError,
    UsageError,
)
from .oracle import (
    GridState,
    fidelity,
    from_gaussian,
    fundamental_matrix,
    fundamental_matrix_dense,
    generator_commutator_check,
    grid_norm,
    grid_propagate,
    moments,
)
from .profiles import (
    OscillatorProfile,
    caldirola_kanai,
    constant_profile,
    polynomial_profile,
    profile_from_config,
    sinusoidal_profile,
    solvable_frequency,
    solvable_mass_family,
    tabulated_profile,
    with_frequency,
)
from .propagator import (
    GaussianState,
    PropagatorFactorization,
    SymplecticMap,
    evolve_gaussian,
    factorize,
    heisenberg_map,
    phase_integral,
    symplectic_coefficients,
)

__version__ = "0.1.0"
