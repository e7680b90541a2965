"""Universal randomized benchmarking: twirling maps, decay simulation and certification."""
__version__ = "0.1.0"

from .superops import (
    Superoperator,
    adjoint,
    amplitude_damping,
    choi,
    compose,
    depolarizing,
    identity_channel,
    is_cptp,
    pauli_channel,
    replacement,
    so_norm,
    unitary_channel,
)
from .diamond import diamond_norm
from .noise import NoiseModel, depolarizing_noise, gate_dependent, replacement_noise
from .twirling import (
    GateEnsemble,
    gamma_bounds,
    haar_twirl,
    ideal_twirl,
    make_ensemble,
    physical_twirl,
)
from .perturbation import fixed_point_state, spectral_split, verify_corollary
from .schemes import (
    URBScheme,
    build_clifford_rb,
    build_cycle_benchmarking,
    build_linear_xeb,
    build_nonuniform_rb,
    build_pauli_ensemble,
    build_scheme,
    enumerate_decay,
    exact_decay,
    monte_carlo_decay,
    scheme_quality,
    theorem_bound_check,
)
from .fitting import avg_fidelity, fit_exponential, robustness_bound
