"""Quantum sawtooth map simulator and entanglement diagnostics."""

from .analysis import (
    FitModel,
    FitReport,
    LocalizationEstimate,
    ProfileAverager,
    count_entangled_qubits,
    critical_ell,
    estimate_ell,
    estimate_ell_from_profile,
    fit_exponential,
    fit_power_law,
    localization_time,
    saturation_value,
    small_ell_concurrence_model,
    theoretical_ell,
)
from .dynamics import MapParams, apply_floquet, dft_angle_to_momentum, dft_momentum_to_angle, evolve
from .entanglement import (
    ConcurrenceResult,
    DensityMatrix,
    concurrence,
    concurrence_of_pair,
    reduce_to_block,
    reduce_to_pair,
    von_neumann_entropy,
)
from .errors import SimulationError
from .statevec import (
    BasisTag,
    StateVector,
    coarse_graining_distance,
    flat_phase_localized_state,
    momentum_eigenstate,
)
