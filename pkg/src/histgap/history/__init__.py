"""History states, generalised history states and their diagnostics."""

from .amplitudes import (AmplitudeCheckParams, check_amplitudes_case1, check_amplitudes_case2,
                         endpoint_profile, geometric_profile, uniform_profile, zero_window_profile)
from .generalized import (SHAPES, GeneralizedHistoryState, ReductionMap, SiteSectors,
                          frustration_free_hamiltonian, location_encoded_shape, reduction_report,
                          random_generalized_instance, reduce_to_standard, spacetime_shape,
                          tdim_clock_shape, unary_clock_shape)
from .poset import TimePoset
from .states import (HistoryState, JunkUnitary, standard_history_state, truncated_states,
                     xi_split)

__all__ = [
    "AmplitudeCheckParams", "GeneralizedHistoryState", "HistoryState", "JunkUnitary",
    "ReductionMap", "SHAPES", "SiteSectors", "TimePoset", "check_amplitudes_case1",
    "check_amplitudes_case2", "endpoint_profile", "frustration_free_hamiltonian",
    "geometric_profile", "location_encoded_shape", "random_generalized_instance",
    "reduce_to_standard", "reduction_report", "spacetime_shape", "standard_history_state", "tdim_clock_shape",
    "truncated_states", "unary_clock_shape", "uniform_profile", "xi_split", "zero_window_profile",
]
