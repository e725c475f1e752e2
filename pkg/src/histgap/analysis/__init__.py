"""Overlap diagnostics, design and bound formulas, and experiment drivers."""

from .bounds import (BoundParams, concentration_plugin, lemma_failure_bounds, low_tail_bound, net_sizes,
                     plugin_delta, truncation_energy_rhs)
from .designs import (DesignEnsembleSpec, bhh_design_length, design_order, frame_potential,
                      haar_frame_potential)
from .experiments import (DesignConfig, bonus_ground_amplitudes, ExperimentReport, FHConfig, GapConfig, SplitConfig, design_experiment,
                          fh_experiment, gap_experiment, low_energy_witnesses, split_experiment)
from .overlap import fh_decay_profile, local_cross_overlap_max

__all__ = [
    "BoundParams", "DesignConfig", "DesignEnsembleSpec", "ExperimentReport", "FHConfig", "GapConfig",
    "SplitConfig", "bhh_design_length", "bonus_ground_amplitudes", "concentration_plugin", "design_experiment", "design_order",
    "fh_decay_profile", "fh_experiment", "frame_potential", "gap_experiment", "haar_frame_potential",
    "lemma_failure_bounds", "local_cross_overlap_max", "low_energy_witnesses", "low_tail_bound",
    "net_sizes", "plugin_delta", "split_experiment", "truncation_energy_rhs",
]
