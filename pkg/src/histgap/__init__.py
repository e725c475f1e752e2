"""Numerical workbench for history-state Hamiltonians.

Circuits are compiled into clock Hamiltonians, their spectra are computed
with dense or Krylov solvers, and history-state diagnostics and bound
formulas are evaluated alongside.
"""

__version__ = "0.1.0"

from .errors import (ConvergenceError, DegenerateError, DimensionError, HermiticityError, HistgapError,
                     IncompleteSpecificationError, ResourceError, StructureError, ValidationError)
from .hamiltonian import (LocalHamiltonian, LocalTerm, assemble, compile_feynman_kitaev, gamma_norm,
                          quasi_local_norm)
from .qcircuit import Circuit, Gate, QuditRegister, identity_circuit, sample_local_random_circuit
from .rng import derive_seed, make_rng
from .spectral import SpectrumResult, energy, ground_and_gap, low_energy_dimension

__all__ = [
    "Circuit", "ConvergenceError", "DegenerateError", "DimensionError", "Gate", "HermiticityError",
    "HistgapError", "IncompleteSpecificationError", "LocalHamiltonian", "LocalTerm", "QuditRegister",
    "ResourceError", "SpectrumResult", "StructureError", "ValidationError", "__version__", "assemble",
    "compile_feynman_kitaev", "derive_seed", "energy", "gamma_norm", "ground_and_gap", "identity_circuit",
    "low_energy_dimension", "make_rng", "quasi_local_norm", "sample_local_random_circuit",
]
