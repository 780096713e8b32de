"""Symmetry-protected topological indices of spin chains from matrix product states."""

from .ed import Interaction, builtin_interaction, build_hamiltonian, gap_sweep, low_spectrum, spin_matrices
from .entanglement import kramers_check, schmidt_spectrum_mps, schmidt_spectrum_vector
from .errors import SptError
from .mps import MpsTensor, aklt_tensor, invariant_state, primitivity_length, product_tensor, right_normalize
from .parent import frustration_free_residual, interval_ground_space, parent_interaction
from .symmetry import FiniteGroup, projective_rep, tr_index, z2xz2_group

__version__ = "0.1.0"

__all__ = [
    "FiniteGroup",
    "Interaction",
    "MpsTensor",
    "SptError",
    "aklt_tensor",
    "build_hamiltonian",
    "builtin_interaction",
    "frustration_free_residual",
    "gap_sweep",
    "interval_ground_space",
    "invariant_state",
    "kramers_check",
    "low_spectrum",
    "parent_interaction",
    "primitivity_length",
    "product_tensor",
    "projective_rep",
    "right_normalize",
    "schmidt_spectrum_mps",
    "schmidt_spectrum_vector",
    "spin_matrices",
    "tr_index",
    "z2xz2_group",
]
