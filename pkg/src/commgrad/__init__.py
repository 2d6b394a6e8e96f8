"""Gradient estimation for commuting-generator and commuting-block quantum circuits."""
from .pauli import PauliString, PauliSum, commutation_relation, pauli_product

__version__ = "0.1.0"

__all__ = ["PauliString", "PauliSum", "commutation_relation", "pauli_product"]
