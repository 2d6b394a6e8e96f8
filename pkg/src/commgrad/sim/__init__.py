"""Dense statevector simulation of Pauli-rotation circuits."""
from .circuit import Circuit, ControlledSubcircuit, GlobalPhase, NamedClifford, PauliRotation
from .statevector import StateVector, apply_pauli_rotation, expectation, sample_bitstrings, sample_counts

__all__ = [
    "Circuit",
    "ControlledSubcircuit",
    "GlobalPhase",
    "NamedClifford",
    "PauliRotation",
    "StateVector",
    "apply_pauli_rotation",
    "expectation",
    "sample_bitstrings",
    "sample_counts",
]
