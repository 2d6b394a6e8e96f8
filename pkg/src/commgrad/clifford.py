"""Conjugation of Pauli strings by named Clifford gates: ``P -> g P g^dagger``.

Lookup tables are generated once from the dense gate matrices used by the
simulator, so the symbolic action and the simulated action cannot drift
apart.
"""
from __future__ import annotations

import itertools

import numpy as np

from .pauli import PauliString
from .sim.circuit import Circuit, ControlledSubcircuit, GlobalPhase, NamedClifford, PauliRotation
from .sim.statevector import ONE_QUBIT_GATES

_LABELS = "IXYZ"


def _dense_two_qubit(kind: str) -> np.ndarray:
    if kind == "CZ":
        return np.diag([1, 1, 1, -1]).astype(complex)
    # CNOT, control = first target
    return np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def _match(m: np.ndarray, width: int) -> tuple[int, str]:
    for word in map("".join, itertools.product(_LABELS, repeat=width)):
        ref = PauliString.from_label(word).to_matrix()
        for k in range(4):
            if np.allclose(m, (1j ** k) * ref, atol=1e-12):
                return k, word
    raise AssertionError("gate is not Clifford")


def _build_tables() -> dict[str, dict[str, tuple[int, str]]]:
    tables = {}
    for kind, u in ONE_QUBIT_GATES.items():
        tables[kind] = {}
        for c in _LABELS:
            p = PauliString.from_label(c).to_matrix()
            tables[kind][c] = _match(u @ p @ u.conj().T, 1)
    for kind in ("CZ", "CNOT"):
        u = _dense_two_qubit(kind)
        tables[kind] = {}
        for word in map("".join, itertools.product(_LABELS, repeat=2)):
            p = PauliString.from_label(word).to_matrix()
            tables[kind][word] = _match(u @ p @ u.conj().T, 2)
    return tables


CONJUGATION = _build_tables()


def conjugate(p: PauliString, gate: NamedClifford) -> PauliString:
    """``g p g^dagger`` for one named Clifford gate."""
    chars = list(p.word)
    local = "".join(chars[t] for t in gate.targets)
    k, new = CONJUGATION[gate.kind][local]
    for t, c in zip(gate.targets, new):
        chars[t] = c
    return PauliString.from_label("".join(chars)).with_phase(p.phase + k)


def conjugate_by_circuit(p: PauliString, circuit: Circuit) -> PauliString:
    """``C p C^dagger`` for a circuit of named Cliffords (and ignorable phases).

    Rotations by multiples of pi/2 are Paulis up to phase and are accepted too.
    """
    for g in circuit.gates:
        if isinstance(g, NamedClifford):
            p = conjugate(p, g)
        elif isinstance(g, GlobalPhase):
            continue
        elif isinstance(g, PauliRotation) and np.isclose(np.mod(g.angle, np.pi / 2), 0.0):
            k = int(round(g.angle / (np.pi / 2)))
            if k % 2 and not p.commutes_with(g.word):
                p = -p
        else:
            raise ValueError(f"not a Clifford gate: {g!r}")
    return p


def is_clifford_circuit(circuit: Circuit) -> bool:
    return all(isinstance(g, (NamedClifford, GlobalPhase)) for g in circuit.gates) and not any(
        isinstance(g, ControlledSubcircuit) for g in circuit.gates
    )
