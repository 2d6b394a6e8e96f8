"""Clifford circuits that map commuting Pauli observables onto Z/I strings.

Each function returns a :class:`Diagonalization`: the circuit ``D`` to append
before computational-basis measurement, and for every input ``O`` the signed
Z-type string ``D O D^dagger``.  Signs live in those strings, never in the
circuit, so one sampled circuit serves every observable of the set.
"""
from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from .clifford import conjugate, conjugate_by_circuit
from .pauli import PauliString, symplectic_product
from .sim.circuit import Circuit, NamedClifford


class Diagonalization(NamedTuple):
    circuit: Circuit
    diagonal: list[PauliString]  # signed Z/I strings, one per input


class NotCommutingError(ValueError):
    pass


def _check_commuting(ops: Sequence[PauliString]) -> None:
    for i in range(len(ops)):
        for j in range(i + 1, len(ops)):
            if symplectic_product(ops[i], ops[j]):
                raise NotCommutingError(f"{ops[i].label()} and {ops[j].label()} anticommute")


def independent_subset(ops: Sequence[PauliString]) -> list[int]:
    """Indices of a maximal GF(2)-independent subset, scanning in order."""
    if not ops:
        return []
    n = ops[0].n_qubits
    rows: list[np.ndarray] = []
    pivots: list[int] = []
    keep = []
    for idx, p in enumerate(ops):
        v = np.concatenate([p.x, p.z]).astype(np.uint8)
        for r, c in zip(rows, pivots):
            if v[c]:
                v ^= r
        nz = np.flatnonzero(v)
        if nz.size:
            rows.append(v)
            pivots.append(int(nz[0]))
            keep.append(idx)
    assert len(keep) <= 2 * n
    return keep


def diagonalizer_general(observables: Sequence[PauliString]) -> Diagonalization:
    """Diagonalise pairwise-commuting Pauli strings by GF(2) elimination.

    An independent subset is mapped one element at a time onto single-qubit
    ``Z`` operators on distinct pivot qubits: basis changes (``H`` for X,
    ``H_xy`` then ``H`` for Y) on the element's not-yet-pivoted support,
    ``CNOT``s folding that support onto one new pivot, and ``CNOT``s from
    earlier pivots clearing its remaining Z factors.  Those gates leave the
    earlier pivots' single-Z images fixed, and every other input is a
    product of the independent ones, so it ends up Z-type as well.
    """
    obs = list(observables)
    if not obs:
        raise ValueError("need at least one observable")
    n = obs[0].n_qubits
    _check_commuting(obs)
    current = [obs[i].unsigned() for i in independent_subset(obs)]
    circ = Circuit(n)

    def push(g: NamedClifford) -> None:
        circ.append(g)
        for k in range(len(current)):
            current[k] = conjugate(current[k], g)

    pivots: list[int] = []
    for i in range(len(current)):
        free = [q for q in current[i].support if q not in pivots]
        if not free:
            raise AssertionError("dependent element slipped through elimination")
        for q in free:
            c = current[i].word[q]
            if c == "Y":
                push(NamedClifford("H_xy", (q,)))
            if c in "XY":
                push(NamedClifford("H", (q,)))
        target = free[0]
        for q in free[1:]:
            push(NamedClifford("CNOT", (q, target)))
        for q in pivots:
            if current[i].z[q]:
                push(NamedClifford("CNOT", (q, target)))
        pivots.append(target)
    diagonal = [conjugate_by_circuit(o, circ) for o in obs]
    for o, d in zip(obs, diagonal):
        if not d.is_z_type():
            raise AssertionError(f"failed to diagonalise {o.label()} -> {d.label()}")
    return Diagonalization(circ, diagonal)


def z_product_layout(observable: PauliString) -> list[int]:
    """Qubits carrying Z in a Z/I-only observable."""
    if not observable.is_z_type() or observable.is_identity():
        raise ValueError(f"{observable.label()} is not a non-trivial product of Z operators")
    return list(observable.support)


def diagonalizer_x_ansatz(observable: PauliString) -> Circuit:
    """``D`` for X-type generators and a Z-product observable on ``m`` qubits.

    ``H_xy`` on each of the ``m`` qubits followed by ``CZ`` on every pair of
    them.  It maps each first-order observable ``2i G_j H`` back onto
    ``2 G_j``, so all derivatives are read off an X-basis measurement.

    The ``H_xy`` layer flips the sign of each of the ``m - m_j`` Z factors,
    leaving an overall ``(-1)**(m - 1)``; for even ``m`` a final layer of
    ``Z`` gates (anticommuting with every odd-overlap ``G_j``) removes it.
    """
    qubits = z_product_layout(observable)
    c = Circuit(observable.n_qubits)
    for q in qubits:
        c.clifford("H_xy", q)
    for a in range(len(qubits)):
        for b in range(a + 1, len(qubits)):
            c.clifford("CZ", qubits[a], qubits[b])
    if len(qubits) % 2 == 0:
        for q in qubits:
            c.clifford("Z", q)
    return c


def diagonalizer_second_order_x(observable: PauliString) -> Circuit:
    """``D H_zy^(1)``: ``H_zy`` on the first Z qubit, then :func:`diagonalizer_x_ansatz`.

    Maps ``-4 G_j G_k H`` onto ``(-1)**beta * 4 X_first G_j G_k`` with
    ``beta = 0`` exactly when ``G_j G_k`` carries X on that first qubit.
    """
    qubits = z_product_layout(observable)
    c = Circuit(observable.n_qubits)
    c.clifford("H_zy", qubits[0])
    return c + diagonalizer_x_ansatz(observable)


def x_basis_readout(n_qubits: int) -> Circuit:
    """Hadamard on every qubit, turning an X-basis measurement into a Z-basis one."""
    c = Circuit(n_qubits)
    for q in range(n_qubits):
        c.clifford("H", q)
    return c


def sign_factor(m_j: int) -> int:
    """``i**(m_j - 1)`` for odd overlap ``m_j``: +1 if ``m_j % 4 == 1``, else -1."""
    if m_j % 2 == 0:
        raise ValueError("overlap must be odd for an anticommuting generator")
    return 1 if m_j % 4 == 1 else -1


def second_order_sign_factor(m_jk: int) -> int:
    """``(-1)**(m_jk/2 + 1)``: +1 if ``m_jk % 4 == 2``, else -1."""
    if m_jk % 2:
        raise ValueError("second-order Y count must be even")
    return 1 if m_jk % 4 == 2 else -1
