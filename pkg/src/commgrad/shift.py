"""Parameter-shift gradients for circuits of Pauli-word and controlled-Pauli rotations.

For ``exp(-i a P)`` with ``P**2 = 1`` the cost is ``A + B cos 2a + C sin 2a``,
so ``dC/da = C(a + pi/4) - C(a - pi/4)``.  A controlled rotation
``exp(-i a |v><v| (x) P)`` has generator eigenvalues ``{0, +-1}`` and needs
the four-term rule ``c1 [C(a + pi/4) - C(a - pi/4)] + c2 [C(a + 3pi/4) - C(a - 3pi/4)]``
with ``c1 = (1 + 1/sqrt 2)/2`` and ``c2 = (1/sqrt 2 - 1)/2``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .clifford import conjugate_by_circuit
from .commuting import Estimate
from .diagonalize import diagonalizer_general
from .ledger import ShotLedger
from .pauli import PauliString, PauliSum, symplectic_product
from .sim import statevector as sv
from .sim.circuit import Circuit, ControlledSubcircuit, PauliRotation

PAULI_SHIFTS = ((np.pi / 4, 1.0),)
_C1 = (1 + 1 / np.sqrt(2)) / 2
_C2 = (1 / np.sqrt(2) - 1) / 2
CONTROLLED_SHIFTS = ((np.pi / 4, _C1), (3 * np.pi / 4, _C2))


@dataclass(frozen=True)
class ShiftGroup:
    """Gates shifted together, each read out from its own part of the observable.

    Valid when shifting gate ``gates[k]`` changes only the expectation of
    ``readouts[k]`` and no other gate of the group affects that part.
    """

    gates: tuple[int, ...]
    readouts: tuple[PauliSum, ...]


def _rotation(g) -> PauliRotation:
    if isinstance(g, PauliRotation):
        return g
    if isinstance(g, ControlledSubcircuit):
        body = g.body.gates
        if len(body) == 1 and isinstance(body[0], PauliRotation):
            return body[0]
    raise ValueError(f"cannot parameter-shift gate {g!r}")


def _shifted(gate, delta: float):
    if isinstance(gate, PauliRotation):
        return replace(gate, angle=gate.angle + delta)
    rot = _rotation(gate)
    body = Circuit(gate.body.n_qubits, [replace(rot, angle=rot.angle + delta)])
    return ControlledSubcircuit(gate.control, gate.value, body)


def shift_rule(gate) -> tuple[tuple[float, float], ...]:
    """``(shift, coefficient)`` pairs for one differentiated gate."""
    _rotation(gate)
    return CONTROLLED_SHIFTS if isinstance(gate, ControlledSubcircuit) else PAULI_SHIFTS


def circuits_per_gate(gate) -> int:
    return 2 * len(shift_rule(gate))


class _Reader:
    """Expectation of observable parts from one shifted circuit, exact or sampled.

    Terms are split greedily into commuting groups; each group is read from
    its own diagonalised copy of the circuit.
    """

    def __init__(self, observable: PauliSum, n: int):
        groups: list[list[PauliString]] = []
        for _, w in observable:
            for g in groups:
                if all(not symplectic_product(w, q) for q in g):
                    g.append(w)
                    break
            else:
                groups.append([w])
        self.bases = []
        for g in groups:
            if all(w.is_z_type() for w in g):
                self.bases.append(Circuit(n))
            else:
                self.bases.append(diagonalizer_general([w.unsigned() for w in g]).circuit)
        self.members = [set(w.key() for w in g) for g in groups]
        self.n = n

    @property
    def circuits(self) -> int:
        return len(self.bases)

    def tables(self, part: PauliSum) -> list[np.ndarray | None]:
        """Per group, the eigenvalue table of the part's terms in that group (``None`` if empty)."""
        out: list[np.ndarray | None] = []
        for basis, keys in zip(self.bases, self.members):
            v = None
            for c, w in part:
                if w.key() not in keys:
                    continue
                d = conjugate_by_circuit(w, basis)
                v = (0 if v is None else v) + c * d.sign * sv.parity_signs(d.z_mask, self.n)
            out.append(v)
        return out

    def read(self, psi, parts: Sequence[list], shots, rng) -> tuple[list[float], list[float]]:
        means = [0.0] * len(parts)
        varis = [0.0] * len(parts)
        for k, basis in enumerate(self.bases):
            out = basis.apply(psi)
            p = np.abs(out) ** 2
            p /= p.sum()
            counts = rng.multinomial(shots, p) if shots is not None else None
            for i, tabs in enumerate(parts):
                v = tabs[k]
                if v is None:
                    continue
                if counts is None:
                    means[i] += float(p @ v)
                    continue
                mu = float(counts @ v) / shots
                means[i] += mu
                varis[i] += float(counts @ (v - mu) ** 2) / max(shots - 1, 1) / shots
        return means, varis


def parameter_shift_gradient(
    circuit: Circuit,
    observable: PauliSum,
    n_params: int,
    shots: int | None,
    rng: np.random.Generator | None = None,
    psi0: np.ndarray | None = None,
    groups: Sequence[ShiftGroup] | None = None,
) -> Estimate:
    """Gradient of ``<H>`` w.r.t. the parameter tags of ``circuit``.

    Every tagged gate ``angle = scale * theta[p] + const`` is shifted on its
    own unless it belongs to one of ``groups``.  Each shifted circuit is
    sampled with ``shots`` shots (exact expectations when ``None``).
    """
    n = circuit.n_qubits
    if psi0 is None:
        psi0 = sv.StateVector.zero(n).amplitudes
    trainable = circuit.trainable()
    index = {i: g for i, g in trainable}
    grouped = set()
    plan: list[tuple[tuple[int, ...], tuple[PauliSum, ...]]] = []
    for grp in groups or ():
        for i in grp.gates:
            if i not in index:
                raise ValueError(f"gate {i} is not a trainable gate")
            if isinstance(index[i], ControlledSubcircuit):
                raise ValueError("controlled rotations cannot be shifted in a group")
            if i in grouped:
                raise ValueError(f"gate {i} appears in two shift groups")
            grouped.add(i)
        plan.append((grp.gates, grp.readouts))
    for i, _ in trainable:
        if i not in grouped:
            plan.append(((i,), (observable,)))
    reader = _Reader(observable, n)
    grad = np.zeros(n_params)
    var = np.zeros(n_params)
    ledger = ShotLedger("parameter-shift", shots=shots or 0)
    for gates, readouts in plan:
        rule = shift_rule(index[gates[0]])
        tables = [reader.tables(r) for r in readouts]
        for delta, coeff in rule:
            for sgn in (1.0, -1.0):
                shifted = list(circuit.gates)
                for i in gates:
                    shifted[i] = _shifted(shifted[i], sgn * delta)
                psi = Circuit(n, shifted).apply(psi0)
                means, varis = reader.read(psi, tables, shots, rng)
                ledger.add_circuit(n, reader.circuits)
                for i, m, v in zip(gates, means, varis):
                    rot = _rotation(index[i])
                    grad[rot.param] += sgn * coeff * rot.scale * m
                    var[rot.param] += (coeff * rot.scale) ** 2 * v
    ledger.record()
    return Estimate(grad, np.sqrt(var), ledger)


def count_shift_circuits(circuit: Circuit, groups: Sequence[ShiftGroup] | None = None) -> int:
    """Number of distinct shifted circuits :func:`parameter_shift_gradient` would run.

    Counts one readout basis per shifted circuit (a jointly diagonalisable observable).
    """
    index = dict(circuit.trainable())
    grouped = {i for g in groups or () for i in g.gates}
    total = sum(circuits_per_gate(index[g.gates[0]]) for g in groups or ())
    return total + sum(circuits_per_gate(gate) for i, gate in index.items() if i not in grouped)
