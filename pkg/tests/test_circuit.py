import numpy as np
import pytest

from commgrad.pauli import PauliString
from commgrad.randomspec import random_clifford_circuit, random_prep
from commgrad.sim.circuit import (
    Circuit,
    ControlledSubcircuit,
    GlobalPhase,
    NamedClifford,
    PauliRotation,
    controlled_rotation,
    encode_data,
    encoded_states,
)
from oracles import dense_rotation, zero_state


def test_text_round_trip_is_exact():
    rng = np.random.default_rng(0)
    c = random_prep(3, rng) + random_clifford_circuit(3, 10, rng)
    c.append(PauliRotation(0.1 + 1e-13, PauliString.from_label("-XYZ"), param=2, scale=-1.0))
    c.append(GlobalPhase(3))
    c.append(controlled_rotation(0, 1, 0.7, PauliString.from_label("IXZ")))
    back = Circuit.from_text(c.to_text())
    assert back == c
    np.testing.assert_array_equal(back.unitary(), c.unitary())


def test_text_rejects_garbage():
    with pytest.raises(ValueError):
        Circuit.from_text("rot 0.1 X")
    with pytest.raises(ValueError):
        Circuit.from_text("qubits 1\nfoo 1")
    with pytest.raises(ValueError):
        Circuit.from_text("qubits 2\nctrl 0 1 {\nrot 0.1 IX\n")


def test_gate_validation():
    with pytest.raises(ValueError):
        Circuit(2).rotation(0.1, "XXX")
    with pytest.raises(ValueError):
        NamedClifford("CZ", (0, 0))
    with pytest.raises(ValueError):
        NamedClifford("T", (0,))
    with pytest.raises(ValueError):
        Circuit(1).clifford("H", 3)
    with pytest.raises(ValueError):
        ControlledSubcircuit(0, 1, Circuit(2).rotation(0.1, "XX"))


def test_controlled_rotation_matches_dense():
    g = controlled_rotation(0, 1, 0.6, PauliString.from_label("IY"))
    c = Circuit(2, [g])
    P0, P1 = np.diag([1, 0]), np.diag([0, 1])
    want = np.kron(P0, np.eye(2)) + np.kron(P1, dense_rotation("Y", 0.6))
    np.testing.assert_allclose(c.unitary(), want, atol=1e-12)


def test_inverse_undoes_circuit():
    rng = np.random.default_rng(1)
    c = random_prep(3, rng) + random_clifford_circuit(3, 15, rng)
    c.append(controlled_rotation(2, 0, 0.3, PauliString.from_label("XYI")))
    c.append(GlobalPhase(1))
    np.testing.assert_allclose((c + c.inverse()).unitary(), np.eye(8), atol=1e-12)


def test_embedded_acts_on_offset_qubits():
    c = Circuit(2).rotation(0.4, "XZ").clifford("H", 1)
    big = c.embedded(3, 1)
    np.testing.assert_allclose(big.unitary(), np.kron(np.eye(2), c.unitary()), atol=1e-12)


def test_trainable_lists_tagged_gates():
    c = Circuit(2).rotation(0.1, "XI", param=0).rotation(0.2, "IX")
    c.append(controlled_rotation(0, 1, 0.3, PauliString.from_label("IZ"), param=1))
    assert [i for i, _ in c.trainable()] == [0, 2]


def test_encoding_matches_rotations_and_batch_fast_path():
    x = np.array([0.3, -1.2, 2.0])
    psi = encode_data(x).apply(zero_state(3))
    want = zero_state(3)
    for r, xr in enumerate(x):
        lab = "".join("Y" if q == r else "I" for q in range(3))
        want = dense_rotation(lab, xr / 4) @ want
    np.testing.assert_allclose(psi, want, atol=1e-12)
    np.testing.assert_allclose(encoded_states(x[None])[0], want, atol=1e-12)


def test_encoding_length_mismatch():
    with pytest.raises(ValueError):
        encode_data([0.1, 0.2], n_qubits=3)
