import numpy as np
import pytest

from commgrad.pauli import PauliString, PauliSum
from commgrad.randomspec import random_pauli
from commgrad.sim import statevector as sv
from commgrad.sim.circuit import Circuit, PauliRotation, controlled_rotation
from commgrad.sim.layers import Program


def _random_program_circuit(n, n_params, rng, n_gates=25):
    """Template gates: (kind, word, param, control, value); angle = 0.7 theta + 0.1."""
    gates = []
    for _ in range(n_gates):
        p = int(rng.integers(-1, n_params))
        if n > 1 and rng.random() < 0.3:
            c = int(rng.integers(n))
            q = [a for a in range(n) if a != c][int(rng.integers(n - 1))]
            w = PauliString.from_sparse(n, {q: str(rng.choice(list("XYZ")))})
            gates.append(("c", w, p, c, int(rng.integers(2))))
        elif rng.random() < 0.5:
            q = rng.choice(n, int(rng.integers(1, min(n, 2) + 1)), replace=False)
            w = PauliString.from_sparse(n, {int(a): str(rng.choice(list("XYZ"))) for a in q})
            gates.append(("r", w, p, None, None))
        else:
            gates.append(("r", random_pauli(n, rng), p, None, None))

    def build(theta):
        c = Circuit(n)
        for kind, w, p, ctrl, val in gates:
            tags = {"param": p, "scale": 0.7} if p >= 0 else {}
            angle = 0.7 * theta[p] + 0.1 if p >= 0 else 0.4
            if kind == "r":
                c.append(PauliRotation(angle, w, **tags))
            else:
                c.append(controlled_rotation(ctrl, val, angle, w, **tags))
        return c

    return build


@pytest.mark.parametrize("seed", range(20))
def test_adjoint_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    n_params = 5
    build = _random_program_circuit(n, n_params, rng)
    theta = rng.uniform(0, 2 * np.pi, n_params)
    obs = PauliSum([(1.0, random_pauli(n, rng)), (0.5, random_pauli(n, rng))])
    zero = sv.StateVector.zero(n).amplitudes
    psi0 = np.stack([zero, Circuit(n).rotation(0.3, random_pauli(n, rng)).apply(zero)])
    prog = Program.from_circuit(build(theta), theta, n_params)
    values, grad = prog.value_and_grad(psi0, theta, obs)

    def f(t):
        return sv.expectation_array(build(t).apply(psi0), obs)

    np.testing.assert_allclose(values, f(theta), atol=1e-12)
    np.testing.assert_allclose(prog.apply(psi0, theta), build(theta).apply(psi0), atol=1e-12)
    step = 1e-5
    fd = np.stack([(f(theta + step * e) - f(theta - step * e)) / (2 * step) for e in np.eye(n_params)], -1)
    np.testing.assert_allclose(grad, fd, atol=1e-7)


def test_fast_layers_are_used_for_wide_commuting_words():
    n = 5
    words = [PauliString.from_label(s) for s in ["XXIII", "IXXII", "IIXXI", "IIIXX", "XIIIX", "XXXXX"]]
    c = Circuit(n)
    for j, w in enumerate(words):
        c.append(PauliRotation(0.1 * (j + 1), w, param=j))
    c.append(PauliRotation(0.2, PauliString.from_label("ZIIII")))
    prog = Program.from_circuit(c, 0.1 * np.arange(1, 7))
    assert [layer.kind for layer in prog.layers] == ["x", "local"]


def test_local_fusion_on_non_adjacent_qubits():
    n = 4
    c = Circuit(n)
    c.append(PauliRotation(0.3, PauliString.from_label("XIIZ"), param=0))
    c.append(PauliRotation(0.5, PauliString.from_label("ZIIY"), param=1))
    c.append(controlled_rotation(3, 1, 0.8, PauliString.from_label("YIII"), param=0))
    prog = Program.from_circuit(c, np.array([0.3, 0.5]))
    assert len(prog.layers) == 1 and prog.layers[0].qubits == (0, 3)
    psi = sv.StateVector.zero(n).amplitudes
    np.testing.assert_allclose(prog.apply(psi, np.array([0.3, 0.5])), c.apply(psi), atol=1e-12)


def test_walsh_hadamard_matches_dense_transform():
    rng = np.random.default_rng(0)
    for n in (1, 3, 5, 9):
        h = np.ones((1, 1))
        for _ in range(n):
            h = np.kron(h, [[1, 1], [1, -1]])
        v = rng.normal(size=(3, 2 ** n)) + 1j * rng.normal(size=(3, 2 ** n))
        np.testing.assert_allclose(sv.walsh_hadamard(v), v @ h.T, atol=1e-9)
        r = rng.normal(size=2 ** n)
        np.testing.assert_allclose(sv.walsh_hadamard(r), h @ r, atol=1e-9)


def test_y_layer_fast_path_matches_dense():
    n = 4
    words = [PauliString.from_label(s) for s in ["YIII", "IYII", "IIYI", "IIIY", "YYII", "-IYIY"]]
    c = Circuit(n).rotation(0.4, "XZIY").rotation(0.9, "IXYZ")
    for j, w in enumerate(words):
        c.append(PauliRotation(0.2 * (j + 1), w, param=j))
    theta = 0.2 * np.arange(1, 7)
    prog = Program.from_circuit(c, theta)
    assert "y" in [layer.kind for layer in prog.layers]
    psi = sv.StateVector.zero(n).amplitudes
    np.testing.assert_allclose(prog.apply(psi, theta), c.apply(psi), atol=1e-12)
    obs = PauliSum.from_labels([(1.0, "ZIII"), (0.3, "IXXI")])
    _, grad = prog.value_and_grad(psi, theta, obs)

    def f(t):
        cc = Circuit(n).rotation(0.4, "XZIY").rotation(0.9, "IXYZ")
        for j, w in enumerate(words):
            cc.append(PauliRotation(t[j], w))
        return float(sv.expectation_array(cc.apply(psi), obs))

    fd = [(f(theta + 1e-5 * e) - f(theta - 1e-5 * e)) / 2e-5 for e in np.eye(6)]
    np.testing.assert_allclose(grad[0], fd, atol=1e-8)
