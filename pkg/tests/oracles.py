"""Independent reference implementations used by the tests.

Everything here works with dense matrices built from Kronecker products of
the 2x2 Pauli matrices, and with finite differences, so it shares no code
with the package's symplectic or statevector kernels.
"""
from __future__ import annotations

from functools import reduce

import numpy as np

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def dense_pauli(label: str) -> np.ndarray:
    """Matrix of a label such as ``"-XIZ"``; the leftmost letter is qubit 0 (MSB)."""
    sign = 1.0
    if label[0] in "+-":
        sign = -1.0 if label[0] == "-" else 1.0
        label = label[1:]
    return sign * reduce(np.kron, [PAULI[c] for c in label])


def dense_rotation(label: str, angle: float) -> np.ndarray:
    p = dense_pauli(label)
    return np.cos(angle) * np.eye(len(p)) - 1j * np.sin(angle) * p


def dense_sum(terms) -> np.ndarray:
    """``sum c P`` from ``(coeff, label)`` pairs."""
    return sum(c * dense_pauli(lab) for c, lab in terms)


def zero_state(n: int) -> np.ndarray:
    psi = np.zeros(2 ** n, dtype=complex)
    psi[0] = 1.0
    return psi


def expectation(psi: np.ndarray, op: np.ndarray) -> float:
    return float(np.real(np.vdot(psi, op @ psi)))


def central_difference(f, theta, h: float = 1e-5) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    out = np.empty(len(theta))
    for j in range(len(theta)):
        e = np.zeros(len(theta))
        e[j] = h
        out[j] = (f(theta + e) - f(theta - e)) / (2 * h)
    return out


def hessian_difference(f, theta, h: float = 1e-4) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    n = len(theta)
    out = np.empty((n, n))
    for j in range(n):
        for k in range(n):
            ej = np.zeros(n)
            ek = np.zeros(n)
            ej[j] = h
            ek[k] = h
            out[j, k] = (f(theta + ej + ek) - f(theta + ej - ek) - f(theta - ej + ek) + f(theta - ej - ek)) / (4 * h * h)
    return out


def commuting_cost(prep_unitary: np.ndarray, gen_labels, obs_terms):
    """``theta -> <0|V^dag U^dag H U V|0>`` for ``U = prod exp(-i theta_j G_j)``, densely."""
    n = int(np.log2(prep_unitary.shape[0]))
    psi0 = prep_unitary @ zero_state(n)
    H = dense_sum(obs_terms)
    gens = [dense_pauli(g) for g in gen_labels]

    def cost(theta):
        psi = psi0
        for g, t in zip(gens, theta):
            psi = np.cos(t) * psi - 1j * np.sin(t) * (g @ psi)
        return expectation(psi, H)

    return cost


def dense_circuit_1q(gate: np.ndarray, qubit: int, n: int) -> np.ndarray:
    mats = [np.eye(2)] * n
    mats[qubit] = gate
    return reduce(np.kron, mats)


def dense_cz(a: int, b: int, n: int) -> np.ndarray:
    diag = np.ones(2 ** n)
    for idx in range(2 ** n):
        if (idx >> (n - 1 - a)) & 1 and (idx >> (n - 1 - b)) & 1:
            diag[idx] = -1
    return np.diag(diag).astype(complex)


def lie_closure_dimension(mats, tol: float = 1e-9) -> int:
    """Real dimension of the Lie algebra generated by anti-Hermitian ``mats``.

    Brute-force closure under commutators with rank tests on flattened real
    and imaginary parts.
    """
    def vec(m):
        return np.concatenate([m.real.ravel(), m.imag.ravel()])

    basis: list[np.ndarray] = []
    rows: list[np.ndarray] = []

    def add(m) -> bool:
        if np.linalg.norm(m) < tol:
            return False
        cand = np.array(rows + [vec(m)])
        if np.linalg.matrix_rank(cand, tol=1e-7) > len(rows):
            basis.append(m)
            rows.append(vec(m))
            return True
        return False

    for m in mats:
        add(m)
    frontier = list(basis)
    while frontier:
        new = []
        for a in frontier:
            for b in list(basis):
                c = a @ b - b @ a
                if add(c):
                    new.append(c)
        frontier = new
    return len(basis)


def qfi_dense(state_fn, theta, h: float = 1e-5) -> np.ndarray:
    """``4 Re(<d_j psi|d_k psi> - <d_j psi|psi><psi|d_k psi>)`` by central differences."""
    theta = np.asarray(theta, dtype=float)
    psi = state_fn(theta)
    D = []
    for j in range(len(theta)):
        e = np.zeros(len(theta))
        e[j] = h
        D.append((state_fn(theta + e) - state_fn(theta - e)) / (2 * h))
    D = np.array(D)
    proj = D.conj() @ psi
    return 4 * np.real(D.conj() @ D.T - np.outer(proj, proj.conj()))
