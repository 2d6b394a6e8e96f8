"""Dense statevector kernels.

Every kernel works on arrays whose last axis holds the ``2**N`` amplitudes,
so a stack of states (a batch of inputs) is processed in one call.  Qubit 0
is the most significant bit of the basis index.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..pauli import PauliString, PauliSum

NORM_TOL = 1e-10

# single-qubit Clifford matrices; H_xy swaps X<->Y and H_zy swaps Z<->Y under conjugation
_R2 = 1 / np.sqrt(2)
ONE_QUBIT_GATES = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _R2,
    "H_xy": np.array([[0, 1 - 1j], [1 + 1j, 0]], dtype=complex) * _R2,
    "H_zy": np.array([[1, -1j], [1j, -1]], dtype=complex) * _R2,
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "SDG": np.array([[1, 0], [0, -1j]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
TWO_QUBIT_GATES = {"CZ", "CNOT"}


class StateVector:
    """``2**n`` complex amplitudes of a pure state."""

    __slots__ = ("n_qubits", "amplitudes")

    def __init__(self, amplitudes: np.ndarray, n_qubits: int | None = None):
        amplitudes = np.asarray(amplitudes, dtype=complex)
        if amplitudes.ndim != 1:
            raise ValueError("amplitudes must be one-dimensional")
        n = int(round(np.log2(amplitudes.size)))
        if 2 ** n != amplitudes.size:
            raise ValueError(f"length {amplitudes.size} is not a power of two")
        if n_qubits is not None and n_qubits != n:
            raise ValueError(f"{amplitudes.size} amplitudes do not describe {n_qubits} qubits")
        self.n_qubits = n
        self.amplitudes = amplitudes

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        psi = np.zeros(2 ** n_qubits, dtype=complex)
        psi[0] = 1.0
        return cls(psi)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "StateVector":
        psi = np.zeros(2 ** n_qubits, dtype=complex)
        psi[index] = 1.0
        return cls(psi)

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        p = np.abs(self.amplitudes) ** 2
        return p / p.sum()

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits})"


# --------------------------------------------------------------------------
# low-level kernels on raw arrays

def n_qubits_of(psi: np.ndarray) -> int:
    return psi.shape[-1].bit_length() - 1


@lru_cache(maxsize=4096)
def parity_signs(mask: int, n_qubits: int) -> np.ndarray:
    """``(-1)**popcount(b & mask)`` for every basis index ``b`` (int8)."""
    idx = np.arange(2 ** n_qubits, dtype=np.uint64)
    par = np.bitwise_count(idx & np.uint64(mask)) & 1
    out = (1 - 2 * par.astype(np.int8)).astype(np.int8)
    out.setflags(write=False)
    return out


def apply_pauli(psi: np.ndarray, p: PauliString) -> np.ndarray:
    """Return ``P psi`` (new array)."""
    n = p.n_qubits
    lead = psi.shape[:-1]
    # P = i^(phase + n_y) X^x Z^z, and X^x Z^z |b> = (-1)^(b.z) |b ^ x>
    factor = 1j ** ((p.phase + p.n_y) % 4)
    out = psi
    if p.z.any():
        out = out * parity_signs(p.z_mask, n)
    if p.x.any():
        axes = tuple(len(lead) + q for q in np.flatnonzero(p.x))
        out = np.flip(out.reshape(lead + (2,) * n), axis=axes).reshape(lead + (2 ** n,))
    if out is psi:
        out = psi.copy()
    if factor != 1:
        out = out * factor
    return out


def apply_rotation(psi: np.ndarray, p: PauliString, angle) -> np.ndarray:
    """``exp(-i angle P) psi`` for a Hermitian Pauli word.

    ``angle`` may be a scalar or an array broadcastable against the leading
    (batch) axes of ``psi``.
    """
    if not p.is_hermitian():
        raise ValueError(f"rotation word {p.label()} is not Hermitian")
    angle = np.asarray(angle, dtype=float)
    if angle.ndim:
        angle = angle[..., None]
    if p.is_identity():
        return psi * np.exp(-1j * angle * p.sign)
    return np.cos(angle) * psi - 1j * np.sin(angle) * apply_pauli(psi, p)


def apply_one_qubit(psi: np.ndarray, matrix: np.ndarray, qubit: int) -> np.ndarray:
    n = n_qubits_of(psi)
    lead = psi.shape[:-1]
    view = psi.reshape(lead + (2 ** qubit, 2, 2 ** (n - qubit - 1)))
    out = np.einsum("ab,...ibj->...iaj", matrix, view)
    return out.reshape(psi.shape)


def apply_cz(psi: np.ndarray, a: int, b: int) -> np.ndarray:
    n = n_qubits_of(psi)
    lead = psi.shape[:-1]
    out = psi.reshape(lead + (2,) * n).copy()
    idx = [slice(None)] * (len(lead) + n)
    idx[len(lead) + a] = 1
    idx[len(lead) + b] = 1
    out[tuple(idx)] *= -1
    return out.reshape(psi.shape)


def apply_cnot(psi: np.ndarray, control: int, target: int) -> np.ndarray:
    n = n_qubits_of(psi)
    lead = psi.shape[:-1]
    out = psi.reshape(lead + (2,) * n).copy()
    idx = [slice(None)] * (len(lead) + n)
    idx[len(lead) + control] = 1
    sub = out[tuple(idx)]
    t_axis = len(lead) + target - (1 if target > control else 0)
    out[tuple(idx)] = np.flip(sub, axis=t_axis)
    return out.reshape(psi.shape)


_WHT_CHUNK = 4


@lru_cache(maxsize=None)
def _hadamard_block(k: int) -> np.ndarray:
    h = np.ones((1, 1))
    for _ in range(k):
        h = np.kron(h, np.array([[1.0, 1.0], [1.0, -1.0]]))
    return h


def walsh_hadamard(psi: np.ndarray) -> np.ndarray:
    """Unnormalised Walsh-Hadamard transform over all qubits (new array).

    Qubits are processed in chunks of four with a real ``16 x 16`` matrix
    product; complex input is viewed as interleaved real pairs.
    """
    n = n_qubits_of(psi)
    lead = psi.shape[:-1]
    psi = np.ascontiguousarray(psi)
    if np.iscomplexobj(psi):
        out = psi.astype(np.complex128, copy=False).view(np.float64).reshape(lead + (2 ** n, 2))
    else:
        out = psi.astype(np.float64, copy=False).reshape(lead + (2 ** n, 1))
    tail = out.shape[-1]
    for s in range(0, n, _WHT_CHUNK):
        k = min(_WHT_CHUNK, n - s)
        out = np.matmul(_hadamard_block(k), out.reshape(lead + (2 ** s, 2 ** k, -1)))
    out = out.reshape(lead + (2 ** n, tail))
    if tail == 2:
        return out.view(np.complex128).reshape(lead + (2 ** n,))
    return out.reshape(lead + (2 ** n,))


def hadamard_all(psi: np.ndarray) -> np.ndarray:
    """``H^(x)N psi``."""
    n = n_qubits_of(psi)
    return walsh_hadamard(psi) * (2.0 ** (-n / 2))


def pauli_sum_apply(psi: np.ndarray, obs: PauliSum) -> np.ndarray:
    if obs.is_z_type():
        return psi * diagonal_of(obs)
    out = np.zeros_like(psi)
    for c, p in obs:
        out += c * apply_pauli(psi, p)
    return out


def diagonal_of(obs: PauliSum) -> np.ndarray:
    """Diagonal of a Z/I-only sum as a real vector."""
    if not obs.is_z_type():
        raise ValueError("observable is not diagonal")
    n = obs.n_qubits
    diag = np.zeros(2 ** n)
    for c, p in obs:
        diag += c * parity_signs(p.z_mask, n)
    return diag


def expectation_array(psi: np.ndarray, obs: PauliSum) -> np.ndarray:
    """Real expectation values, one per leading index."""
    return np.real(np.sum(np.conj(psi) * pauli_sum_apply(psi, obs), axis=-1))


# --------------------------------------------------------------------------
# public state-level operations

def apply_pauli_rotation(state: StateVector, word: PauliString, angle: float) -> StateVector:
    """``exp(-i angle word) |state>``."""
    if word.n_qubits != state.n_qubits:
        raise ValueError(f"word acts on {word.n_qubits} qubits, state has {state.n_qubits}")
    return StateVector(apply_rotation(state.amplitudes, word, angle))


def expectation(state: StateVector, obs: PauliSum | PauliString) -> float:
    """Exact ``<psi|obs|psi>``."""
    if isinstance(obs, PauliString):
        obs = PauliSum.single(obs)
    if obs.n_qubits != state.n_qubits:
        raise ValueError(f"observable acts on {obs.n_qubits} qubits, state has {state.n_qubits}")
    return float(expectation_array(state.amplitudes, obs))


def sample_counts(state: StateVector | np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Multinomial outcome counts over the computational basis."""
    psi = state.amplitudes if isinstance(state, StateVector) else state
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = np.abs(psi) ** 2
    p /= p.sum()
    return rng.multinomial(shots, p)


def sample_bitstrings(state: StateVector, shots: int, rng: np.random.Generator) -> np.ndarray:
    """``shots`` i.i.d. basis-state indices drawn from ``|amplitude|**2``.

    ``rng`` should be a ``numpy.random.Generator`` (PCG64); the result is
    fully determined by its state.
    """
    counts = sample_counts(state, shots, rng)
    out = np.repeat(np.arange(counts.size), counts)
    rng.shuffle(out)
    return out


def bits_of(outcomes: np.ndarray, n_qubits: int) -> np.ndarray:
    """``(len(outcomes), n_qubits)`` 0/1 array, column ``q`` is qubit ``q``."""
    shifts = np.arange(n_qubits - 1, -1, -1)
    return (np.asarray(outcomes)[:, None] >> shifts) & 1
