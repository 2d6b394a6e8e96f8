"""Phase-exact Pauli strings and real-weighted sums of them.

A :class:`PauliString` stores one N-qubit Pauli word in symplectic form,
``x`` and ``z`` bit vectors plus a global phase ``i**phase``.  The phase is
measured relative to the *Hermitian* word obtained by reading each qubit as

    (x, z) = (0, 0) -> I, (1, 0) -> X, (0, 1) -> Z, (1, 1) -> Y

so ``phase in {0, 2}`` is exactly the Hermitian case.  Products are computed
by passing through the ordered form ``X**x Z**z`` using ``Y = i X Z``.

Qubit 0 is the leftmost character of a label and the most significant bit of
a computational-basis index.
"""
from __future__ import annotations

import re
from typing import Iterable, Iterator, Sequence

import numpy as np

_CHAR_TO_XZ = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_XZ_TO_CHAR = {v: k for k, v in _CHAR_TO_XZ.items()}
_PHASE_TOKENS = {"": 0, "+": 0, "i": 1, "+i": 1, "-": 2, "-i": 3}
_PHASE_TO_TOKEN = {0: "", 1: "i", 2: "-", 3: "-i"}
_LABEL_RE = re.compile(r"^([+-]?i?)([IXYZ]+)$")

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class PauliString:
    """An N-qubit Pauli word ``i**phase * P_0 (x) ... (x) P_{N-1}``.

    Instances are immutable and hashable; equality includes the phase.
    """

    __slots__ = ("_x", "_z", "_phase", "_hash")

    def __init__(self, x: Sequence[int] | np.ndarray, z: Sequence[int] | np.ndarray, phase: int = 0):
        x = np.asarray(x, dtype=np.uint8) & 1
        z = np.asarray(z, dtype=np.uint8) & 1
        if x.ndim != 1 or x.shape != z.shape:
            raise ValueError(f"x and z must be 1-d of equal length, got {x.shape} and {z.shape}")
        if x.size == 0:
            raise ValueError("a Pauli string needs at least one qubit")
        x.setflags(write=False)
        z.setflags(write=False)
        self._x = x
        self._z = z
        self._phase = int(phase) % 4
        self._hash = None

    # construction -------------------------------------------------------
    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse ``"XIZ"``, ``"-Y"``, ``"-iXZY"`` and friends."""
        m = _LABEL_RE.match(label.strip())
        if m is None:
            raise ValueError(f"not a Pauli label: {label!r}")
        phase = _PHASE_TOKENS[m.group(1)]
        xz = [_CHAR_TO_XZ[c] for c in m.group(2)]
        return cls([a for a, _ in xz], [b for _, b in xz], phase)

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(np.zeros(n_qubits, np.uint8), np.zeros(n_qubits, np.uint8))

    @classmethod
    def single(cls, n_qubits: int, qubit: int, kind: str) -> "PauliString":
        chars = ["I"] * n_qubits
        chars[qubit] = kind
        return cls.from_label("".join(chars))

    @classmethod
    def from_sparse(cls, n_qubits: int, ops: dict[int, str], phase: int = 0) -> "PauliString":
        """Build from ``{qubit: "X" | "Y" | "Z"}``."""
        x = np.zeros(n_qubits, np.uint8)
        z = np.zeros(n_qubits, np.uint8)
        for q, c in ops.items():
            x[q], z[q] = _CHAR_TO_XZ[c]
        return cls(x, z, phase)

    # accessors ------------------------------------------------------------
    @property
    def n_qubits(self) -> int:
        return self._x.size

    @property
    def x(self) -> np.ndarray:
        return self._x

    @property
    def z(self) -> np.ndarray:
        return self._z

    @property
    def phase(self) -> int:
        return self._phase

    @property
    def word(self) -> str:
        """The Hermitian word without its phase token."""
        return "".join(_XZ_TO_CHAR[(int(a), int(b))] for a, b in zip(self._x, self._z))

    def label(self) -> str:
        return _PHASE_TO_TOKEN[self._phase] + self.word

    @property
    def x_mask(self) -> int:
        return _bits_to_int(self._x)

    @property
    def z_mask(self) -> int:
        return _bits_to_int(self._z)

    @property
    def weight(self) -> int:
        return int(np.count_nonzero(self._x | self._z))

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(int(q) for q in np.flatnonzero(self._x | self._z))

    @property
    def n_y(self) -> int:
        return int(np.count_nonzero(self._x & self._z))

    def is_hermitian(self) -> bool:
        return self._phase in (0, 2)

    def is_identity(self) -> bool:
        return not (self._x.any() or self._z.any())

    def is_x_type(self) -> bool:
        return not self._z.any()

    def is_z_type(self) -> bool:
        return not self._x.any()

    @property
    def sign(self) -> int:
        """+1 or -1 for Hermitian strings."""
        if not self.is_hermitian():
            raise ValueError(f"{self.label()} is not Hermitian")
        return 1 if self._phase == 0 else -1

    def key(self) -> tuple[int, ...]:
        """Canonical ordering key over interleaved (x, z) bits; ignores phase."""
        out = np.empty(2 * self.n_qubits, dtype=np.uint8)
        out[0::2] = self._x
        out[1::2] = self._z
        return tuple(out.tolist())

    # algebra ---------------------------------------------------------------
    def with_phase(self, phase: int) -> "PauliString":
        return PauliString(self._x, self._z, phase)

    def unsigned(self) -> "PauliString":
        return PauliString(self._x, self._z, 0)

    def times_i(self, k: int = 1) -> "PauliString":
        return PauliString(self._x, self._z, self._phase + k)

    def __neg__(self) -> "PauliString":
        return self.times_i(2)

    def __mul__(self, other: "PauliString") -> "PauliString":
        return pauli_product(self, other)

    def adjoint(self) -> "PauliString":
        return PauliString(self._x, self._z, -self._phase)

    def commutes_with(self, other: "PauliString") -> bool:
        return commutation_relation(self, other) == "commute"

    def embed(self, n_total: int, offset: int) -> "PauliString":
        """Place this string on qubits ``offset .. offset+n-1`` of a larger register."""
        x = np.zeros(n_total, np.uint8)
        z = np.zeros(n_total, np.uint8)
        x[offset:offset + self.n_qubits] = self._x
        z[offset:offset + self.n_qubits] = self._z
        return PauliString(x, z, self._phase)

    def permute(self, perm: Sequence[int]) -> "PauliString":
        """Move the operator on qubit ``q`` to qubit ``perm[q]``."""
        x = np.zeros_like(self._x)
        z = np.zeros_like(self._z)
        perm = np.asarray(perm)
        x[perm] = self._x
        z[perm] = self._z
        return PauliString(x, z, self._phase)

    def cyclic_shift(self, k: int = 1) -> "PauliString":
        return PauliString(np.roll(self._x, k), np.roll(self._z, k), self._phase)

    def to_matrix(self) -> np.ndarray:
        """Dense ``2**N x 2**N`` matrix, built by Kronecker products."""
        m = np.array([[1.0 + 0j]])
        for c in self.word:
            m = np.kron(m, _SINGLE[c])
        return (1j ** self._phase) * m

    # dunder ------------------------------------------------------------------
    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliString):
            return NotImplemented
        return (
            self._phase == other._phase
            and np.array_equal(self._x, other._x)
            and np.array_equal(self._z, other._z)
        )

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self._x.tobytes(), self._z.tobytes(), self._phase))
        return self._hash

    def __lt__(self, other: "PauliString") -> bool:
        return (self.key(), self._phase) < (other.key(), other._phase)

    def __repr__(self) -> str:
        return f"PauliString({self.label()!r})"

    def __str__(self) -> str:
        return self.label()


def _bits_to_int(bits: np.ndarray) -> int:
    out = 0
    for b in bits.tolist():
        out = (out << 1) | b
    return out


def _check_dims(p: PauliString, q: PauliString) -> None:
    if p.n_qubits != q.n_qubits:
        raise ValueError(f"qubit count mismatch: {p.n_qubits} vs {q.n_qubits}")


def pauli_product(p: PauliString, q: PauliString) -> PauliString:
    """Exact operator product ``p @ q``."""
    _check_dims(p, q)
    # ordered form: P = i^(phase + n_y) X^x Z^z ; Z^z1 X^x2 = (-1)^(z1.x2) X^x2 Z^z1
    swap = int(np.count_nonzero(p.z & q.x))
    x = p.x ^ q.x
    z = p.z ^ q.z
    ordered = p.phase + p.n_y + q.phase + q.n_y + 2 * swap
    n_y = int(np.count_nonzero(x & z))
    return PauliString(x, z, ordered - n_y)


def symplectic_product(p: PauliString, q: PauliString) -> int:
    """Parity of the symplectic inner product of ``p`` and ``q``."""
    _check_dims(p, q)
    return int(np.count_nonzero(p.x & q.z) + np.count_nonzero(p.z & q.x)) & 1


def commutation_relation(p: PauliString, q: PauliString) -> str:
    """``"commute"`` or ``"anticommute"``."""
    return "anticommute" if symplectic_product(p, q) else "commute"


class PauliSum:
    """A real linear combination of Hermitian Pauli words.

    Terms are canonicalised so that each word appears once with phase 0; a
    ``-P`` input folds its sign into the coefficient.  Zero coefficients are
    dropped.
    """

    def __init__(self, terms: Iterable[tuple[float, PauliString]] = ()):
        acc: dict[tuple, tuple[float, PauliString]] = {}
        n = None
        for coeff, p in terms:
            if isinstance(p, str):
                p = PauliString.from_label(p)
            if n is None:
                n = p.n_qubits
            elif p.n_qubits != n:
                raise ValueError("all terms of a PauliSum must act on the same number of qubits")
            c = float(np.real(coeff)) * p.sign
            k = p.key()
            prev = acc.get(k)
            acc[k] = (c + (prev[0] if prev else 0.0), p.unsigned())
        self._n = n
        self._terms = [acc[k] for k in sorted(acc) if acc[k][0] != 0.0]

    @classmethod
    def from_labels(cls, items: Iterable[tuple[float, str]]) -> "PauliSum":
        return cls((c, PauliString.from_label(s)) for c, s in items)

    @classmethod
    def single(cls, p: PauliString, coeff: float = 1.0) -> "PauliSum":
        return cls([(coeff, p)])

    @property
    def n_qubits(self) -> int:
        if self._n is None:
            raise ValueError("empty PauliSum has no qubit count")
        return self._n

    @property
    def terms(self) -> list[tuple[float, PauliString]]:
        return list(self._terms)

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([c for c, _ in self._terms])

    @property
    def words(self) -> list[PauliString]:
        return [p for _, p in self._terms]

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[tuple[float, PauliString]]:
        return iter(self._terms)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        return PauliSum(self._terms + other._terms)

    def __mul__(self, scalar: float) -> "PauliSum":
        return PauliSum((scalar * c, p) for c, p in self._terms)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "PauliSum":
        return self * (1.0 / scalar)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self._terms == other._terms

    def is_z_type(self) -> bool:
        return all(p.is_z_type() for _, p in self._terms)

    def one_norm(self) -> float:
        return float(sum(abs(c) for c, _ in self._terms))

    def to_matrix(self) -> np.ndarray:
        return sum(c * p.to_matrix() for c, p in self._terms)

    def __repr__(self) -> str:
        body = " + ".join(f"{c:g}*{p.word}" for c, p in self._terms)
        return f"PauliSum({body})"
