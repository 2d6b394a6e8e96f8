"""Gate descriptors, the :class:`Circuit` container and its text format.

Text format, one gate per line::

    qubits 3
    rot 0.25 XIZ
    rot 0.5 -IYI param 4 scale 0.5
    clifford CNOT 0 2
    phase 1
    ctrl 0 1 {
    rot 0.1 IXX
    }

Angles are written with ``repr`` so parsing restores them bit-exactly.
Lines starting with ``#`` are comments.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

from ..pauli import PauliString
from . import statevector as sv
from .statevector import StateVector

CLIFFORD_KINDS = {"H": 1, "H_xy": 1, "H_zy": 1, "S": 1, "SDG": 1, "X": 1, "Y": 1, "Z": 1, "CZ": 2, "CNOT": 2}
_INVERSE_KIND = {"S": "SDG", "SDG": "S"}


@dataclass(frozen=True)
class PauliRotation:
    """``exp(-i angle word)``.

    ``param``/``scale`` tag the gate as depending on a trainable parameter
    via ``angle = scale * theta[param] + const``; the simulator only reads
    ``angle``.
    """

    angle: float
    word: PauliString
    param: int | None = None
    scale: float = 1.0

    def __post_init__(self):
        if not self.word.is_hermitian():
            raise ValueError(f"rotation word {self.word.label()} is not Hermitian")

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.word.support


@dataclass(frozen=True)
class NamedClifford:
    kind: str
    targets: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in CLIFFORD_KINDS:
            raise ValueError(f"unknown Clifford {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if len(self.targets) != CLIFFORD_KINDS[self.kind]:
            raise ValueError(f"{self.kind} takes {CLIFFORD_KINDS[self.kind]} qubit(s), got {self.targets}")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"repeated target in {self.kind}{self.targets}")

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.targets


@dataclass(frozen=True)
class ControlledSubcircuit:
    """Apply ``body`` only on the branch where ``control`` reads ``value``."""

    control: int
    value: int
    body: "Circuit"

    def __post_init__(self):
        if self.value not in (0, 1):
            raise ValueError("control value must be 0 or 1")
        if self.control in self.body.qubits_used():
            raise ValueError(f"control qubit {self.control} is acted on by the body")

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(sorted({self.control, *self.body.qubits_used()}))


@dataclass(frozen=True)
class GlobalPhase:
    """Multiply by ``i**exponent``."""

    exponent: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return ()


Gate = Union[PauliRotation, NamedClifford, ControlledSubcircuit, GlobalPhase]


@dataclass
class Circuit:
    n_qubits: int
    gates: list = field(default_factory=list)

    def __post_init__(self):
        for g in self.gates:
            self._check(g)

    def _check(self, g) -> None:
        if isinstance(g, PauliRotation):
            if g.word.n_qubits != self.n_qubits:
                raise ValueError(f"rotation on {g.word.n_qubits} qubits in a {self.n_qubits}-qubit circuit")
        elif isinstance(g, ControlledSubcircuit):
            if g.body.n_qubits != self.n_qubits:
                raise ValueError("controlled body must span the full register")
        elif not isinstance(g, (NamedClifford, GlobalPhase)):
            raise TypeError(f"not a gate: {g!r}")
        if any(q < 0 or q >= self.n_qubits for q in g.qubits):
            raise ValueError(f"gate {g!r} addresses a qubit outside 0..{self.n_qubits - 1}")

    # building ---------------------------------------------------------------
    def append(self, gate) -> "Circuit":
        self._check(gate)
        self.gates.append(gate)
        return self

    def extend(self, gates: Iterable) -> "Circuit":
        for g in gates:
            self.append(g)
        return self

    def rotation(self, angle: float, word: PauliString | str, **tags) -> "Circuit":
        if isinstance(word, str):
            word = PauliString.from_label(word)
        return self.append(PauliRotation(float(angle), word, **tags))

    def clifford(self, kind: str, *targets: int) -> "Circuit":
        return self.append(NamedClifford(kind, targets))

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise ValueError("cannot concatenate circuits of different width")
        return Circuit(self.n_qubits, self.gates + other.gates)

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self) -> Iterator:
        return iter(self.gates)

    def copy(self) -> "Circuit":
        return Circuit(self.n_qubits, list(self.gates))

    def qubits_used(self) -> set[int]:
        out: set[int] = set()
        for g in self.gates:
            out.update(g.qubits)
        return out

    def inverse(self) -> "Circuit":
        inv = []
        for g in reversed(self.gates):
            if isinstance(g, PauliRotation):
                inv.append(replace(g, angle=-g.angle))
            elif isinstance(g, NamedClifford):
                inv.append(NamedClifford(_INVERSE_KIND.get(g.kind, g.kind), g.targets))
            elif isinstance(g, ControlledSubcircuit):
                inv.append(ControlledSubcircuit(g.control, g.value, g.body.inverse()))
            else:
                inv.append(GlobalPhase(-g.exponent))
        return Circuit(self.n_qubits, inv)

    def embedded(self, n_total: int, offset: int) -> "Circuit":
        """The same circuit on qubits ``offset..`` of an ``n_total`` register."""
        return Circuit(n_total, [_embed_gate(g, n_total, offset) for g in self.gates])

    def trainable(self) -> list[tuple[int, Gate]]:
        """``(index, gate)`` for every gate carrying a parameter tag."""
        out = []
        for i, g in enumerate(self.gates):
            if isinstance(g, PauliRotation) and g.param is not None:
                out.append((i, g))
            elif isinstance(g, ControlledSubcircuit) and _controlled_rotation(g) is not None:
                if _controlled_rotation(g).param is not None:
                    out.append((i, g))
        return out

    # simulation ---------------------------------------------------------------
    def apply(self, psi: np.ndarray) -> np.ndarray:
        """Run on raw amplitudes (last axis); returns a new array."""
        for g in self.gates:
            psi = _apply_gate(psi, g)
        return psi

    def run(self, state: StateVector | None = None) -> StateVector:
        if state is None:
            state = StateVector.zero(self.n_qubits)
        if state.n_qubits != self.n_qubits:
            raise ValueError(f"state has {state.n_qubits} qubits, circuit {self.n_qubits}")
        return StateVector(self.apply(state.amplitudes))

    def unitary(self) -> np.ndarray:
        """Dense unitary, column ``k`` being the image of basis state ``k``."""
        eye = np.eye(2 ** self.n_qubits, dtype=complex)
        return self.apply(eye).T

    # text ------------------------------------------------------------------------
    def to_text(self) -> str:
        lines = [f"qubits {self.n_qubits}"]
        _write_gates(self.gates, lines)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        lines = [ln.strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln and not ln.startswith("#")]
        if not lines or not lines[0].startswith("qubits "):
            raise ValueError("circuit text must start with 'qubits N'")
        n = int(lines[0].split()[1])
        circuit, pos = _read_gates(lines, 1, n)
        if pos != len(lines):
            raise ValueError(f"unexpected line {lines[pos]!r}")
        return circuit

    def __eq__(self, other) -> bool:
        if not isinstance(other, Circuit):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self.gates == other.gates


def _controlled_rotation(g: ControlledSubcircuit) -> PauliRotation | None:
    body = g.body.gates
    if len(body) == 1 and isinstance(body[0], PauliRotation):
        return body[0]
    return None


def _embed_gate(g, n_total: int, offset: int):
    if isinstance(g, PauliRotation):
        return replace(g, word=g.word.embed(n_total, offset))
    if isinstance(g, NamedClifford):
        return NamedClifford(g.kind, tuple(t + offset for t in g.targets))
    if isinstance(g, ControlledSubcircuit):
        return ControlledSubcircuit(g.control + offset, g.value, g.body.embedded(n_total, offset))
    return g


def _apply_gate(psi: np.ndarray, g) -> np.ndarray:
    if isinstance(g, PauliRotation):
        return sv.apply_rotation(psi, g.word, g.angle)
    if isinstance(g, NamedClifford):
        if g.kind == "CZ":
            return sv.apply_cz(psi, *g.targets)
        if g.kind == "CNOT":
            return sv.apply_cnot(psi, *g.targets)
        return sv.apply_one_qubit(psi, sv.ONE_QUBIT_GATES[g.kind], g.targets[0])
    if isinstance(g, GlobalPhase):
        return psi * (1j ** (g.exponent % 4))
    # ControlledSubcircuit: the body never touches the control, so running it on
    # the full array and keeping only the selected branch is exact.
    n = sv.n_qubits_of(psi)
    branch = g.body.apply(psi)
    lead = psi.shape[:-1]
    out = psi.reshape(lead + (2 ** g.control, 2, 2 ** (n - g.control - 1))).copy()
    out[..., g.value, :] = branch.reshape(out.shape)[..., g.value, :]
    return out.reshape(psi.shape)


def _write_gates(gates, lines: list[str]) -> None:
    for g in gates:
        if isinstance(g, PauliRotation):
            line = f"rot {g.angle!r} {g.word.label()}"
            if g.param is not None:
                line += f" param {g.param} scale {g.scale!r}"
            lines.append(line)
        elif isinstance(g, NamedClifford):
            lines.append("clifford " + " ".join([g.kind, *map(str, g.targets)]))
        elif isinstance(g, GlobalPhase):
            lines.append(f"phase {g.exponent}")
        else:
            lines.append(f"ctrl {g.control} {g.value} {{")
            _write_gates(g.body.gates, lines)
            lines.append("}")


def _read_gates(lines: Sequence[str], pos: int, n: int) -> tuple[Circuit, int]:
    c = Circuit(n)
    while pos < len(lines):
        tok = lines[pos].split()
        head = tok[0]
        if head == "}":
            return c, pos
        if head == "rot":
            tags = {}
            if len(tok) > 3:
                if tok[3] != "param" or tok[5] != "scale":
                    raise ValueError(f"bad rotation line {lines[pos]!r}")
                tags = {"param": int(tok[4]), "scale": float(tok[6])}
            c.append(PauliRotation(float(tok[1]), PauliString.from_label(tok[2]), **tags))
        elif head == "clifford":
            c.append(NamedClifford(tok[1], tuple(int(t) for t in tok[2:])))
        elif head == "phase":
            c.append(GlobalPhase(int(tok[1])))
        elif head == "ctrl":
            if tok[-1] != "{":
                raise ValueError(f"bad ctrl line {lines[pos]!r}")
            body, pos = _read_gates(lines, pos + 1, n)
            if pos >= len(lines) or lines[pos] != "}":
                raise ValueError("unterminated ctrl block")
            c.append(ControlledSubcircuit(int(tok[1]), int(tok[2]), body))
        else:
            raise ValueError(f"unknown gate line {lines[pos]!r}")
        pos += 1
    return c, pos


def controlled_rotation(control: int, value: int, angle: float, word: PauliString, **tags) -> ControlledSubcircuit:
    """``exp(-i angle |value><value|_control (x) word)`` as a controlled subcircuit."""
    return ControlledSubcircuit(control, value, Circuit(word.n_qubits, [PauliRotation(angle, word, **tags)]))


def encode_data(x: Sequence[float], n_qubits: int | None = None) -> Circuit:
    """Product of ``exp(-i x_r Y_r / 4)`` over qubits."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("input must be a vector")
    n = x.size if n_qubits is None else n_qubits
    if x.size != n:
        raise ValueError(f"input of length {x.size} does not match {n} qubits")
    c = Circuit(n)
    for r, xr in enumerate(x):
        c.append(PauliRotation(float(xr) / 4, PauliString.single(n, r, "Y")))
    return c


def encoded_states(X: np.ndarray) -> np.ndarray:
    """Batch of encoded product states, shape ``(batch, 2**d)``.

    ``exp(-i a Y)|0> = cos a |0> + sin a |1>``, so each state is a Kronecker
    product of real single-qubit vectors.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    a = X / 4
    out = np.ones((X.shape[0], 1))
    for r in range(X.shape[1]):
        local = np.stack([np.cos(a[:, r]), np.sin(a[:, r])], axis=-1)
        out = (out[:, :, None] * local[:, None, :]).reshape(X.shape[0], -1)
    return out.astype(complex)
