"""Batched exact simulation and adjoint differentiation of Pauli-rotation programs.

A :class:`Program` is a sequence of layers; each layer holds mutually
commuting Pauli words with angles ``scale * theta[param] + const``.  Layers
made only of X-type (or only Z-type) words are applied through a
Walsh-Hadamard transform (Y-only layers after conjugation by ``S``): the phase ``sum_w a_w (-1)**(b . m_w)`` for every
basis index ``b`` is itself the transform of the sparse coefficient vector,
and the same trick evaluates ``<lam|P_w|psi>`` for all words of the layer at
once during the backward pass.  Runs of non-commuting gates confined to
at most two qubits are fused into one small dense layer whose parameter
derivatives come from prefix/suffix products contracted against the
``4 x 4`` transition matrix ``sum_rest psi_a conj(lam_b)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..pauli import PauliString, PauliSum
from . import statevector as sv
from .circuit import Circuit, ControlledSubcircuit, GlobalPhase, PauliRotation

_FAST_MIN_WORDS = 4
_LOCAL_MAX_QUBITS = 2


@dataclass
class Layer:
    words: list[PauliString]
    params: np.ndarray  # -1 for fixed angles
    scales: np.ndarray
    consts: np.ndarray
    kind: str  # "x", "y", "z", "local" or "generic"
    qubits: tuple[int, ...] = ()  # support of a local layer
    local_paulis: np.ndarray | None = None  # (words, 2**k, 2**k) for local layers

    def angles(self, theta: np.ndarray) -> np.ndarray:
        out = self.consts.copy()
        tied = self.params >= 0
        out[tied] += self.scales[tied] * theta[self.params[tied]]
        return out

    def masks(self) -> tuple[np.ndarray, np.ndarray]:
        """Diagonal-basis masks and signs of the words (fast kinds only)."""
        if self.kind in ("x", "y"):
            m = np.array([w.x_mask for w in self.words], dtype=np.int64)
        else:
            m = np.array([w.z_mask for w in self.words], dtype=np.int64)
        s = np.array([w.sign for w in self.words], dtype=float)
        return m, s


def _layer_kind(words: list[PauliString]) -> str:
    support = set().union(*(w.support for w in words))
    if len(words) >= _FAST_MIN_WORDS and len(support) > _LOCAL_MAX_QUBITS:
        if all(w.is_x_type() for w in words):
            return "x"
        if all(w.is_z_type() for w in words):
            return "z"
        if all(np.array_equal(w.x, w.z) for w in words):
            return "y"
    return "generic"


class Program:
    """Compiled, parameter-tied Pauli-rotation circuit acting on ``n_qubits``."""

    def __init__(self, n_qubits: int, layers: list[Layer], n_params: int):
        self.n_qubits = n_qubits
        self.layers = layers
        self.n_params = n_params

    @classmethod
    def from_circuit(cls, circuit: Circuit, theta: np.ndarray, n_params: int | None = None) -> "Program":
        """Compile ``circuit`` built at parameters ``theta``.

        Controlled rotations ``exp(-i a |v><v|_c (x) P)`` become the commuting
        pair ``exp(-i a/2 P) exp(-i (-1)**v a/2 Z_c P)``.  Global phases are
        dropped; named Cliffords are not supported.
        """
        theta = np.asarray(theta, dtype=float)
        entries = []  # (word, param, scale, const)
        for g in circuit.gates:
            if isinstance(g, PauliRotation):
                entries.append(_entry(g.word, g, theta, 1.0))
            elif isinstance(g, ControlledSubcircuit):
                body = g.body.gates
                if len(body) != 1 or not isinstance(body[0], PauliRotation):
                    raise ValueError("only single controlled rotations can be compiled")
                rot = body[0]
                zc = PauliString.single(circuit.n_qubits, g.control, "Z")
                entries.append(_entry(rot.word, rot, theta, 0.5))
                entries.append(_entry(zc * rot.word, rot, theta, 0.5 * (-1) ** g.value))
            elif isinstance(g, GlobalPhase):
                continue
            else:
                raise ValueError(f"cannot compile {g!r}")
        groups = []
        cur: list = []
        for e in entries:
            if cur and not all(e[0].commutes_with(o[0]) for o in cur):
                groups.append(cur)
                cur = []
            cur.append(e)
        if cur:
            groups.append(cur)
        layers = []
        pending: list = []  # entries of consecutive generic groups
        for grp in groups:
            if _layer_kind([e[0] for e in grp]) == "generic":
                pending.extend(grp)
                continue
            layers.extend(_local_runs(pending))
            pending = []
            layers.append(_make_layer(grp))
        layers.extend(_local_runs(pending))
        if n_params is None:
            n_params = 1 + max((e[1] for e in entries), default=-1)
        return cls(circuit.n_qubits, layers, n_params)

    # forward ---------------------------------------------------------------
    def _phase(self, layer: Layer, angles: np.ndarray) -> np.ndarray:
        """``exp(-i sum_w a_w s_w (-1)**(b . m_w))`` over the diagonal basis."""
        masks, signs = layer.masks()
        coeff = np.zeros(2 ** self.n_qubits)
        np.add.at(coeff, masks, signs * angles)
        return np.exp(-1j * sv.walsh_hadamard(coeff))

    def _apply_layer(self, psi: np.ndarray, layer: Layer, angles: np.ndarray, inverse: bool) -> np.ndarray:
        if layer.kind == "local":
            u = _local_unitary(layer, angles)
            return _apply_local(psi, u.conj().T if inverse else u, layer.qubits, self.n_qubits)
        if layer.kind == "generic":
            sgn = -1.0 if inverse else 1.0
            order = reversed(range(len(layer.words))) if inverse else range(len(layer.words))
            for i in order:
                psi = sv.apply_rotation(psi, layer.words[i], sgn * angles[i])
            return psi
        phase = self._phase(layer, angles)
        if inverse:
            phase = np.conj(phase)
        if layer.kind == "z":
            return psi * phase
        if layer.kind == "y":
            s_diag = _s_phases(self.n_qubits)
            return s_diag * sv.hadamard_all(sv.hadamard_all(psi * np.conj(s_diag)) * phase)
        return sv.hadamard_all(sv.hadamard_all(psi) * phase)

    def apply(self, psi: np.ndarray, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        for layer in self.layers:
            psi = self._apply_layer(psi, layer, layer.angles(theta), inverse=False)
        return psi

    def expectation(self, psi0: np.ndarray, theta: np.ndarray, obs: PauliSum) -> np.ndarray:
        return sv.expectation_array(self.apply(psi0, theta), obs)

    # adjoint ---------------------------------------------------------------
    def value_and_grad(self, psi0: np.ndarray, theta: np.ndarray, obs: PauliSum) -> tuple[np.ndarray, np.ndarray]:
        """Expectation values and parameter gradients for a batch of inputs.

        ``psi0`` has shape ``(batch, 2**N)``; returns ``(batch,)`` values and a
        ``(batch, n_params)`` gradient.
        """
        theta = np.asarray(theta, dtype=float)
        psi0 = np.atleast_2d(psi0)
        all_angles = [layer.angles(theta) for layer in self.layers]
        psi = psi0
        for layer, a in zip(self.layers, all_angles):
            psi = self._apply_layer(psi, layer, a, inverse=False)
        lam = sv.pauli_sum_apply(psi, obs)
        values = np.real(np.sum(np.conj(psi) * lam, axis=-1))
        grad = np.zeros((psi0.shape[0], self.n_params))
        for layer, a in zip(reversed(self.layers), reversed(all_angles)):
            if layer.kind == "local":
                g_words = _local_grad(lam, psi, layer, a, self.n_qubits)
                psi = self._apply_layer(psi, layer, a, inverse=True)
                lam = self._apply_layer(lam, layer, a, inverse=True)
            elif layer.kind == "generic":
                cols = [np.sum(np.conj(lam) * sv.apply_pauli(psi, w), axis=-1) for w in layer.words]
                g_words = 2.0 * np.imag(np.stack(cols, axis=-1))
                psi = self._apply_layer(psi, layer, a, inverse=True)
                lam = self._apply_layer(lam, layer, a, inverse=True)
            else:
                g_words, psi, lam = self._fast_backward(lam, psi, layer, a)
            tied = layer.params >= 0
            if tied.any():
                contrib = g_words[:, tied] * layer.scales[tied]
                np.add.at(grad.T, layer.params[tied], contrib.T)
        return values, grad

    def _fast_backward(self, lam, psi, layer: Layer, angles):
        """Overlap gradients and the un-applied states for an x or z layer.

        For x layers the Hadamard images of ``psi`` and ``lam`` are shared
        between the overlaps and the inversion.
        """
        inv_phase = np.conj(self._phase(layer, angles))
        if layer.kind == "y":
            s_diag = _s_phases(self.n_qubits)
            psi, lam = psi * np.conj(s_diag), lam * np.conj(s_diag)
        if layer.kind in ("x", "y"):
            psi, lam = sv.hadamard_all(psi), sv.hadamard_all(lam)
        overlaps = self._diagonal_overlaps(lam, psi, layer)
        psi, lam = psi * inv_phase, lam * inv_phase
        if layer.kind in ("x", "y"):
            psi, lam = sv.hadamard_all(psi), sv.hadamard_all(lam)
        if layer.kind == "y":
            psi, lam = psi * s_diag, lam * s_diag
        return 2.0 * np.imag(overlaps), psi, lam

    def _diagonal_overlaps(self, lam, psi, layer: Layer) -> np.ndarray:
        """``<lam|P_w|psi>`` for diagonal words ``P_w`` (in the layer's basis)."""
        masks, signs = layer.masks()
        prod = np.conj(lam) * psi
        if len(masks) <= 2 * self.n_qubits:
            cols = [prod @ sv.parity_signs(int(m), self.n_qubits) for m in masks]
            return np.stack(cols, axis=-1) * signs
        return sv.walsh_hadamard(prod)[..., masks] * signs


@lru_cache(maxsize=None)
def _s_phases(n: int) -> np.ndarray:
    """Diagonal of ``S^(x)n``: ``i**popcount(b)``; conjugating X strings by it gives Y strings."""
    pop = np.bitwise_count(np.arange(2 ** n, dtype=np.uint64)).astype(np.int64)
    return (1j ** (pop % 4)).astype(complex)


def _entry(word: PauliString, rot: PauliRotation, theta: np.ndarray, factor: float):
    if rot.param is None:
        return (word, -1, 0.0, factor * rot.angle)
    const = rot.angle - rot.scale * theta[rot.param]
    return (word, rot.param, factor * rot.scale, factor * const)


def _make_layer(entries) -> Layer:
    words = [e[0] for e in entries]
    return Layer(
        words=words,
        params=np.array([e[1] for e in entries], dtype=np.int64),
        scales=np.array([e[2] for e in entries], dtype=float),
        consts=np.array([e[3] for e in entries], dtype=float),
        kind=_layer_kind(words),
    )


def _local_runs(entries) -> list[Layer]:
    """Split generic entries into fused runs on at most two qubits."""
    out = []
    run: list = []
    support: set[int] = set()
    for e in entries:
        sup = set(e[0].support)
        if len(sup) > _LOCAL_MAX_QUBITS:
            if run:
                out.append(_make_local(run, support))
                run, support = [], set()
            out.append(_make_layer([e]))
            continue
        if run and len(support | sup) > _LOCAL_MAX_QUBITS:
            out.append(_make_local(run, support))
            run, support = [], set()
        run.append(e)
        support |= sup
    if run:
        out.append(_make_local(run, support))
    return out


def _make_local(entries, support: set[int]) -> Layer:
    layer = _make_layer(entries)
    qubits = tuple(sorted(support)) or (0,)
    mats = []
    for w in layer.words:
        local = PauliString.from_label("".join(w.word[q] for q in qubits))
        mats.append(w.sign * local.to_matrix())
    layer.kind = "local"
    layer.qubits = qubits
    layer.local_paulis = np.array(mats)
    return layer


def _local_factors(layer: Layer, angles: np.ndarray) -> np.ndarray:
    k = layer.local_paulis.shape[-1]
    eye = np.eye(k)
    return (np.cos(angles)[:, None, None] * eye - 1j * np.sin(angles)[:, None, None] * layer.local_paulis)


def _local_unitary(layer: Layer, angles: np.ndarray) -> np.ndarray:
    u = np.eye(layer.local_paulis.shape[-1], dtype=complex)
    for f in _local_factors(layer, angles):
        u = f @ u
    return u


def _to_local(psi: np.ndarray, qubits: tuple[int, ...], n: int) -> np.ndarray:
    lead = psi.shape[:-1]
    t = psi.reshape(lead + (2,) * n)
    nl = len(lead)
    t = np.moveaxis(t, [nl + q for q in qubits], list(range(nl, nl + len(qubits))))
    return t.reshape(lead + (2 ** len(qubits), -1))


def _from_local(t: np.ndarray, qubits: tuple[int, ...], n: int) -> np.ndarray:
    lead = t.shape[:-2]
    nl = len(lead)
    rest = [q for q in range(n) if q not in qubits]
    t = t.reshape(lead + (2,) * n)
    # axes currently ordered as (qubits..., rest...)
    order = list(qubits) + rest
    inv = np.argsort(order)
    t = np.transpose(t, list(range(nl)) + [nl + int(i) for i in inv])
    return t.reshape(lead + (2 ** n,))


def _contiguous(qubits: tuple[int, ...]) -> bool:
    return all(b == a + 1 for a, b in zip(qubits, qubits[1:]))


def _local_view(psi: np.ndarray, qubits: tuple[int, ...], n: int) -> np.ndarray:
    """``(..., 2**q0, 2**k, rest)`` view for adjacent qubits."""
    k = len(qubits)
    return psi.reshape(psi.shape[:-1] + (2 ** qubits[0], 2 ** k, 2 ** (n - qubits[0] - k)))


def _apply_local(psi: np.ndarray, u: np.ndarray, qubits: tuple[int, ...], n: int) -> np.ndarray:
    if _contiguous(qubits):
        return np.matmul(u, _local_view(psi, qubits, n)).reshape(psi.shape)
    return _from_local(u @ _to_local(psi, qubits, n), qubits, n)


def _transition(psi: np.ndarray, lam: np.ndarray, qubits: tuple[int, ...], n: int) -> np.ndarray:
    """``M_ab = sum_rest psi_a conj(lam_b)`` on the local qubits, shape ``(..., 2**k, 2**k)``."""
    if _contiguous(qubits):
        pv, lv = _local_view(psi, qubits, n), _local_view(lam, qubits, n)
        return np.einsum("...xar,...xbr->...ab", pv, np.conj(lv), optimize=True)
    return np.einsum("...ar,...br->...ab", _to_local(psi, qubits, n), np.conj(_to_local(lam, qubits, n)))


def _local_grad(lam: np.ndarray, psi: np.ndarray, layer: Layer, angles: np.ndarray, n: int) -> np.ndarray:
    """``dC/da_k = 2 Re tr(A_k M)`` with ``A_k = S_k (-i P_k) R_k`` for a fused layer."""
    f = _local_factors(layer, angles)
    k = f.shape[-1]
    u = np.eye(k, dtype=complex)
    prefix = []  # R_k = f_k ... f_1
    for fk in f:
        u = fk @ u
        prefix.append(u)
    total = u
    # psi, lam are at the layer output; M pairs the input state with lam
    psi_in = _apply_local(psi, total.conj().T, layer.qubits, n)
    m = _transition(psi_in, lam, layer.qubits, n)
    a_mats = []
    for i in range(len(f)):
        # S_i = total R_i^dagger
        s_i = total @ prefix[i].conj().T
        a_mats.append(s_i @ (-1j * layer.local_paulis[i]) @ prefix[i])
    a_mats = np.array(a_mats)
    return 2.0 * np.real(np.einsum("wba,...ab->...w", a_mats, m))
