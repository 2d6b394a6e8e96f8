"""The four bars-and-dots classifiers.

All models encode ``x`` with ``exp(-i x_r Y_r / 4)`` and predict
``sign <H>``.

* ``A``: commuting X-type generators, one parameter per cyclic orbit of
  X strings of weight at most ``K``; ``H = sym(Z_1)/d``.
* ``B``: ``L`` layers of ``sym(Z_1)``, ``sym(Y_1)`` and ``sym(X_1 X_r)`` for
  ``r = 2 .. d/2 + 1``; ``H = sym(Z_1)/d``.
* ``C``: a QCNN with 10-parameter convolution blocks and 2-parameter
  pooling blocks, parameters shared within each layer; ``H = Z_d``.
* ``D``: ``exp(-i a X) exp(-i b Y) exp(-i c Z)`` on every qubit; ``H = sym(Z_1)/d``.

Convolution block on ``(a, b)``: ``RX_a RX_b RZ_a RZ_b CRZ(b->a) CRZ(a->b)
RX_a RX_b RZ_a RZ_b`` (8 single-qubit and 2 controlled rotations).  Pooling
on ``(a, b)`` keeps ``b``: ``CRZ(a->b)``, a fixed ``X_a`` (as a pi/2 rotation)
and ``CRX(a->b)``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from ..commuting import CommutingCircuit, derivative_observable_sets, estimate_from_sets
from ..lie import x_type_orbits
from ..pauli import PauliString, PauliSum
from ..shift import ShiftGroup, count_shift_circuits, parameter_shift_gradient
from ..sim.circuit import (
    Circuit,
    ControlledSubcircuit,
    PauliRotation,
    controlled_rotation,
    encode_data,
    encoded_states,
)
from ..sim.layers import Program

KINDS = ("A", "B", "C", "D")


@dataclass
class ModelConfig:
    kind: str
    d: int = 16
    K: int = 3
    L: int = 4

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.d < 2 or self.d % 2:
            raise ValueError("d must be an even integer >= 2")
        if self.kind == "A" and not 1 <= self.K <= self.d:
            raise ValueError("K must lie in 1..d")
        if self.kind == "B" and self.L < 1:
            raise ValueError("L must be >= 1")
        if self.kind == "C" and self.d & (self.d - 1):
            raise ValueError("model C needs d to be a power of two")


def sym_z(d: int) -> PauliSum:
    return PauliSum([(1.0 / d, PauliString.single(d, r, "Z")) for r in range(d)])


def single_z_parts(d: int) -> list[PauliSum]:
    return [PauliSum([(1.0 / d, PauliString.single(d, r, "Z"))]) for r in range(d)]


def one_factorization(d: int) -> list[list[tuple[int, int]]]:
    """``d - 1`` perfect matchings partitioning all pairs of ``0..d-1`` (round robin)."""
    if d % 2:
        raise ValueError("d must be even")
    rounds = []
    m = d - 1
    for t in range(m):
        pairs = [(t, m)]
        for i in range(1, d // 2):
            a, b = (t + i) % m, (t - i) % m
            pairs.append((min(a, b), max(a, b)))
        rounds.append([tuple(sorted(p)) for p in pairs])
    return rounds


class Model:
    """A parameterised classifier circuit with its observable and gradient plumbing."""

    def __init__(self, cfg: ModelConfig, circuit: Circuit, n_params: int, observable: PauliSum,
                 groups: list[ShiftGroup] | None = None, generator_params: np.ndarray | None = None):
        self.cfg = cfg
        self._template = circuit
        self.n_params = n_params
        self.observable = observable
        self.shift_groups = groups or []
        self.generator_params = generator_params  # model A: parameter of each expanded word

    @property
    def kind(self) -> str:
        return self.cfg.kind

    @property
    def d(self) -> int:
        return self.cfg.d

    def circuit(self, theta) -> Circuit:
        """Trainable part with angles ``scale * theta[param] + const`` filled in."""
        theta = np.asarray(theta, dtype=float)
        gates = []
        for g in self._template.gates:
            gates.append(_bind(g, theta))
        return Circuit(self.d, gates)

    def full_circuit(self, x, theta) -> Circuit:
        return encode_data(x) + self.circuit(theta)

    @cached_property
    def program(self) -> Program:
        return Program.from_circuit(self._template, np.zeros(self.n_params), self.n_params)

    def expectations(self, X, theta) -> np.ndarray:
        return np.real(self.program.expectation(encoded_states(X), np.asarray(theta, float), self.observable))

    def value_and_grad(self, X, theta) -> tuple[np.ndarray, np.ndarray]:
        return self.program.value_and_grad(encoded_states(X), np.asarray(theta, float), self.observable)

    def predict(self, X, theta) -> np.ndarray:
        return np.where(self.expectations(X, theta) >= 0, 1, -1)

    # gradient estimators ---------------------------------------------------
    def commuting_spec(self, x, theta) -> CommutingCircuit:
        if self.kind != "A":
            raise ValueError("only model A is a commuting-generator circuit")
        theta = np.asarray(theta, dtype=float)
        gens = [g.word for g in self._template.gates]
        return CommutingCircuit(encode_data(x), gens, theta[self.generator_params], self.observable)

    def sampled_gradient(self, x, theta, shots: int | None, rng=None):
        """Sampled gradient of ``<H>`` for one input with the model's standard method."""
        if self.kind == "A":
            psi = self.program.apply(encoded_states(np.atleast_2d(x)), np.asarray(theta, float))[0]
            est = estimate_from_sets(psi, self._a_sets, len(self.generator_params), shots, rng,
                                     "commuting-x_ansatz")
            grad = np.bincount(self.generator_params, weights=est.value, minlength=self.n_params)
            var = np.bincount(self.generator_params, weights=est.stderr ** 2, minlength=self.n_params)
            return grad, np.sqrt(var), est.ledger
        psi0 = encoded_states(np.atleast_2d(x))[0]
        est = parameter_shift_gradient(self.circuit(theta), self.observable, self.n_params, shots, rng,
                                       psi0=psi0, groups=self.shift_groups)
        return est.value, est.stderr, est.ledger

    def gradient_circuits(self) -> int:
        """Distinct circuits per input gradient, counted from the construction."""
        return self._gradient_circuits

    @cached_property
    def _a_sets(self):
        spec = self.commuting_spec(np.zeros(self.d), np.zeros(self.n_params))
        return derivative_observable_sets(spec, (1,), method="x_ansatz")

    @cached_property
    def _gradient_circuits(self) -> int:
        if self.kind == "A":
            return len(self._a_sets)
        return count_shift_circuits(self._template, self.shift_groups)


def _bind(g, theta):
    if isinstance(g, PauliRotation):
        if g.param is None:
            return g
        return replace(g, angle=g.scale * theta[g.param] + g.angle)
    if isinstance(g, ControlledSubcircuit):
        rot = g.body.gates[0]
        return ControlledSubcircuit(g.control, g.value, Circuit(g.body.n_qubits, [_bind(rot, theta)]))
    return g


def _rot(c: Circuit, word: PauliString, param: int | None, const: float = 0.0) -> int:
    """Append a template rotation (angle holds the constant offset); return its index."""
    c.append(PauliRotation(const, word, param=param))
    return len(c.gates) - 1


def _build_a(cfg: ModelConfig) -> Model:
    d = cfg.d
    orbits = x_type_orbits(d, cfg.K)
    c = Circuit(d)
    owner = []
    for k, orbit in enumerate(orbits):
        for w in orbit:
            _rot(c, w, k)
            owner.append(k)
    return Model(cfg, c, len(orbits), sym_z(d), generator_params=np.array(owner, dtype=np.int64))


def _build_b(cfg: ModelConfig) -> Model:
    d = cfg.d
    c = Circuit(d)
    per_layer = 2 + d // 2
    last_xx: dict[tuple[int, int], int] = {}
    for layer in range(cfg.L):
        base = layer * per_layer
        for r in range(d):
            _rot(c, PauliString.single(d, r, "Z"), base)
        for r in range(d):
            _rot(c, PauliString.single(d, r, "Y"), base + 1)
        for k, r in enumerate(range(2, d // 2 + 2)):
            dist = r - 1
            seen = set()
            for s in range(d):
                pair = tuple(sorted((s, (s + dist) % d)))
                if pair in seen:
                    continue
                seen.add(pair)
                ix = _rot(c, PauliString.from_sparse(d, {pair[0]: "X", pair[1]: "X"}), base + 2 + k)
                if layer == cfg.L - 1:
                    last_xx[pair] = ix
    parts = single_z_parts(d)
    groups = []
    for matching in one_factorization(d):
        gates = tuple(last_xx[p] for p in matching)
        readouts = tuple(parts[a] + parts[b] for a, b in matching)
        groups.append(ShiftGroup(gates, readouts))
    return Model(cfg, c, cfg.L * per_layer, sym_z(d), groups)


def _conv_block(c: Circuit, a: int, b: int, base: int) -> None:
    d = c.n_qubits
    X = lambda q: PauliString.single(d, q, "X")  # noqa: E731
    Z = lambda q: PauliString.single(d, q, "Z")  # noqa: E731
    _rot(c, X(a), base + 0)
    _rot(c, X(b), base + 1)
    _rot(c, Z(a), base + 2)
    _rot(c, Z(b), base + 3)
    c.append(controlled_rotation(b, 1, 0.0, Z(a), param=base + 4))
    c.append(controlled_rotation(a, 1, 0.0, Z(b), param=base + 5))
    _rot(c, X(a), base + 6)
    _rot(c, X(b), base + 7)
    _rot(c, Z(a), base + 8)
    _rot(c, Z(b), base + 9)


def _pool_block(c: Circuit, a: int, b: int, base: int) -> None:
    d = c.n_qubits
    c.append(controlled_rotation(a, 1, 0.0, PauliString.single(d, b, "Z"), param=base))
    c.append(PauliRotation(np.pi / 2, PauliString.single(d, a, "X")))
    c.append(controlled_rotation(a, 1, 0.0, PauliString.single(d, b, "X"), param=base + 1))


def qcnn_layout(d: int) -> list[tuple[list[tuple[int, int]], list[tuple[int, int]]]]:
    """Per layer: (convolution pairs, pooling pairs) with the kept qubit second."""
    active = list(range(d))
    layers = []
    while len(active) > 1:
        k = len(active)
        if k == 2:
            conv = [(active[0], active[1])]
        else:
            conv = [(active[i], active[i + 1]) for i in range(0, k, 2)]
            conv += [(active[i], active[(i + 1) % k]) for i in range(1, k, 2)]
        pool = [(active[i], active[i + 1]) for i in range(0, k, 2)]
        layers.append((conv, pool))
        active = [b for _, b in pool]
    return layers


def _build_c(cfg: ModelConfig) -> Model:
    d = cfg.d
    c = Circuit(d)
    layout = qcnn_layout(d)
    for ell, (conv, pool) in enumerate(layout):
        base = 12 * ell
        for a, b in conv:
            _conv_block(c, a, b, base)
        for a, b in pool:
            _pool_block(c, a, b, base + 10)
    obs = PauliSum([(1.0, PauliString.single(d, d - 1, "Z"))])
    return Model(cfg, c, 12 * len(layout), obs)


def _build_d(cfg: ModelConfig) -> Model:
    d = cfg.d
    c = Circuit(d)
    parts = single_z_parts(d)
    groups = []
    for k, kind in enumerate("XYZ"):
        gates = tuple(_rot(c, PauliString.single(d, r, kind), 3 * r + k) for r in range(d))
        groups.append(ShiftGroup(gates, tuple(parts)))
    return Model(cfg, c, 3 * d, sym_z(d), groups)


_BUILDERS = {"A": _build_a, "B": _build_b, "C": _build_c, "D": _build_d}


def build_model(cfg: ModelConfig) -> Model:
    return _BUILDERS[cfg.kind](cfg)
