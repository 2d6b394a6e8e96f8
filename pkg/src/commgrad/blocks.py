"""Commuting-block circuits and their ancilla-assisted gradient estimator.

Generators commute inside a block and have one fixed relation (all commute
or all anticommute) between any two blocks.  For block ``b`` write
``W`` for the blocks after it and ``W~`` for ``W`` with the angles negated in
every later block that anticommutes with ``b``, so that ``W G_j = G_j W~``.
With ``O_j = i**g_j G_j H`` and ``W' = i**(1 - g_j) W`` the derivative is an
expectation of ``2 Z (x) O_j`` on the state prepared by

    H_anc -> prep -> blocks 1..b -> ctrl_1(W') -> ctrl_0(W~) -> H_anc

so each block needs one circuit per value of ``g_j`` and the final block is
handled by the ancilla-free commuting-generator estimator.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .commuting import (
    CommutingCircuit,
    DerivativeObservable,
    DerivativeObservableSet,
    Estimate,
    _attach_basis,
    _diagonalize,
    _distinct,
    _group_terms,
    gradient_sampled,
    measure_sets,
)
from .ledger import ShotLedger
from .pauli import PauliString, PauliSum, pauli_product, symplectic_product
from .sim import statevector as sv
from .sim.circuit import Circuit, ControlledSubcircuit, GlobalPhase, PauliRotation


class BlockStructureError(ValueError):
    pass


@dataclass
class Block:
    generators: list[PauliString]
    params: np.ndarray

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=float)
        if len(self.params) != len(self.generators):
            raise ValueError(f"{len(self.params)} parameters for {len(self.generators)} generators")


@dataclass
class BlockCircuit:
    """``V`` followed by blocks ``U_1 ... U_B`` and a Pauli-sum observable.

    ``relation[b, c]`` is True when blocks ``b`` and ``c`` anticommute;
    ``anticommutes[b][p, j]`` when generator ``j`` of block ``b`` anticommutes
    with observable term ``p``.  Both are filled by :func:`validate_blocks`.
    """

    prep: Circuit
    blocks: list[Block]
    observable: PauliSum
    relation: np.ndarray | None = field(default=None, repr=False)
    anticommutes: list[np.ndarray] | None = field(default=None, repr=False)

    @property
    def n_qubits(self) -> int:
        return self.prep.n_qubits

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def n_params(self) -> int:
        return sum(len(b.generators) for b in self.blocks)

    @property
    def params(self) -> np.ndarray:
        return np.concatenate([b.params for b in self.blocks]) if self.blocks else np.zeros(0)

    def offsets(self) -> list[int]:
        return list(np.cumsum([0] + [len(b.generators) for b in self.blocks])[:-1])

    def with_params(self, params) -> "BlockCircuit":
        params = np.asarray(params, dtype=float)
        blocks, k = [], 0
        for b in self.blocks:
            blocks.append(Block(b.generators, params[k:k + len(b.generators)]))
            k += len(b.generators)
        return replace(self, blocks=blocks)

    def block_circuit(self, b: int, negate: bool = False) -> Circuit:
        blk = self.blocks[b]
        off = self.offsets()[b]
        c = Circuit(self.n_qubits)
        sign = -1.0 if negate else 1.0
        for j, (g, t) in enumerate(zip(blk.generators, blk.params)):
            c.append(PauliRotation(sign * float(t), g, param=off + j, scale=sign))
        return c

    def circuit(self) -> Circuit:
        c = self.prep.copy()
        for b in range(self.n_blocks):
            c = c + self.block_circuit(b)
        return c

    def cost(self) -> float:
        psi = self.circuit().apply(sv.StateVector.zero(self.n_qubits).amplitudes)
        return float(sv.expectation_array(psi, self.observable))


def validate_blocks(spec: BlockCircuit) -> BlockCircuit:
    """Check block structure and fill the relation and tag tables."""
    n = spec.n_qubits
    if not spec.blocks:
        raise BlockStructureError("need at least one block")
    if spec.observable.n_qubits != n:
        raise ValueError("observable width does not match the preparation circuit")
    for b, blk in enumerate(spec.blocks):
        if not blk.generators:
            raise BlockStructureError(f"block {b} is empty")
        for g in blk.generators:
            if g.n_qubits != n or not g.is_hermitian():
                raise ValueError(f"bad generator {g.label()} in block {b}")
        for j, k in itertools.combinations(range(len(blk.generators)), 2):
            if symplectic_product(blk.generators[j], blk.generators[k]):
                raise BlockStructureError(f"generators {j} and {k} of block {b} do not commute")
    B = spec.n_blocks
    rel = np.zeros((B, B), dtype=bool)
    for b, c in itertools.combinations(range(B), 2):
        vals = {
            symplectic_product(g, h)
            for g in spec.blocks[b].generators
            for h in spec.blocks[c].generators
        }
        if len(vals) != 1:
            raise BlockStructureError(f"blocks {b} and {c} have mixed commutation relations")
        rel[b, c] = rel[c, b] = bool(vals.pop())
    tags = [
        np.array([[bool(symplectic_product(g, h)) for g in blk.generators] for _, h in spec.observable],
                 dtype=bool).reshape(len(spec.observable), len(blk.generators))
        for blk in spec.blocks
    ]
    return replace(spec, relation=rel, anticommutes=tags)


def _validated(spec: BlockCircuit) -> BlockCircuit:
    return spec if spec.relation is not None else validate_blocks(spec)


def tail(spec: BlockCircuit, b: int) -> Circuit:
    """``W_b``: all blocks after ``b``."""
    if not 0 <= b < spec.n_blocks:
        raise IndexError(f"block {b} out of range")
    c = Circuit(spec.n_qubits)
    for k in range(b + 1, spec.n_blocks):
        c = c + spec.block_circuit(k)
    return c


def conjugated_tail(spec: BlockCircuit, b: int) -> Circuit:
    """``W~_b``: ``W_b`` with angles negated in later blocks anticommuting with ``b``."""
    spec = _validated(spec)
    if not 0 <= b < spec.n_blocks:
        raise IndexError(f"block {b} out of range")
    c = Circuit(spec.n_qubits)
    for k in range(b + 1, spec.n_blocks):
        c = c + spec.block_circuit(k, negate=bool(spec.relation[b, k]))
    return c


@dataclass
class LcuGradientCircuit:
    """One ancilla circuit estimating the derivatives of one class of block ``b``.

    ``state_circuit`` prepares the state before the basis change; the
    measured observables are the ``entries`` (``2 h_p Z_anc (x) O_j``).
    """

    base: Circuit
    block: int
    anticommuting: bool
    tail: Circuit
    conjugated_tail: Circuit
    basis_change: Circuit
    entries: list[DerivativeObservable]

    @property
    def state_circuit(self) -> Circuit:
        return self.base

    @property
    def n_qubits(self) -> int:
        return self.base.n_qubits

    def observable_set(self) -> DerivativeObservableSet:
        terms = tuple(sorted({e.term for e in self.entries}))
        return DerivativeObservableSet((1,), self.entries, self.basis_change, terms)

    def state(self) -> np.ndarray:
        return self.base.apply(sv.StateVector.zero(self.n_qubits).amplitudes)


def _class_entries(spec: BlockCircuit, b: int, g: int, terms: Sequence[int] | None = None) -> list[DerivativeObservable]:
    """``O_j = i**g G_j H_p`` for generators of block ``b`` with tag ``g`` on term ``p``."""
    out = []
    off = spec.offsets()[b]
    for p, (coeff, h) in enumerate(spec.observable):
        if terms is not None and p not in terms:
            continue
        for j in np.flatnonzero(spec.anticommutes[b][p] == bool(g)):
            w = pauli_product(spec.blocks[b].generators[j], h).times_i(g)
            if not w.is_hermitian():
                raise AssertionError(f"O_j {w.label()} is not Hermitian")
            out.append(DerivativeObservable((off + int(j),), p, coeff, w))
    return out


def build_lcu_circuit(
    spec: BlockCircuit, b: int, anticommuting: bool, terms: Sequence[int] | None = None
) -> LcuGradientCircuit:
    """The ancilla circuit for the generators of block ``b`` in one class.

    ``terms`` restricts the observable to a subset of its terms whose
    ``O_j`` commute (all terms by default).  The ancilla is qubit 0 and the
    register occupies qubits ``1..N``.
    """
    spec = _validated(spec)
    if not 0 <= b < spec.n_blocks:
        raise IndexError(f"block {b} out of range")
    g = int(anticommuting)
    entries = _class_entries(spec, b, g, terms)
    if not entries:
        raise ValueError(f"block {b} has no generators in the {'anti' if g else ''}commuting class")
    n = spec.n_qubits
    m = n + 1
    w = tail(spec, b)
    wt = conjugated_tail(spec, b)
    base = Circuit(m).clifford("H", 0)
    base = base + spec.prep.embedded(m, 1)
    for k in range(b + 1):
        base = base + spec.block_circuit(k).embedded(m, 1)
    w_prime = w.embedded(m, 1)
    if 1 - g:
        w_prime.append(GlobalPhase(1 - g))
    if w_prime.gates:
        base.append(ControlledSubcircuit(0, 1, w_prime))
    if wt.gates:
        base.append(ControlledSubcircuit(0, 0, wt.embedded(m, 1)))
    base.clifford("H", 0)
    diag = _diagonalize([e.word for e in entries]).circuit.embedded(m, 1)
    z_anc = PauliString.single(m, 0, "Z")
    lifted = [
        DerivativeObservable(e.index, e.term, 2.0 * e.coeff, pauli_product(z_anc, e.word.embed(m, 1)))
        for e in entries
    ]
    _attach_basis(lifted, diag)
    return LcuGradientCircuit(base, b, bool(g), w, wt, diag, lifted)


def lcu_circuits(spec: BlockCircuit, b: int, anticommuting: bool) -> list[LcuGradientCircuit]:
    """Ancilla circuits covering one class of block ``b``, one per compatible term group.

    For a single-term observable (or terms with mutually commuting ``O_j``)
    this is a single circuit.
    """
    spec = _validated(spec)
    g = int(anticommuting)
    per_term = [_class_entries(spec, b, g, [p]) for p in range(len(spec.observable))]
    return [build_lcu_circuit(spec, b, anticommuting, grp) for grp in _group_terms(per_term, True)]


def _final_block_spec(spec: BlockCircuit) -> CommutingCircuit:
    prep = spec.prep.copy()
    for k in range(spec.n_blocks - 1):
        prep = prep + spec.block_circuit(k)
    last = spec.blocks[-1]
    return CommutingCircuit(prep, list(last.generators), last.params, spec.observable)


def block_gradient(
    spec: BlockCircuit,
    shots: int | None,
    rng: np.random.Generator | None = None,
) -> Estimate:
    """Full gradient from ancilla circuits for the non-final blocks plus the final block's circuits.

    For a single-term observable this is at most two ancilla circuits per
    non-final block and one for the final block.  ``shots=None`` evaluates
    every circuit exactly.
    """
    spec = _validated(spec)
    grad = np.zeros(spec.n_params)
    var = np.zeros(spec.n_params)
    ledger = ShotLedger("commuting-block", shots=shots or 0)
    for b in range(spec.n_blocks - 1):
        for g in (True, False):
            if not (spec.anticommutes[b] == g).any():
                continue
            for lcu in lcu_circuits(spec, b, g):
                means, varis = measure_sets(lcu.state(), [lcu.observable_set()], shots, rng)
                for (j,), mu in means.items():
                    grad[j] += mu
                    var[j] += varis[(j,)]
                ledger.add_circuit(lcu.n_qubits)
    last = gradient_sampled(_final_block_spec(spec), shots, rng)
    off = spec.offsets()[-1]
    grad[off:] = last.value
    var[off:] = last.stderr ** 2
    ledger.circuits += last.ledger.circuits
    ledger.qubits.extend(last.ledger.qubits)
    ledger.record()
    return Estimate(grad, np.sqrt(var), ledger)


def lcu_exact_derivatives(spec: BlockCircuit, b: int, anticommuting: bool) -> dict[int, float]:
    """``<2 Z (x) O_j>`` on the ancilla state, evaluated without sampling."""
    out: dict[int, float] = {}
    for lcu in lcu_circuits(spec, b, anticommuting):
        means, _ = measure_sets(lcu.state(), [lcu.observable_set()], None, None)
        for (j,), v in means.items():
            out[j] = out.get(j, 0.0) + v
    return out


def cost_exact(spec: BlockCircuit) -> float:
    return spec.cost()


# --------------------------------------------------------------------------
# text format

def to_text(spec: BlockCircuit) -> str:
    """Serialise as a prep circuit, ``block`` sections and a relation footer."""
    spec = _validated(spec)
    lines = [f"blockcircuit {spec.n_qubits}", "prep {"]
    lines.extend(spec.prep.to_text().splitlines()[1:])
    lines.append("}")
    for b, blk in enumerate(spec.blocks):
        lines.append(f"block {b} {{")
        for g, t in zip(blk.generators, blk.params):
            lines.append(f"gen {float(t)!r} {g.label()}")
        lines.append("}")
    lines.append("observable {")
    for c, w in spec.observable:
        lines.append(f"term {float(c)!r} {w.label()}")
    lines.append("}")
    lines.append("relations")
    for row in spec.relation:
        lines.append("".join("A" if v else "C" for v in row))
    return "\n".join(lines) + "\n"


def from_text(text: str) -> BlockCircuit:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    head = lines[0].split()
    if head[0] != "blockcircuit":
        raise ValueError("block-circuit text must start with 'blockcircuit N'")
    n = int(head[1])

    def section(pos: int) -> tuple[list[str], int]:
        end = lines.index("}", pos)
        return lines[pos + 1:end], end + 1

    if lines[1] != "prep {":
        raise ValueError("expected 'prep {'")
    body, pos = section(1)
    prep = Circuit.from_text("\n".join([f"qubits {n}", *body]))
    blocks = []
    while lines[pos].startswith("block "):
        body, pos = section(pos)
        gens, params = [], []
        for ln in body:
            tok = ln.split()
            if tok[0] != "gen":
                raise ValueError(f"bad generator line {ln!r}")
            params.append(float(tok[1]))
            gens.append(PauliString.from_label(tok[2]))
        blocks.append(Block(gens, np.array(params)))
    if lines[pos] != "observable {":
        raise ValueError("expected 'observable {'")
    body, pos = section(pos)
    terms = []
    for ln in body:
        tok = ln.split()
        terms.append((float(tok[1]), PauliString.from_label(tok[2])))
    if lines[pos] != "relations":
        raise ValueError("expected 'relations' footer")
    rows = lines[pos + 1:]
    spec = validate_blocks(BlockCircuit(prep, blocks, PauliSum(terms)))
    recorded = np.array([[c == "A" for c in row] for row in rows], dtype=bool)
    if recorded.shape != spec.relation.shape or not np.array_equal(recorded, spec.relation):
        raise BlockStructureError("relation footer does not match the generators")
    return spec
