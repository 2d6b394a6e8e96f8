"""Single-circuit derivative estimation for commuting-generator circuits.

A commuting-generator circuit prepares ``|psi0> = V|0>``, applies
``U(theta) = prod_j exp(-i theta_j G_j)`` with pairwise commuting Pauli
generators and measures ``H = sum_p h_p H_p``.  For every generator that
anticommutes with a term ``H_p``, ``d<H_p>/dtheta_j`` is the expectation of
``O_j = 2i G_j H_p``; these operators commute with one another, so a single
diagonalising circuit per term (or per group of compatible terms) yields the
whole gradient.  Products of several anticommuting generators give all
higher-order partial derivatives the same way.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from .clifford import conjugate_by_circuit
from .diagonalize import (
    Diagonalization,
    NotCommutingError,
    diagonalizer_general,
    diagonalizer_x_ansatz,
    x_basis_readout,
)
from .ledger import GradientReport, ShotLedger
from .pauli import PauliString, PauliSum, pauli_product, symplectic_product
from .sim import statevector as sv
from .sim.circuit import Circuit, PauliRotation


class NonCommutingGenerators(ValueError):
    pass


class ParityViolation(AssertionError):
    pass


@dataclass
class CommutingCircuit:
    """``(V, {G_j}, theta, H)``; ``anticommutes[p, j]`` is filled by :func:`validate`."""

    prep: Circuit
    generators: list[PauliString]
    params: np.ndarray
    observable: PauliSum
    anticommutes: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=float)

    @property
    def n_qubits(self) -> int:
        return self.prep.n_qubits

    @property
    def n_params(self) -> int:
        return len(self.generators)

    def with_params(self, params) -> "CommutingCircuit":
        return replace(self, params=np.asarray(params, dtype=float))

    def unitary_circuit(self) -> Circuit:
        c = Circuit(self.n_qubits)
        for j, (g, t) in enumerate(zip(self.generators, self.params)):
            c.append(PauliRotation(float(t), g, param=j))
        return c

    def circuit(self) -> Circuit:
        return self.prep + self.unitary_circuit()

    def initial_state(self) -> np.ndarray:
        return self.prep.apply(sv.StateVector.zero(self.n_qubits).amplitudes)

    def output_state(self) -> np.ndarray:
        return self.unitary_circuit().apply(self.initial_state())

    def cost(self) -> float:
        return float(sv.expectation_array(self.output_state(), self.observable))


def validate(spec: CommutingCircuit) -> CommutingCircuit:
    """Check commutation structure and tag every (term, generator) pair."""
    n = spec.prep.n_qubits
    if len(spec.params) != len(spec.generators):
        raise ValueError(f"{len(spec.params)} parameters for {len(spec.generators)} generators")
    if spec.observable.n_qubits != n:
        raise ValueError("observable width does not match the preparation circuit")
    for g in spec.generators:
        if g.n_qubits != n:
            raise ValueError(f"generator {g.label()} does not act on {n} qubits")
        if not g.is_hermitian():
            raise ValueError(f"generator {g.label()} is not Hermitian")
    for a, b in itertools.combinations(range(len(spec.generators)), 2):
        if symplectic_product(spec.generators[a], spec.generators[b]):
            raise NonCommutingGenerators(
                f"generators {a} ({spec.generators[a].label()}) and {b} ({spec.generators[b].label()}) do not commute"
            )
    tags = np.array(
        [[bool(symplectic_product(g, h)) for g in spec.generators] for _, h in spec.observable],
        dtype=bool,
    ).reshape(len(spec.observable), len(spec.generators))
    return replace(spec, anticommutes=tags)


def _validated(spec: CommutingCircuit) -> CommutingCircuit:
    return spec if spec.anticommutes is not None else validate(spec)


# --------------------------------------------------------------------------
# derivative observables

def derivative_word(generators: Sequence[PauliString], h: PauliString) -> tuple[float, PauliString]:
    """``i**t 2**t (prod G) H`` as ``(real prefactor, signed Hermitian string)``."""
    t = len(generators)
    prod = h
    for g in reversed(generators):
        prod = pauli_product(g, prod)
    prod = prod.times_i(t)
    if not prod.is_hermitian():
        raise AssertionError(f"derivative observable {prod.label()} is not Hermitian")
    return float(2 ** t), prod


@dataclass
class DerivativeObservable:
    index: tuple[int, ...]  # sorted multi-index
    term: int
    coeff: float  # includes h_p and 2**t
    word: PauliString  # signed Hermitian
    diagonal: PauliString | None = None  # signed Z-type image after the basis change


@dataclass
class DerivativeObservableSet:
    orders: tuple[int, ...]
    entries: list[DerivativeObservable]
    basis_change: Circuit
    terms: tuple[int, ...]

    @property
    def order(self) -> int:
        return self.orders[0]

    def words(self) -> list[PauliString]:
        return [e.word for e in self.entries]


def _multi_indices(anti: np.ndarray, order: int) -> list[tuple[int, ...]]:
    idx = np.flatnonzero(anti).tolist()
    return list(itertools.combinations_with_replacement(idx, order))


def _term_entries(spec: CommutingCircuit, term: int, orders: Sequence[int]) -> list[DerivativeObservable]:
    coeff, h = spec.observable.terms[term]
    out = []
    for t in orders:
        for alpha in _multi_indices(spec.anticommutes[term], t):
            pref, w = derivative_word([spec.generators[j] for j in alpha], h)
            out.append(DerivativeObservable(alpha, term, coeff * pref, w))
    return out


def _all_commute(a: Sequence[PauliString], b: Sequence[PauliString]) -> bool:
    return all(not symplectic_product(p, q) for p in a for q in b)


def _group_terms(per_term: list[list[DerivativeObservable]], merge: bool) -> list[list[int]]:
    """Greedy first-fit grouping of terms whose entries all commute."""
    groups: list[list[int]] = []
    words: list[list[PauliString]] = []
    for p, entries in enumerate(per_term):
        if not entries:
            continue
        mine = _distinct([e.word for e in entries])
        placed = False
        if merge:
            for g, ws in zip(groups, words):
                if _all_commute(mine, ws):
                    g.append(p)
                    ws.extend(mine)
                    placed = True
                    break
        if not placed:
            groups.append([p])
            words.append(list(mine))
    return groups


def _distinct(words: Sequence[PauliString]) -> list[PauliString]:
    return list(dict.fromkeys(w.unsigned() for w in words))


def _diagonalize(words: Sequence[PauliString]) -> Diagonalization:
    distinct = _distinct(words)
    if all(w.is_z_type() for w in distinct):
        return Diagonalization(Circuit(distinct[0].n_qubits), list(distinct))
    return diagonalizer_general(distinct)


def _attach_basis(entries: list[DerivativeObservable], basis: Circuit) -> None:
    for e in entries:
        e.diagonal = conjugate_by_circuit(e.word, basis)
        if not e.diagonal.is_z_type():
            raise AssertionError(f"{e.word.label()} is not diagonal after the basis change")


def derivative_observable_sets(
    spec: CommutingCircuit,
    orders: Sequence[int] = (1,),
    method: str = "general",
    merge_terms: bool = True,
) -> list[DerivativeObservableSet]:
    """Derivative observables of the given orders, grouped into measurable sets.

    ``method="x_ansatz"`` uses the hand-built X-generator diagonaliser (one
    set per Z-product term, X-basis readout); ``"general"`` groups
    compatible terms greedily and synthesises a Clifford diagonaliser.
    """
    spec = _validated(spec)
    orders = tuple(orders)
    per_term = [_term_entries(spec, p, orders) for p in range(len(spec.observable))]
    if method == "x_ansatz":
        if orders != (1,):
            raise ValueError("the X-ansatz diagonaliser covers first-order observables only")
        if not all(g.is_x_type() for g in spec.generators):
            raise ValueError("x_ansatz requires X-type generators")
        groups = [[p] for p, e in enumerate(per_term) if e]
    elif method == "general":
        groups = _group_terms(per_term, merge_terms)
    else:
        raise ValueError(f"unknown diagonaliser method {method!r}")
    out = []
    for g in groups:
        entries = [e for p in g for e in per_term[p]]
        by_parity = {o % 2 for o in orders}
        if len(by_parity) == 1:
            try:
                _check_pairwise([e.word for e in entries])
            except NotCommutingError as err:
                raise ParityViolation(str(err)) from None
        if method == "x_ansatz":
            _, h = spec.observable.terms[g[0]]
            basis = diagonalizer_x_ansatz(h) + x_basis_readout(spec.n_qubits)
        else:
            basis = _diagonalize([e.word for e in entries]).circuit
        _attach_basis(entries, basis)
        out.append(DerivativeObservableSet(orders, entries, basis, tuple(g)))
    return out


def _check_pairwise(words: Sequence[PauliString]) -> None:
    d = _distinct(words)
    for a, b in itertools.combinations(d, 2):
        if symplectic_product(a, b):
            raise NotCommutingError(f"{a.label()} and {b.label()} anticommute")


def build_gradient_observables(spec: CommutingCircuit, term: int = 0) -> DerivativeObservableSet:
    """First-order observables ``O_j = 2i G_j H_p`` for one observable term.

    Generators commuting with the term have no entry (zero derivative).
    """
    spec = _validated(spec)
    entries = _term_entries(spec, term, (1,))
    if not entries:
        return DerivativeObservableSet((1,), [], Circuit(spec.n_qubits), (term,))
    basis = _diagonalize([e.word for e in entries]).circuit
    _attach_basis(entries, basis)
    return DerivativeObservableSet((1,), entries, basis, (term,))


# --------------------------------------------------------------------------
# measurement and post-processing

def eigenvalue_table(entry: DerivativeObservable, n_qubits: int) -> np.ndarray:
    """Eigenvalue of the entry for every computational-basis outcome."""
    d = entry.diagonal
    return entry.coeff * d.sign * sv.parity_signs(d.z_mask, n_qubits).astype(float)


def measure_sets(
    psi: np.ndarray,
    sets: Sequence[DerivativeObservableSet],
    shots: int | None,
    rng: np.random.Generator | None,
) -> tuple[dict[tuple[int, ...], float], dict[tuple[int, ...], float]]:
    """Estimate every multi-index entry; returns ``(means, variances of the mean)``.

    With ``shots=None`` the exact outcome distribution is used and the
    variances are zero.  Per-shot values of one multi-index are summed over
    its entries within a set before the sample variance is formed.
    """
    n = sv.n_qubits_of(psi)
    means: dict[tuple[int, ...], float] = {}
    varis: dict[tuple[int, ...], float] = {}
    for s in sets:
        if not s.entries:
            continue
        out = s.basis_change.apply(psi)
        p = np.abs(out) ** 2
        p /= p.sum()
        if shots is None:
            w = p
        else:
            counts = rng.multinomial(shots, p)
            w = counts / shots
        tables: dict[tuple[int, ...], np.ndarray] = {}
        for e in s.entries:
            v = eigenvalue_table(e, n)
            tables[e.index] = tables[e.index] + v if e.index in tables else v
        for alpha, v in tables.items():
            mu = float(w @ v)
            var = 0.0
            if shots is not None and shots > 1:
                var = float(counts @ (v - mu) ** 2) / (shots - 1) / shots
            means[alpha] = means.get(alpha, 0.0) + mu
            varis[alpha] = varis.get(alpha, 0.0) + var
    return means, varis


class Estimate(NamedTuple):
    value: np.ndarray
    stderr: np.ndarray
    ledger: ShotLedger

    def report(self) -> GradientReport:
        return GradientReport.from_ledger(self.value, self.stderr, self.ledger)


def _ledger(method: str, sets, n_qubits: int, shots: int | None) -> ShotLedger:
    led = ShotLedger(method, shots=shots or 0)
    for s in sets:
        if s.entries:
            led.add_circuit(n_qubits)
    led.record()
    return led


def gradient_exact(spec: CommutingCircuit) -> np.ndarray:
    """Exact gradient from ``<psi|i[G_j, H_p]|psi>`` on the output state."""
    spec = _validated(spec)
    psi = spec.output_state()
    grad = np.zeros(spec.n_params)
    for p, (c, h) in enumerate(spec.observable):
        for j in np.flatnonzero(spec.anticommutes[p]):
            pref, w = derivative_word([spec.generators[j]], h)
            grad[j] += c * pref * np.real(np.vdot(psi, sv.apply_pauli(psi, w)))
    return grad


def gradient_sampled(
    spec: CommutingCircuit,
    shots: int | None,
    rng: np.random.Generator | None = None,
    method: str = "general",
) -> Estimate:
    """Gradient from one diagonalised circuit per compatible term group.

    Each component is the sample mean of the eigenvalues ``lambda_i(O_j)``
    over ``shots`` computational-basis outcomes.
    """
    spec = _validated(spec)
    sets = derivative_observable_sets(spec, (1,), method=method)
    return estimate_from_sets(spec.output_state(), sets, spec.n_params, shots, rng, f"commuting-{method}")


def estimate_from_sets(
    psi: np.ndarray,
    sets: Sequence[DerivativeObservableSet],
    n_params: int,
    shots: int | None,
    rng: np.random.Generator | None = None,
    method: str = "commuting",
) -> Estimate:
    """First-order estimate from precomputed sets measured on the output state ``psi``.

    The sets depend only on the generators and the observable, so callers
    that vary the input or the angles can build them once.
    """
    means, varis = measure_sets(psi, sets, shots, rng)
    est = np.zeros(n_params)
    var = np.zeros(n_params)
    for (j,), m in means.items():
        est[j] = m
        var[j] = varis[(j,)]
    return Estimate(est, np.sqrt(var), _ledger(method, sets, sv.n_qubits_of(psi), shots))


@dataclass
class DerivativeTensor:
    """Sparse symmetric tensor of order-``t`` partial derivatives."""

    order: int
    n_params: int
    entries: dict[tuple[int, ...], float]
    stderr: dict[tuple[int, ...], float]

    def dense(self) -> np.ndarray:
        out = np.zeros((self.n_params,) * self.order)
        for alpha, v in self.entries.items():
            for perm in set(itertools.permutations(alpha)):
                out[perm] = v
        return out

    def __getitem__(self, alpha) -> float:
        return self.entries.get(tuple(sorted(alpha)), 0.0)


MAX_ORDER = 4


def higher_order_derivatives(
    spec: CommutingCircuit,
    order: int,
    shots: int | None,
    rng: np.random.Generator | None = None,
) -> tuple[DerivativeTensor, ShotLedger]:
    """All order-``t`` partial derivatives from one circuit per term group."""
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"order must be in 1..{MAX_ORDER}")
    spec = _validated(spec)
    sets = derivative_observable_sets(spec, (order,))
    means, varis = measure_sets(spec.output_state(), sets, shots, rng)
    tensor = DerivativeTensor(order, spec.n_params, means, {k: float(np.sqrt(v)) for k, v in varis.items()})
    return tensor, _ledger(f"commuting-order{order}", sets, spec.n_qubits, shots)


def parity_grouped_derivatives(
    spec: CommutingCircuit,
    parity: str,
    max_order: int,
    shots: int | None,
    rng: np.random.Generator | None = None,
) -> tuple[dict[int, DerivativeTensor], ShotLedger]:
    """Every derivative of even (or odd) order up to ``max_order`` from shared circuits.

    The even group contains order 0, the cost itself.
    """
    if parity not in ("even", "odd"):
        raise ValueError("parity must be 'even' or 'odd'")
    if max_order > MAX_ORDER:
        raise ValueError(f"max_order must be <= {MAX_ORDER}")
    spec = _validated(spec)
    start = 0 if parity == "even" else 1
    orders = tuple(range(start, max_order + 1, 2))
    if not orders:
        raise ValueError("no orders of that parity below max_order")
    sets = derivative_observable_sets(spec, orders)
    means, varis = measure_sets(spec.output_state(), sets, shots, rng)
    out = {}
    for t in orders:
        ent = {a: m for a, m in means.items() if len(a) == t}
        err = {a: float(np.sqrt(varis[a])) for a in ent}
        out[t] = DerivativeTensor(t, spec.n_params, ent, err)
    return out, _ledger(f"commuting-{parity}", sets, spec.n_qubits, shots)


# --------------------------------------------------------------------------
# Fisher information

@dataclass
class FisherMatrix:
    entries: np.ndarray
    ledger: ShotLedger | None = None

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.entries, self.entries.T))

    def is_psd(self, tol: float = 1e-8) -> bool:
        return bool(np.linalg.eigvalsh(self.entries).min() >= -tol)


def fisher_information(
    spec: CommutingCircuit,
    shots: int | None = None,
    rng: np.random.Generator | None = None,
) -> FisherMatrix:
    """``F_jk = Cov(G_j, G_k)`` on ``V|0>``.

    Exact by default; with ``shots`` the generators are diagonalised jointly
    and the sample covariance of their eigenvalues is returned.
    """
    spec = _validated(spec)
    psi0 = spec.initial_state()
    gens = spec.generators
    n = len(gens)
    if shots is None:
        applied = [sv.apply_pauli(psi0, g) for g in gens]
        mean = np.array([np.real(np.vdot(psi0, a)) for a in applied])
        second = np.empty((n, n))
        for j in range(n):
            for k in range(j, n):
                second[j, k] = second[k, j] = np.real(np.vdot(applied[j], applied[k]))
        f = second - np.outer(mean, mean)
        f = 0.5 * (f + f.T)
        return FisherMatrix(f)
    diag = _diagonalize([g for g in gens if not g.is_identity()] or gens)
    out = diag.circuit.apply(psi0)
    counts = rng.multinomial(shots, np.abs(out) ** 2 / np.sum(np.abs(out) ** 2))
    m = spec.n_qubits
    lam = np.stack([
        conjugate_by_circuit(g, diag.circuit).sign * sv.parity_signs(conjugate_by_circuit(g, diag.circuit).z_mask, m)
        for g in gens
    ]).astype(float)
    f = np.cov(lam, fweights=counts, ddof=1).reshape(n, n)
    led = ShotLedger("fisher-parallel", shots=shots)
    led.add_circuit(m)
    led.record()
    return FisherMatrix(0.5 * (f + f.T), led)


# --------------------------------------------------------------------------
# nonlocal X/Y generators

def _xy_full_weight(p: PauliString) -> bool:
    return p.weight == p.n_qubits and all(c in "XY" for c in p.word)


def check_nonlocal_structure(spec: CommutingCircuit) -> None:
    for g in spec.generators:
        if not _xy_full_weight(g) or g.n_y % 2 != 1:
            raise ValueError(f"generator {g.label()} is not an odd-Y string over {{X, Y}}")
    for _, h in spec.observable:
        if not _xy_full_weight(h) or h.n_y % 2 != 0:
            raise ValueError(f"observable term {h.word} is not an even-Y string over {{X, Y}}")


def nonlocal_generator_gradient(
    spec: CommutingCircuit,
    shots: int | None,
    rng: np.random.Generator | None = None,
) -> Estimate:
    """Gradient of a whole weighted sum of X/Y terms from one Z-basis circuit.

    Every ``2i G_j H_p`` is a signed Z string on the qubits where ``G_j`` and
    ``H_p`` differ, so no basis change is needed.
    """
    check_nonlocal_structure(spec)
    spec = _validated(spec)
    entries = [e for p in range(len(spec.observable)) for e in _term_entries(spec, p, (1,))]
    basis = Circuit(spec.n_qubits)
    _attach_basis(entries, basis)
    sets = [DerivativeObservableSet((1,), entries, basis, tuple(range(len(spec.observable))))]
    means, varis = measure_sets(spec.output_state(), sets, shots, rng)
    est = np.zeros(spec.n_params)
    var = np.zeros(spec.n_params)
    for (j,), m in means.items():
        est[j] = m
        var[j] = varis[(j,)]
    return Estimate(est, np.sqrt(var), _ledger("nonlocal-parallel", sets, spec.n_qubits, shots))
