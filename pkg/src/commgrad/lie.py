"""Symmetrisation, anticommuting sets and Lie-closure dimensions of Pauli generators."""
from __future__ import annotations

import itertools
import warnings
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .pauli import PauliString, pauli_product, symplectic_product


def cyclic_twirl_orbit(p: PauliString) -> list[PauliString]:
    """Distinct images of ``p`` under the N cyclic qubit shifts.

    Ordered by shift amount starting with ``p`` itself; the symmetrised
    generator ``sym(p)`` is the unweighted sum of the returned strings.
    """
    if not p.is_hermitian():
        raise ValueError(f"{p.label()} is not Hermitian")
    seen: dict[PauliString, None] = {}
    for k in range(p.n_qubits):
        seen.setdefault(p.cyclic_shift(k), None)
    return list(seen)


def x_type_orbits(n_qubits: int, max_weight: int) -> list[list[PauliString]]:
    """All cyclic orbits of X-type strings with weight 1..max_weight.

    Orbits are sorted by weight, then by the first qubit combination (in
    lexicographic order) that lands in them, so ``X_1 X_2`` precedes
    ``X_1 X_3``.  That combination is the orbit's first member.
    """
    orbits = []
    seen = set()
    z = np.zeros(n_qubits, np.uint8)
    for w in range(1, max_weight + 1):
        found = []
        for combo in itertools.combinations(range(n_qubits), w):
            x = np.zeros(n_qubits, np.uint8)
            x[list(combo)] = 1
            p = PauliString(x, z)
            if p in seen:
                continue
            orbit = cyclic_twirl_orbit(p)
            seen.update(orbit)
            found.append(orbit)
        orbits.extend(found)
    return orbits


def majorana_anticommuting_set(n: int) -> list[PauliString]:
    """The 2n+1 Jordan-Wigner Majorana strings plus the all-Z string.

    ``Z..ZXI..I`` for each position, then ``Z..ZYI..I``, then ``Z..Z``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    out = []
    for kind in ("X", "Y"):
        for k in range(n):
            out.append(PauliString.from_label("Z" * k + kind + "I" * (n - k - 1)))
    out.append(PauliString.from_label("Z" * n))
    return out


class DLADimension(NamedTuple):
    dimension: int
    exceeded: bool
    basis: tuple[PauliString, ...]


def dla_dimension(generators: Sequence[PauliString], cap: int = 4096) -> DLADimension:
    """Dimension of the real Lie closure of ``{i G_j}`` for Pauli generators.

    The commutator of two Pauli strings is zero or proportional to a single
    Pauli string, so the closure is spanned by a set of (phase-free) basis
    words that is grown breadth-first.  The identity is never included.
    When the basis grows beyond ``cap`` the search stops and ``exceeded`` is
    set; a warning is issued rather than an exception.
    """
    if not generators:
        raise ValueError("need at least one generator")
    for g in generators:
        if not g.is_hermitian():
            raise ValueError(f"{g.label()} is not Hermitian")
    basis: dict[PauliString, None] = {}
    frontier = []
    for g in generators:
        u = g.unsigned()
        if u.is_identity() or u in basis:
            continue
        basis[u] = None
        frontier.append(u)
    exceeded = False
    while frontier and not exceeded:
        new = []
        current = list(basis)
        for a in frontier:
            for b in current:
                if not symplectic_product(a, b):
                    continue
                c = pauli_product(a, b).unsigned()
                if c not in basis:
                    basis[c] = None
                    new.append(c)
                    current.append(c)
                    if len(basis) > cap:
                        exceeded = True
                        break
            if exceeded:
                break
        frontier = new
    if exceeded:
        warnings.warn(f"Lie closure exceeded cap={cap}; dimension is a lower bound", RuntimeWarning)
    return DLADimension(len(basis), exceeded, tuple(sorted(basis)))


def span_dimension(generators: Iterable[PauliString]) -> int:
    """Number of distinct non-identity words, i.e. the real span dimension."""
    return len({g.unsigned() for g in generators if not g.is_identity()})


def odd_z_block(n: int) -> list[PauliString]:
    """All Z/I strings on ``n`` qubits with an odd number of Z factors."""
    out = []
    for bits in itertools.product((0, 1), repeat=n):
        if sum(bits) % 2 == 1:
            out.append(PauliString(np.zeros(n, np.uint8), bits))
    return out


def two_block_example(n: int) -> list[list[PauliString]]:
    """Odd-weight Z strings followed by the single generator ``X^(x)n``.

    The two blocks mutually anticommute and their closure has dimension
    ``(3/2) 2**n``.
    """
    return [odd_z_block(n), [PauliString.from_label("X" * n)]]
