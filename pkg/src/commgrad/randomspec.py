"""Random commuting-generator and commuting-block instances for testing and cross-checks."""
from __future__ import annotations

import numpy as np

from .blocks import Block, BlockCircuit, validate_blocks
from .commuting import CommutingCircuit, validate
from .pauli import PauliString, PauliSum, symplectic_product
from .sim.circuit import Circuit, NamedClifford


def random_pauli(n: int, rng: np.random.Generator, allow_identity: bool = False) -> PauliString:
    while True:
        p = PauliString(rng.integers(0, 2, n), rng.integers(0, 2, n))
        if allow_identity or not p.is_identity():
            return p


def random_prep(n: int, rng: np.random.Generator, depth: int | None = None) -> Circuit:
    """Generic (entangling) preparation from random Pauli rotations."""
    c = Circuit(n)
    for _ in range(depth if depth is not None else 2 * n):
        c.rotation(float(rng.uniform(0, 2 * np.pi)), random_pauli(n, rng))
    return c


def random_observable(n: int, rng: np.random.Generator, n_terms: int = 1) -> PauliSum:
    terms = [(float(rng.normal()), random_pauli(n, rng)) for _ in range(n_terms)]
    return PauliSum(terms)


def random_commuting_set(n: int, size: int, rng: np.random.Generator, max_tries: int = 10_000) -> list[PauliString]:
    """``size`` pairwise commuting non-identity strings (repeats allowed)."""
    out: list[PauliString] = []
    for _ in range(max_tries):
        if len(out) == size:
            break
        p = random_pauli(n, rng)
        if all(not symplectic_product(p, q) for q in out):
            out.append(p)
    if len(out) != size:
        raise RuntimeError("could not draw a commuting set")
    return out


def random_commuting_spec(
    n: int,
    n_generators: int,
    rng: np.random.Generator,
    n_terms: int = 1,
) -> CommutingCircuit:
    gens = random_commuting_set(n, n_generators, rng)
    spec = CommutingCircuit(
        random_prep(n, rng),
        gens,
        rng.uniform(0, 2 * np.pi, n_generators),
        random_observable(n, rng, n_terms),
    )
    return validate(spec)


def random_block_spec(
    n: int,
    n_blocks: int,
    rng: np.random.Generator,
    max_block_size: int = 3,
    n_terms: int = 1,
    max_restarts: int = 1000,
) -> BlockCircuit:
    """Draw a random relation table, then fill blocks by rejection sampling."""
    for _ in range(max_restarts):
        rel = np.triu(rng.integers(0, 2, (n_blocks, n_blocks)), 1).astype(bool)
        rel = rel | rel.T
        sizes = rng.integers(1, max_block_size + 1, n_blocks)
        blocks: list[list[PauliString]] = [[] for _ in range(n_blocks)]
        ok = True
        for b in range(n_blocks):
            for _ in range(sizes[b]):
                for _ in range(2000):
                    p = random_pauli(n, rng)
                    if all(
                        bool(symplectic_product(p, q)) == bool(rel[b, c] and c != b)
                        for c in range(n_blocks)
                        for q in blocks[c]
                    ):
                        blocks[b].append(p)
                        break
                else:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            spec = BlockCircuit(
                random_prep(n, rng),
                [Block(g, rng.uniform(0, 2 * np.pi, len(g))) for g in blocks],
                random_observable(n, rng, n_terms),
            )
            return validate_blocks(spec)
    raise RuntimeError("could not draw a block circuit with the requested relations")


def random_clifford_circuit(n: int, depth: int, rng: np.random.Generator) -> Circuit:
    kinds = ["H", "H_xy", "H_zy", "S", "SDG", "X", "Y", "Z"] + (["CZ", "CNOT"] if n > 1 else [])
    c = Circuit(n)
    for _ in range(depth):
        k = kinds[rng.integers(len(kinds))]
        if k in ("CZ", "CNOT"):
            a, b = rng.choice(n, 2, replace=False)
            c.append(NamedClifford(k, (int(a), int(b))))
        else:
            c.append(NamedClifford(k, (int(rng.integers(n)),)))
    return c
