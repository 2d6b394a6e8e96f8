import numpy as np
import pytest

from commgrad.lie import (
    cyclic_twirl_orbit,
    dla_dimension,
    majorana_anticommuting_set,
    odd_z_block,
    span_dimension,
    two_block_example,
    x_type_orbits,
)
from commgrad.pauli import PauliString, symplectic_product
from oracles import lie_closure_dimension


def test_single_qubit_xy_closes_to_su2():
    assert dla_dimension([PauliString.from_label("X"), PauliString.from_label("Y")]).dimension == 3


@pytest.mark.parametrize("n", [2, 3, 4])
def test_two_block_example_dimension(n):
    gens = [g for b in two_block_example(n) for g in b]
    assert dla_dimension(gens).dimension == 3 * 2 ** n // 2


@pytest.mark.parametrize("n", [2, 3])
def test_dla_matches_dense_closure(n):
    rng = np.random.default_rng(n)
    for _ in range(5):
        words = ["".join(rng.choice(list("IXYZ"), n)) for _ in range(3)]
        gens = [PauliString.from_label(w) for w in words if set(w) != {"I"}]
        if not gens:
            continue
        want = lie_closure_dimension([1j * g.to_matrix() for g in gens])
        assert dla_dimension(gens).dimension == want


def test_two_block_dense_oracle_small():
    gens = [g for b in two_block_example(2) for g in b]
    assert lie_closure_dimension([1j * g.to_matrix() for g in gens]) == 6


def test_blocks_anticommute():
    zs, xs = two_block_example(3)
    assert all(symplectic_product(a, xs[0]) for a in zs)
    assert len(odd_z_block(3)) == 4


def test_cap_warns():
    gens = majorana_anticommuting_set(4)
    with pytest.warns(RuntimeWarning):
        res = dla_dimension(gens, cap=10)
    assert res.exceeded


def test_orbits():
    orbit = cyclic_twirl_orbit(PauliString.from_label("XXII"))
    assert len(orbit) == 4
    assert len(cyclic_twirl_orbit(PauliString.from_label("XIXI"))) == 2
    assert len(x_type_orbits(16, 3)) == 44
    words = [w for o in x_type_orbits(6, 6) for w in o]
    assert len(words) == 2 ** 6 - 1 == len(set(words))


def test_span_dimension():
    gens = [PauliString.from_label(s) for s in ["XX", "-XX", "ZI", "II"]]
    assert span_dimension(gens) == 2


def test_empty_generators():
    with pytest.raises(ValueError):
        dla_dimension([])
