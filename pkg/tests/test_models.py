import numpy as np
import pytest

from commgrad.bench.models import ModelConfig, build_model, one_factorization, qcnn_layout
from commgrad.bench.shots import circuits_formula, shot_table
from commgrad.commuting import gradient_exact
from commgrad.shift import parameter_shift_gradient
from commgrad.sim import statevector as sv
from commgrad.sim.circuit import encode_data
from oracles import central_difference


def _ps_gradient(model, x, theta):
    prep = encode_data(x).apply(sv.StateVector.zero(model.d).amplitudes)
    return parameter_shift_gradient(model.circuit(theta), model.observable, model.n_params, None, psi0=prep).value


@pytest.mark.parametrize("kind,count", [("A", 44), ("B", 40), ("C", 48), ("D", 48)])
def test_parameter_counts_at_16(kind, count):
    assert build_model(ModelConfig(kind, 16)).n_params == count


@pytest.mark.parametrize("d", [4, 8])
def test_circuit_counts_match_formulas(d):
    for kind in "ABCD":
        cfg = ModelConfig(kind, d)
        assert build_model(cfg).gradient_circuits() == circuits_formula(cfg)


def test_model_b_formula_over_layers():
    for L in (1, 2, 3, 5):
        cfg = ModelConfig("B", 6, L=L)
        assert shot_table([cfg])[0]["circuits"] == 6 * 6 * (L - 1) + 3 * 6 * (L + 1) - 2


def test_config_validation():
    with pytest.raises(ValueError):
        ModelConfig("E", 4)
    with pytest.raises(ValueError):
        ModelConfig("C", 6)
    with pytest.raises(ValueError):
        ModelConfig("A", 3)
    with pytest.raises(ValueError):
        ModelConfig("A", 4, K=5)


def test_one_factorization_partitions_pairs():
    for d in (2, 4, 8, 16):
        rounds = one_factorization(d)
        assert len(rounds) == d - 1
        seen = set()
        for m in rounds:
            assert sorted(q for p in m for q in p) == list(range(d))
            seen.update(m)
        assert len(seen) == d * (d - 1) // 2


def test_qcnn_layout_counts():
    for d in (2, 4, 8, 16):
        layout = qcnn_layout(d)
        assert len(layout) == int(np.log2(d))
        assert sum(len(c) for c, _ in layout) == max(2 * d - 3, 1)
        assert sum(len(p) for _, p in layout) == d - 1
        assert layout[-1][1][0][1] == d - 1


@pytest.mark.parametrize("kind", "ABCD")
def test_engine_gradient_matches_parameter_shift_and_fd(kind):
    rng = np.random.default_rng(0)
    model = build_model(ModelConfig(kind, 4))
    x = rng.normal(size=4)
    theta = rng.uniform(0, 2 * np.pi, model.n_params)
    value, grad = model.value_and_grad(x[None], theta)
    direct = sv.expectation(model.full_circuit(x, theta).run(), model.observable)
    assert value[0] == pytest.approx(direct, abs=1e-12)
    np.testing.assert_allclose(grad[0], _ps_gradient(model, x, theta), atol=1e-9)
    fd = central_difference(lambda t: float(model.expectations(x[None], t)[0]), theta)
    np.testing.assert_allclose(grad[0], fd, atol=1e-7)


@pytest.mark.parametrize("d", [4, 6, 8])
def test_model_a_parallel_equals_parameter_shift(d):
    rng = np.random.default_rng(d)
    model = build_model(ModelConfig("A", d))
    for _ in range(3):
        x = rng.normal(size=d)
        theta = rng.uniform(0, 2 * np.pi, model.n_params)
        per_word = gradient_exact(model.commuting_spec(x, theta))
        parallel = np.bincount(model.generator_params, weights=per_word, minlength=model.n_params)
        np.testing.assert_allclose(parallel, _ps_gradient(model, x, theta), atol=1e-6)


@pytest.mark.parametrize("kind", "ABCD")
def test_sampled_gradient_within_errors(kind):
    rng = np.random.default_rng(1)
    model = build_model(ModelConfig(kind, 4))
    x = rng.normal(size=4)
    theta = rng.uniform(0, 2 * np.pi, model.n_params)
    _, exact = model.value_and_grad(x[None], theta)
    g, err, ledger = model.sampled_gradient(x, theta, 20_000, rng)
    assert ledger.circuits == model.gradient_circuits()
    assert np.all(np.abs(g - exact[0]) <= 5 * err + 1e-9)


@pytest.mark.parametrize("kind", "AB")
def test_equivariance_small(kind):
    rng = np.random.default_rng(2)
    model = build_model(ModelConfig(kind, 6))
    X = rng.normal(size=(10, 6))
    theta = rng.uniform(0, 2 * np.pi, model.n_params)
    base = model.expectations(X, theta)
    for s in range(1, 6):
        np.testing.assert_allclose(model.expectations(np.roll(X, s, axis=1), theta), base, atol=1e-10)


def test_models_c_and_d_are_not_equivariant():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(5, 4))
    for kind in "CD":
        model = build_model(ModelConfig(kind, 4))
        theta = rng.uniform(0, 2 * np.pi, model.n_params)
        assert not np.allclose(model.expectations(np.roll(X, 1, axis=1), theta), model.expectations(X, theta))


def test_model_d_groups_exact():
    rng = np.random.default_rng(4)
    model = build_model(ModelConfig("D", 4))
    assert model.gradient_circuits() == 6
    x = rng.normal(size=4)
    theta = rng.uniform(0, 2 * np.pi, model.n_params)
    g, _, _ = model.sampled_gradient(x, theta, None)
    _, exact = model.value_and_grad(x[None], theta)
    np.testing.assert_allclose(g, exact[0], atol=1e-10)


def test_commuting_spec_only_for_a():
    with pytest.raises(ValueError):
        build_model(ModelConfig("B", 4)).commuting_spec(np.zeros(4), np.zeros(6))


def test_predict_signs():
    model = build_model(ModelConfig("A", 4))
    X = np.random.default_rng(5).normal(size=(6, 4))
    pred = model.predict(X, np.zeros(model.n_params))
    assert set(np.unique(pred)) <= {-1, 1}
