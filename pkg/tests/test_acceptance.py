"""Acceptance suite: one test (and one summary line) per primary criterion.

Run ``pytest tests/test_acceptance.py -v``; the summary section at the end of
the run lists PASS/FAIL per criterion.  Set ``COMMGRAD_FULL=1`` to train the
full 16-qubit benchmark in-process when no recorded run is available.
"""
import json
import os
import time
from pathlib import Path

import numpy as np
import pytest

from commgrad.bench.experiment import (
    CI_PROFILE,
    FULL_PROFILE,
    check_accuracy_order,
    check_shot_order,
    check_shot_ratio,
    projected_shots,
    run_benchmark,
)
from commgrad.bench.models import ModelConfig, build_model
from commgrad.bench.training import GradientMode, TrainLog, train, trial_data
from commgrad.blocks import block_gradient
from commgrad.cli import config_hash, main, resolve_config
from commgrad.commuting import derivative_observable_sets, fisher_information, gradient_exact, gradient_sampled
from commgrad.lie import dla_dimension, two_block_example
from commgrad.pauli import PauliString
from commgrad.randomspec import random_block_spec, random_commuting_spec
from oracles import central_difference, commuting_cost, dense_rotation, dense_sum, expectation, qfi_dense, zero_state
from test_diagonalize import x_ansatz_violations

ROOT = Path(__file__).resolve().parents[1]
FULL_RESULTS = ROOT / "results" / "full_benchmark"


def _commuting_cost(spec):
    return commuting_cost(spec.prep.unitary(), [g.label() for g in spec.generators],
                          [(c, w.label()) for c, w in spec.observable])


def _block_cost(spec):
    V = spec.prep.unitary()
    gens = [g.label() for b in spec.blocks for g in b.generators]
    H = dense_sum([(c, w.label()) for c, w in spec.observable])

    def cost(theta):
        psi = V @ zero_state(spec.n_qubits)
        for g, t in zip(gens, theta):
            psi = dense_rotation(g, t) @ psi
        return expectation(psi, H)

    return cost


def test_criterion_1_gradient_identity(criterion):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 7))
        spec = random_commuting_spec(n, int(rng.integers(1, 13)), rng, n_terms=int(rng.integers(1, 4)))
        fd = central_difference(_commuting_cost(spec), spec.params, h=1e-5)
        worst = max(worst, float(np.max(np.abs(gradient_exact(spec) - fd))))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and elapsed <= 120
    criterion("1", ok, f"max |exact - fd| = {worst:.2e} over 100 circuits in {elapsed:.1f} s")
    assert ok


def test_criterion_2_single_circuit_parallelism(criterion):
    rng = np.random.default_rng(202)
    circuits_ok = True
    for _ in range(30):
        spec = random_commuting_spec(int(rng.integers(2, 6)), int(rng.integers(2, 10)), rng,
                                     n_terms=int(rng.integers(1, 4)))
        groups = [s for s in derivative_observable_sets(spec, (1,)) if s.entries]
        est = gradient_sampled(spec, 100, rng)
        circuits_ok &= est.ledger.circuits == len(groups)
        if len(spec.observable) == 1:
            circuits_ok &= est.ledger.circuits <= 1

    spec = random_commuting_spec(4, 8, np.random.default_rng(7))
    exact = gradient_exact(spec)
    shots = (1_000, 10_000, 100_000)
    runs = {m: np.array([gradient_sampled(spec, m, rng).value for _ in range(1000)]) for m in shots}
    var = np.array([runs[m].var(axis=0, ddof=1) for m in shots])
    live = var[0] > 1e-12
    slopes = [np.polyfit(np.log10(shots), np.log10(var[:, j]), 1)[0] for j in np.flatnonzero(live)]
    slope_ok = bool(slopes) and all(abs(s + 1) <= 0.1 for s in slopes)

    unbiased = runs[1_000][:200]
    se = unbiased.std(axis=0, ddof=1) / np.sqrt(len(unbiased))
    z = np.abs(unbiased.mean(axis=0) - exact)[live] / se[live]
    bias_ok = bool(np.all(z <= 4))
    ok = circuits_ok and slope_ok and bias_ok
    criterion("2", ok, f"circuits per group ok={circuits_ok}, slopes in [{min(slopes):.3f}, {max(slopes):.3f}], "
                       f"max bias z = {z.max():.2f}")
    assert ok


def test_criterion_3_x_ansatz_conjugation(criterion):
    start = time.perf_counter()
    bad = {n: len(x_ansatz_violations(n)) for n in range(1, 6)}
    elapsed = time.perf_counter() - start
    ok = sum(bad.values()) == 0 and elapsed <= 60
    criterion("3", ok, f"violations per N {bad} in {elapsed:.1f} s")
    assert ok


def test_criterion_4_commuting_block_estimator(criterion):
    rng = np.random.default_rng(404)
    worst_z, circuits_ok = 0.0, True
    for _ in range(50):
        n = int(rng.integers(2, 6))
        B = int(rng.integers(1, 4))
        spec = random_block_spec(n, B, rng, n_terms=1)
        est = block_gradient(spec, 100_000, rng)
        fd = central_difference(_block_cost(spec), spec.params)
        dev = np.abs(est.value - fd)
        if np.any(dev > 5 * est.stderr + 1e-8):
            worst_z = np.inf
        nz = est.stderr > 0
        if nz.any():
            worst_z = max(worst_z, float(np.max(dev[nz] / est.stderr[nz])))
        circuits_ok &= est.ledger.circuits <= 2 * spec.n_blocks - 1
        circuits_ok &= max(est.ledger.qubits, default=0) <= n + 1
    ok = worst_z <= 5 and circuits_ok
    criterion("4", ok, f"max |est - fd| / se = {worst_z:.2f}, circuit budget ok={circuits_ok}")
    assert ok


def test_criterion_5_fisher(criterion):
    rng = np.random.default_rng(505)
    worst_cov, worst_qfi, invariant, sym_psd = 0.0, 0.0, True, True
    for _ in range(8):
        spec = random_commuting_spec(int(rng.integers(1, 5)), int(rng.integers(1, 7)), rng)
        F = fisher_information(spec)
        psi0 = spec.initial_state()
        G = [g.to_matrix() for g in spec.generators]
        mean = np.array([np.real(np.vdot(psi0, g @ psi0)) for g in G])
        cov = np.array([[np.real(np.vdot(psi0, a @ b @ psi0)) for b in G] for a in G]) - np.outer(mean, mean)
        worst_cov = max(worst_cov, float(np.max(np.abs(F.entries - cov))))
        ref = (np.round(F.entries, 10) + 0.0).tobytes()
        for _ in range(10):
            other = fisher_information(spec.with_params(rng.uniform(0, 2 * np.pi, spec.n_params)))
            invariant &= (np.round(other.entries, 10) + 0.0).tobytes() == ref
        sym_psd &= F.is_symmetric() and F.is_psd()
        qfi = qfi_dense(lambda t: spec.with_params(t).output_state(), spec.params)
        worst_qfi = max(worst_qfi, float(np.max(np.abs(F.entries - qfi / 4))))
    ok = worst_cov < 1e-12 and invariant and sym_psd and worst_qfi <= 1e-6
    criterion("5", ok, f"|F - cov| = {worst_cov:.1e}, theta-invariant={invariant}, symmetric psd={sym_psd}, "
                       f"|F - QFI/4| = {worst_qfi:.1e}")
    assert ok


def test_criterion_6_dla_dimensions(criterion):
    dims = [dla_dimension([PauliString.from_label("X"), PauliString.from_label("Y")]).dimension]
    dims += [dla_dimension([g for b in two_block_example(n) for g in b]).dimension for n in (2, 3, 4)]
    ok = dims == [3, 6, 12, 24]
    criterion("6", ok, f"dimensions {dims}")
    assert ok


def test_criterion_7_table_counts(criterion, tmp_path, capsys):
    rc = main(["shots", "--config", str(ROOT / "configs" / "shot_counts.json"), "--out", str(tmp_path)])
    capsys.readouterr()
    rows = json.loads((tmp_path / "shots.json").read_text())["result"]["rows"]
    params = [r["parameters"] for r in rows]
    circuits = [r["circuits"] for r in rows]
    ok = rc == 0 and params == [44, 40, 48, 48] and circuits == [16, 1006, 816, 6]
    criterion("7", ok, f"parameters {params}, circuits {circuits}")
    assert ok


def test_criterion_8_ci_profile(criterion):
    start = time.perf_counter()
    result = run_benchmark(CI_PROFILE)
    elapsed = time.perf_counter() - start
    acc = {k: result.mean_accuracy(k) for k in "ABCD"}
    shots = {k: result.cumulative_shots(k) for k in "ABCD"}
    acc_ok, acc_msg = check_accuracy_order(acc)
    shot_ok, shot_msg = check_shot_order(shots)
    strict = acc["A"] >= acc["B"] and acc["A"] >= acc["C"]
    ok = acc_ok and shot_ok and elapsed <= 600
    criterion("8 (CI profile)", ok, f"{acc_msg}; {shot_msg}; strict A>=B,C {strict}; {elapsed:.0f} s")
    assert ok


def test_criterion_8a_full_scale_shot_ratio(criterion):
    shots = {k: projected_shots(FULL_PROFILE, k) for k in "ABC"}
    ok, msg = check_shot_ratio(shots)
    criterion("8a (d=16, 100 steps)", ok, msg)
    assert ok


@pytest.mark.xfail(strict=True, reason="at d=8 the circuit ratios are 38.75 and 46; the 50x factor is a d=16 property")
def test_criterion_8a_ratio_at_ci_scale(criterion):
    shots = {k: projected_shots(CI_PROFILE, k) for k in "ABC"}
    ok, msg = check_shot_ratio(shots)
    criterion("8a (d=8, informational)", ok, msg)
    assert ok


def _full_record():
    cfg = resolve_config(json.loads((ROOT / "configs" / "full_benchmark.json").read_text()), "train")
    path = FULL_RESULTS / "train.json"
    if not path.exists():
        return cfg, None
    record = json.loads(path.read_text())
    return cfg, record if record["config_hash"] == config_hash(cfg) else None


def test_full_config_matches_profile():
    cfg, _ = _full_record()
    p = cfg["params"]
    assert cfg["trials"] == FULL_PROFILE.trials and p["steps"] == FULL_PROFILE.steps
    assert p["mode"] == {"kind": "noisy_exact", "epsilon": FULL_PROFILE.epsilon,
                         "imputed_shots": FULL_PROFILE.imputed_shots}
    assert [m["d"] for m in p["models"]] == [FULL_PROFILE.d] * 4


def test_criterion_8_full_benchmark(criterion):
    cfg, record = _full_record()
    if record is not None:
        models = record["result"]["models"]
        acc = {k: models[k]["mean_test_accuracy"] for k in "ABCD"}
        shots = {k: models[k]["cumulative_shots"][0] for k in "ABCD"}
        jsonl = (FULL_RESULTS / f"train_A_d{FULL_PROFILE.d}_seed{cfg['seed']}.jsonl").read_text()
        recorded = TrainLog.from_jsonl("\n".join(l for l in jsonl.splitlines() if not l.startswith("#")))
        train_set, test_set = trial_data(FULL_PROFILE.d, cfg["seed"])
        rerun = train(build_model(FULL_PROFILE.config("A")), train_set, test_set, 3, FULL_PROFILE.mode(),
                      cfg["seed"], eval_every=FULL_PROFILE.eval_every)
        if rerun.records != recorded.records[:3]:
            pytest.fail("recorded full benchmark does not reproduce")
        source = "recorded run in results/full_benchmark"
    elif os.environ.get("COMMGRAD_FULL") == "1":
        result = run_benchmark(FULL_PROFILE)
        acc = {k: result.mean_accuracy(k) for k in "ABCD"}
        shots = {k: result.cumulative_shots(k) for k in "ABCD"}
        source = "in-process run"
    else:
        pytest.skip("no recorded full benchmark; set COMMGRAD_FULL=1 to train it")
    ratio_ok, ratio_msg = check_shot_ratio(shots)
    acc_ok, acc_msg = check_accuracy_order(acc)
    strict = acc["A"] >= acc["B"] and acc["A"] >= acc["C"]
    ok = ratio_ok and acc_ok
    criterion("8 (full profile)", ok, f"{source}: {acc_msg}; strict A>=B,C {strict}; {ratio_msg}")
    assert ok


def test_criterion_9_finite_shot_band(criterion):
    model = build_model(ModelConfig("A", 6, K=6))
    exact, sampled = [], []
    for seed in range(10):
        train_set, test_set = trial_data(6, seed)
        exact.append(train(model, train_set, test_set, 100, GradientMode("exact"), seed))
        sampled.append(train(model, train_set, test_set, 100, GradientMode("finite_shot", shots=500), seed))
    parts, ok = [], True
    for name in ("losses", "accuracies"):
        E = np.array([getattr(log, name) for log in exact])
        S = np.array([getattr(log, name) for log in sampled])
        mu, sd = E.mean(axis=0), E.std(axis=0, ddof=1)
        inside = np.abs(S.mean(axis=0) - mu) <= 3 * sd
        per_seed = float(np.mean(np.abs(S - mu) <= 3 * sd))
        ok &= bool(inside.all())
        parts.append(f"{name}: mean curve inside at {inside.sum()}/{len(inside)} steps "
                     f"(single seeds {100 * per_seed:.1f}%)")
    criterion("9", ok, "; ".join(parts))
    assert ok


def test_criterion_10_equivariance(criterion):
    rng = np.random.default_rng(1010)
    d = 16
    worst, same_labels = 0.0, True
    for kind in "AB":
        model = build_model(ModelConfig(kind, d))
        X = rng.normal(size=(50, d))
        theta = rng.uniform(0, 2 * np.pi, model.n_params)
        base = model.expectations(X, theta)
        labels = model.predict(X, theta)
        for s in range(1, d):
            shifted = np.roll(X, s, axis=1)
            worst = max(worst, float(np.max(np.abs(model.expectations(shifted, theta) - base))))
            same_labels &= np.array_equal(model.predict(shifted, theta), labels)
    ok = worst <= 1e-8 and same_labels
    criterion("10", ok, f"max |<H>(shifted) - <H>| = {worst:.1e} over all {d} shifts, labels unchanged={same_labels}")
    assert ok
