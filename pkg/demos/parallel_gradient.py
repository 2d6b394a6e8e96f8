"""Estimate a full gradient from one measured circuit and compare it with parameter shift.

Run with ``python demos/parallel_gradient.py``.
"""
import numpy as np

from commgrad.commuting import gradient_exact, gradient_sampled
from commgrad.randomspec import random_commuting_spec
from commgrad.shift import parameter_shift_gradient

rng = np.random.default_rng(0)
spec = random_commuting_spec(5, 10, rng)

exact = gradient_exact(spec)
parallel = gradient_sampled(spec, 10_000, rng)
shift = parameter_shift_gradient(spec.unitary_circuit(), spec.observable, spec.n_params, 10_000, rng,
                                 psi0=spec.initial_state())

print(f"{spec.n_params} generators on {spec.n_qubits} qubits")
print(f"commuting estimator: {parallel.ledger.circuits} circuit(s), "
      f"max error {np.max(np.abs(parallel.value - exact)):.3f}")
print(f"parameter shift:     {shift.ledger.circuits} circuit(s), "
      f"max error {np.max(np.abs(shift.value - exact)):.3f}")
