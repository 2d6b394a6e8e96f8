"""Train all four models on an 8-qubit bars-and-dots problem with noisy gradients.

Run with ``python demos/train_bars_dots.py`` (about ten seconds).
"""
from commgrad.bench.experiment import CI_PROFILE, check_accuracy_order, run_benchmark

result = run_benchmark(CI_PROFILE)
summary = result.summary()
for kind, s in summary.items():
    print(f"model {kind}: accuracy {s['mean_test_accuracy']:.3f} +- {s['std_test_accuracy']:.3f}, "
          f"cumulative shots {s['cumulative_shots']:.2e}")
ok, msg = check_accuracy_order({k: s["mean_test_accuracy"] for k, s in summary.items()})
print("accuracy ordering holds" if ok else "accuracy ordering violated", f"({msg})")
