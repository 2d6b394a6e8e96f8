"""Multi-trial benchmark runs and the ordering checks applied to their summaries."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .models import KINDS, ModelConfig, build_model
from .training import GradientMode, TrainLog, batch_gradients, train, trial_data


@dataclass
class BenchmarkProfile:
    d: int = 16
    trials: int = 19
    steps: int = 100
    epsilon: float = 0.1
    imputed_shots: int = 10_000
    eval_every: int = 10
    seed: int = 0
    K: int = 3
    L: int = 4
    kinds: tuple[str, ...] = KINDS

    def mode(self) -> GradientMode:
        return GradientMode("noisy_exact", epsilon=self.epsilon, imputed_shots=self.imputed_shots)

    def config(self, kind: str) -> ModelConfig:
        return ModelConfig(kind, self.d, K=self.K, L=self.L)


FULL_PROFILE = BenchmarkProfile()
CI_PROFILE = BenchmarkProfile(d=8, trials=5, steps=50)


@dataclass
class BenchmarkResult:
    profile: BenchmarkProfile
    logs: dict[str, list[TrainLog]] = field(default_factory=dict)

    def mean_accuracy(self, kind: str) -> float:
        return float(np.mean([log.final_accuracy for log in self.logs[kind]]))

    def cumulative_shots(self, kind: str) -> int:
        return int(self.logs[kind][0].records[-1].cumulative_shots)

    def summary(self) -> dict:
        out = {}
        for kind, logs in self.logs.items():
            acc = [log.final_accuracy for log in logs]
            out[kind] = {
                "mean_test_accuracy": float(np.mean(acc)),
                "std_test_accuracy": float(np.std(acc, ddof=1)) if len(acc) > 1 else 0.0,
                "cumulative_shots": self.cumulative_shots(kind),
                "final_accuracies": [float(a) for a in acc],
            }
        return out


def run_benchmark(profile: BenchmarkProfile, progress=None) -> BenchmarkResult:
    """Train every model kind on ``profile.trials`` trials.

    Trial ``t`` uses seed ``profile.seed + t`` for both its data and its
    training streams, so all models see the same data per trial.
    """
    result = BenchmarkResult(profile)
    mode = profile.mode()
    for kind in profile.kinds:
        model = build_model(profile.config(kind))
        logs = []
        for t in range(profile.trials):
            seed = profile.seed + t
            train_set, test_set = trial_data(profile.d, seed)
            logs.append(train(model, train_set, test_set, profile.steps, mode, seed,
                              eval_every=profile.eval_every))
            if progress:
                progress(kind, t, logs[-1])
        result.logs[kind] = logs
    return result


def projected_shots(profile: BenchmarkProfile, kind: str, batch_size: int = 20) -> int:
    """Cumulative shots after ``profile.steps`` steps from one step's ledger.

    The ledger does not depend on the parameters or the data, so one batch
    gradient fixes the total.
    """
    model = build_model(profile.config(kind))
    rng = np.random.default_rng(0)
    X = rng.normal(size=(batch_size, profile.d))
    _, _, ledger = batch_gradients(model, X, np.zeros(model.n_params), profile.mode(), rng)
    return profile.steps * ledger.cumulative_shots


def check_shot_ratio(shots: dict[str, int], factor: float = 50.0) -> tuple[bool, str]:
    ok = shots["B"] >= factor * shots["A"] and shots["C"] >= factor * shots["A"]
    msg = f"B/A = {shots['B'] / shots['A']:.2f}, C/A = {shots['C'] / shots['A']:.2f} (need >= {factor:g})"
    return ok, msg


def check_shot_order(shots: dict[str, int]) -> tuple[bool, str]:
    ok = shots["A"] < shots["B"] and shots["A"] < shots["C"]
    return ok, f"shots A={shots['A']:.3g}, B={shots['B']:.3g}, C={shots['C']:.3g}"


def check_accuracy_order(acc: dict[str, float], margin: float = 0.02) -> tuple[bool, str]:
    """A within ``margin`` of B and C or better, and D strictly below all others."""
    ok_a = acc["A"] >= acc["B"] - margin and acc["A"] >= acc["C"] - margin
    ok_d = all(acc["D"] < acc[k] for k in "ABC")
    msg = ", ".join(f"{k}={acc[k]:.3f}" for k in sorted(acc))
    return ok_a and ok_d, msg
