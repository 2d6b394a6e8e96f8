"""Loss, gradient dispatch and the Adam training loop for the benchmark models.

Randomness is split into independent streams derived from one integer seed:
``SeedSequence([seed, 0])`` draws the initial parameters,
``SeedSequence([seed, 1])`` the batches and ``SeedSequence([seed, 2, t])``
the gradient noise or shot sampling at step ``t``.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..ledger import ShotLedger
from ..sim import statevector as sv
from ..sim.circuit import encoded_states
from .dataset import BarsDotsDataset, generate_bars_dots
from .models import Model

LOGIT_SCALE = 6.0
MODES = ("exact", "noisy_exact", "finite_shot")


def _check_range(h) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if np.any(np.abs(h) > 1 + 1e-9):
        raise ValueError("expectation values must satisfy |<H>| <= 1")
    return h


def bce_loss(h, y) -> np.ndarray:
    """``-log P(y)`` with ``P(+1) = sigmoid(6 h)``; elementwise."""
    h = _check_range(h)
    return np.logaddexp(0.0, -LOGIT_SCALE * np.asarray(y) * h)


def bce_loss_derivative(h, y) -> np.ndarray:
    """``d bce_loss / d h``."""
    h = _check_range(h)
    y = np.asarray(y, dtype=float)
    z = -LOGIT_SCALE * y * h
    return -LOGIT_SCALE * y * np.exp(z - np.logaddexp(0.0, z))


@dataclass(frozen=True)
class GradientMode:
    """``exact``, ``noisy_exact`` with noise ``epsilon``, or ``finite_shot`` with ``shots`` per circuit.

    ``imputed_shots`` overrides the shots charged per circuit in noisy_exact
    mode, which otherwise default to ``1/epsilon**2``.
    """

    kind: str = "exact"
    epsilon: float | None = None
    shots: int | None = None
    imputed_shots: int | None = None

    def __post_init__(self):
        if self.kind not in MODES:
            raise ValueError(f"unknown gradient mode {self.kind!r}")
        if self.kind == "noisy_exact" and not (self.epsilon and self.epsilon > 0):
            raise ValueError("noisy_exact needs epsilon > 0")
        if self.kind == "finite_shot" and not (self.shots and self.shots > 0):
            raise ValueError("finite_shot needs shots > 0")

    @property
    def shots_per_circuit(self) -> int:
        """Shots charged per circuit (imputed for noisy_exact)."""
        if self.kind == "noisy_exact":
            if self.imputed_shots is not None:
                return int(self.imputed_shots)
            return int(round(1.0 / self.epsilon ** 2))
        if self.kind == "finite_shot":
            return int(self.shots)
        return 0


def batch_gradients(model: Model, X, theta, mode: GradientMode, rng: np.random.Generator | None = None):
    """Per-input ``<H>`` and its gradient under ``mode``.

    Returns ``(values, grads, ledger)`` with ``values`` of shape ``(n,)``,
    ``grads`` of shape ``(n, n_params)`` and the ledger covering all ``n``
    gradient evaluations.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    theta = np.asarray(theta, dtype=float)
    n = len(X)
    ledger = ShotLedger(f"{model.kind}:{mode.kind}", shots=mode.shots_per_circuit)
    if mode.kind == "finite_shot":
        if rng is None:
            raise ValueError("finite_shot mode needs an rng")
        grads = np.empty((n, model.n_params))
        for i, x in enumerate(X):
            grads[i], _, led = model.sampled_gradient(x, theta, mode.shots, rng)
        ledger.add_circuit(model.d, led.circuits)
        values = _sampled_values(model, X, theta, mode.shots, rng)
        ledger.extra_shots = n * mode.shots
        ledger.record(n)
        return values, grads, ledger
    values, grads = model.value_and_grad(X, theta)
    values = np.real(values)
    ledger.add_circuit(model.d, model.gradient_circuits())
    if mode.kind == "noisy_exact":
        if rng is None:
            raise ValueError("noisy_exact mode needs an rng")
        grads = grads + mode.epsilon * rng.standard_normal(grads.shape)
    ledger.record(n)
    return values, grads, ledger


def _sampled_values(model: Model, X, theta, shots: int, rng) -> np.ndarray:
    diag = sv.diagonal_of(model.observable)
    psi = model.program.apply(encoded_states(X), theta)
    out = np.empty(len(X))
    for i, state in enumerate(psi):
        counts = sv.sample_counts(state, shots, rng)
        out[i] = counts @ diag / shots
    return out


def gradient_dispatch(model: Model, x, theta, mode: GradientMode, rng=None) -> tuple[np.ndarray, ShotLedger]:
    """Gradient of ``<H>`` for a single input and the shots it costs."""
    _, grads, ledger = batch_gradients(model, np.atleast_2d(x), theta, mode, rng)
    return grads[0], ledger


class Adam:
    def __init__(self, n: int, lr: float = 0.01, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(n)
        self.v = np.zeros(n)
        self.t = 0

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad ** 2
        m_hat = self.m / (1 - self.beta1 ** self.t)
        v_hat = self.v / (1 - self.beta2 ** self.t)
        return theta - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class StepRecord:
    step: int
    loss: float
    test_accuracy: float | None
    cumulative_shots: int
    noise_seed: list[int]


@dataclass
class TrainLog:
    model: str
    mode: str
    seed: int
    records: list[StepRecord] = field(default_factory=list)
    final_accuracy: float | None = None
    final_loss: float | None = None
    theta: list[float] = field(default_factory=list)

    @property
    def losses(self) -> np.ndarray:
        return np.array([r.loss for r in self.records])

    @property
    def accuracies(self) -> np.ndarray:
        return np.array([np.nan if r.test_accuracy is None else r.test_accuracy for r in self.records])

    @property
    def cumulative_shots(self) -> np.ndarray:
        return np.array([r.cumulative_shots for r in self.records], dtype=np.int64)

    def to_jsonl(self) -> str:
        head = {"model": self.model, "mode": self.mode, "seed": self.seed}
        lines = [json.dumps({**head, **asdict(r)}, sort_keys=True) for r in self.records]
        tail = {**head, "final_accuracy": self.final_accuracy, "final_loss": self.final_loss,
                "theta": self.theta}
        lines.append(json.dumps(tail, sort_keys=True))
        return "\n".join(lines) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl())

    @classmethod
    def from_jsonl(cls, text: str) -> "TrainLog":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        tail = rows[-1]
        log = cls(tail["model"], tail["mode"], tail["seed"], final_accuracy=tail["final_accuracy"],
                  final_loss=tail["final_loss"], theta=tail["theta"])
        for r in rows[:-1]:
            log.records.append(StepRecord(r["step"], r["loss"], r["test_accuracy"],
                                          r["cumulative_shots"], r["noise_seed"]))
        return log


def accuracy(model: Model, data: BarsDotsDataset, theta) -> float:
    return float(np.mean(model.predict(data.inputs, theta) == data.labels))


def initial_parameters(n_params: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    return rng.uniform(0.0, 2 * np.pi, n_params)


def train(
    model: Model,
    train_set: BarsDotsDataset,
    test_set: BarsDotsDataset,
    steps: int,
    mode: GradientMode,
    seed: int,
    batch_size: int = 20,
    lr: float = 0.01,
    eval_every: int = 1,
    theta0: np.ndarray | None = None,
) -> TrainLog:
    """Adam on the batch-mean loss; each record is taken at the pre-update parameters.

    The logged loss is the exact batch loss; test accuracy is evaluated every
    ``eval_every`` steps (``None`` otherwise).  ``final_accuracy`` and
    ``final_loss`` are measured on the test set after the last update.
    """
    theta = initial_parameters(model.n_params, seed) if theta0 is None else np.array(theta0, float)
    batch_rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    opt = Adam(model.n_params, lr=lr)
    log = TrainLog(model.kind, mode.kind, seed)
    shots = 0
    for t in range(steps):
        idx = batch_rng.choice(len(train_set), size=batch_size, replace=False)
        X, y = train_set.inputs[idx], train_set.labels[idx]
        noise_key = [int(seed), 2, t]
        rng = np.random.default_rng(np.random.SeedSequence(noise_key))
        values, grads, ledger = batch_gradients(model, X, theta, mode, rng)
        exact_values = values if mode.kind != "finite_shot" else model.expectations(X, theta)
        loss = float(np.mean(bce_loss(exact_values, y)))
        acc = accuracy(model, test_set, theta) if t % eval_every == 0 else None
        shots += ledger.cumulative_shots
        log.records.append(StepRecord(t, loss, acc, shots, noise_key))
        dloss = bce_loss_derivative(np.clip(values, -1.0, 1.0), y)
        theta = opt.step(theta, dloss @ grads / batch_size)
    log.final_accuracy = accuracy(model, test_set, theta)
    log.final_loss = float(np.mean(bce_loss(model.expectations(test_set.inputs, theta), test_set.labels)))
    log.theta = [float(v) for v in theta]
    return log


def trial_data(d: int, seed: int, n_train: int = 1000, n_test: int = 100):
    """Training and test sets for one trial; shared by all models with the same seed."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 3]))
    return generate_bars_dots(d, n_train, rng, split="train"), generate_bars_dots(d, n_test, rng, split="test")
