"""Circuit and shot bookkeeping for gradient estimators."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass
class ShotLedger:
    """Counts of distinct circuits and shots spent by one estimation method.

    ``circuits`` is the number of distinct circuits per gradient evaluation,
    ``shots`` the shots taken from each.  ``record`` accumulates whole
    gradient evaluations into ``cumulative_shots``.
    """

    method: str
    circuits: int = 0
    shots: int = 0
    qubits: list[int] = field(default_factory=list)
    evaluations: int = 0
    cumulative_shots: int = 0
    extra_shots: int = 0

    def add_circuit(self, n_qubits: int, count: int = 1) -> None:
        self.circuits += count
        self.qubits.extend([n_qubits] * count)

    @property
    def shots_per_gradient(self) -> int:
        return self.circuits * self.shots

    def record(self, evaluations: int = 1) -> None:
        self.evaluations += evaluations
        self.cumulative_shots += evaluations * self.shots_per_gradient

    def merge(self, other: "ShotLedger") -> None:
        """Fold another ledger's circuits into this one (same shots per circuit)."""
        if self.shots and other.shots and self.shots != other.shots:
            raise ValueError("cannot merge ledgers with different shots per circuit")
        self.shots = self.shots or other.shots
        self.circuits += other.circuits
        self.qubits.extend(other.qubits)
        self.extra_shots += other.extra_shots

    def to_dict(self) -> dict:
        d = asdict(self)
        d["shots_per_gradient"] = self.shots_per_gradient
        return d


@dataclass
class GradientReport:
    method: str
    estimate: np.ndarray
    stderr: np.ndarray
    circuits: int
    shots: int

    @classmethod
    def from_ledger(cls, estimate, stderr, ledger: ShotLedger) -> "GradientReport":
        return cls(ledger.method, np.asarray(estimate, float), np.asarray(stderr, float),
                   ledger.circuits, ledger.shots_per_gradient)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "estimate": [float(v) for v in self.estimate],
            "stderr": [float(v) for v in self.stderr],
            "circuits": int(self.circuits),
            "shots": int(self.shots),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "GradientReport":
        return cls(d["method"], np.array(d["estimate"], float), np.array(d["stderr"], float),
                   int(d["circuits"]), int(d["shots"]))
