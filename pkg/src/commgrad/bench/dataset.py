"""Bars-and-dots data: noisy cyclic bars versus alternating dots."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

BAR, DOTS = 1, -1


def bar_pattern(d: int, offset: int) -> np.ndarray:
    """``floor(d/2)`` consecutive +1 entries (cyclically) starting at ``offset``, rest -1."""
    v = -np.ones(d)
    v[(offset + np.arange(d // 2)) % d] = 1.0
    return v


def dots_pattern(d: int, phase: int) -> np.ndarray:
    """Alternating +-1, starting with +1 when ``phase`` is 0."""
    return np.where((np.arange(d) + phase) % 2 == 0, 1.0, -1.0)


def pattern_label(v: np.ndarray) -> int:
    """Label of a noiseless pattern, or raise if it is neither class."""
    v = np.asarray(v)
    d = v.size
    if any(np.array_equal(v, bar_pattern(d, k)) for k in range(d)):
        return BAR
    if any(np.array_equal(v, dots_pattern(d, k)) for k in range(2)):
        return DOTS
    raise ValueError("not a bars-and-dots pattern")


@dataclass
class BarsDotsDataset:
    d: int
    inputs: np.ndarray  # (n, d)
    labels: np.ndarray  # (n,) of +-1
    split: str = "train"
    patterns: np.ndarray | None = None  # pre-noise vectors

    def __len__(self) -> int:
        return len(self.labels)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{r}" for r in range(self.d)] + ["label"])
            for x, y in zip(self.inputs, self.labels):
                w.writerow([repr(float(v)) for v in x] + [int(y)])

    @classmethod
    def from_csv(cls, path: str | Path, split: str = "train") -> "BarsDotsDataset":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        body = rows[1:]
        X = np.array([[float(v) for v in r[:-1]] for r in body])
        y = np.array([int(r[-1]) for r in body])
        return cls(X.shape[1], X, y, split)


def generate_bars_dots(
    d: int,
    n_samples: int,
    rng: np.random.Generator,
    noise_std: float = 1.0,
    split: str = "train",
) -> BarsDotsDataset:
    """Balanced, shuffled sample with uniform bar offsets and dots phases."""
    if d < 2 or d % 2:
        raise ValueError("d must be an even integer >= 2")
    labels = np.where(np.arange(n_samples) % 2 == 0, BAR, DOTS)
    rng.shuffle(labels)
    patterns = np.empty((n_samples, d))
    for i, y in enumerate(labels):
        if y == BAR:
            patterns[i] = bar_pattern(d, int(rng.integers(d)))
        else:
            patterns[i] = dots_pattern(d, int(rng.integers(2)))
    X = patterns + noise_std * rng.standard_normal((n_samples, d))
    return BarsDotsDataset(d, X, labels, split, patterns)
