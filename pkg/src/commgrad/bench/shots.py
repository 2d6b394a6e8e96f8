"""Closed-form circuit counts per gradient and the per-model shot table.

With ``M`` shots per circuit the shots per input gradient are ``M`` times:

* A: ``d`` (one circuit per ``Z_r`` product observable),
* B: ``d**2 (L - 1) + 3 d (L + 1) - 2``,
* C: ``56 d - 80``,
* D: ``6``.
"""
from __future__ import annotations

from .models import ModelConfig, build_model


def circuits_formula(cfg: ModelConfig) -> int:
    d = cfg.d
    if cfg.kind == "A":
        return d
    if cfg.kind == "B":
        return d * d * (cfg.L - 1) + 3 * d * (cfg.L + 1) - 2
    if cfg.kind == "C":
        return 56 * d - 80
    return 6


def shot_table(configs, shots: int = 10_000) -> list[dict]:
    """Parameters and circuits per gradient, counted from the built circuits.

    Raises ``AssertionError`` when a construction disagrees with its closed form.
    """
    rows = []
    for cfg in configs:
        model = build_model(cfg)
        circuits = model.gradient_circuits()
        expected = circuits_formula(cfg)
        if circuits != expected:
            raise AssertionError(f"model {cfg.kind}: built {circuits} circuits, formula gives {expected}")
        rows.append({
            "model": cfg.kind,
            "d": cfg.d,
            "K": cfg.K if cfg.kind == "A" else None,
            "L": cfg.L if cfg.kind == "B" else None,
            "parameters": model.n_params,
            "circuits": circuits,
            "shots_per_circuit": shots,
            "shots_per_gradient": circuits * shots,
        })
    return rows
