"""Command-line runner: ``commgrad {gradcheck,fisher,dla,shots,train}``.

Each task reads an optional JSON config (validated against :data:`SCHEMA`),
takes all randomness from its seeds and writes a JSON summary (plus CSV
tables) into ``--out``.  Every record carries the sha256 of the canonical
config and the seeds used.  The exit status is 1 when a checked invariant
fails and 2 for config errors.
"""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import blocks as blk
from .bench.experiment import check_accuracy_order, check_shot_order
from .bench.models import ModelConfig, build_model
from .bench.shots import circuits_formula, shot_table
from .bench.training import GradientMode, train, trial_data
from .commuting import FisherMatrix, fisher_information, gradient_exact, gradient_sampled
from .lie import dla_dimension, two_block_example
from .pauli import PauliString
from .randomspec import random_block_spec, random_commuting_spec
from .shift import parameter_shift_gradient
from .sim import statevector as sv
from .sim.circuit import encode_data

SCHEMA_VERSION = 1
TASKS = ("gradcheck", "fisher", "dla", "shots", "train")

_MODEL = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["A", "B", "C", "D"]},
        "d": {"type": "integer", "minimum": 2},
        "K": {"type": "integer", "minimum": 1},
        "L": {"type": "integer", "minimum": 1},
    },
}
_CIRCUIT = {
    "oneOf": [
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["type"],
            "properties": {
                "type": {"const": "random_commuting"},
                "n_qubits": {"type": "integer", "minimum": 1, "maximum": 12},
                "n_generators": {"type": "integer", "minimum": 1},
                "n_terms": {"type": "integer", "minimum": 1},
            },
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["type"],
            "properties": {
                "type": {"const": "random_block"},
                "n_qubits": {"type": "integer", "minimum": 1, "maximum": 10},
                "n_blocks": {"type": "integer", "minimum": 1},
                "max_block_size": {"type": "integer", "minimum": 1},
                "n_terms": {"type": "integer", "minimum": 1},
            },
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["type", "path"],
            "properties": {"type": {"const": "block_file"}, "path": {"type": "string"}},
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["type", "model"],
            "properties": {"type": {"const": "model"}, "model": _MODEL},
        },
    ]
}
_MODE = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["exact", "noisy_exact", "finite_shot"]},
        "epsilon": {"type": "number", "exclusiveMinimum": 0},
        "shots": {"type": "integer", "minimum": 1},
        "imputed_shots": {"type": "integer", "minimum": 1},
    },
}
_SHOTS = {"type": ["integer", "null"], "minimum": 1}

_PARAMS = {
    "gradcheck": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "circuit": _CIRCUIT,
            "shots": _SHOTS,
            "fd_step": {"type": "number", "exclusiveMinimum": 0},
            "tolerance": {"type": "number", "exclusiveMinimum": 0},
        },
    },
    "fisher": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "circuit": _CIRCUIT,
            "shots": _SHOTS,
            "n_theta": {"type": "integer", "minimum": 1},
            "fd_step": {"type": "number", "exclusiveMinimum": 0},
            "tolerance": {"type": "number", "exclusiveMinimum": 0},
        },
    },
    "dla": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "example": {"enum": ["single_qubit_xy", "two_block", "custom"]},
            "n_qubits": {"type": "integer", "minimum": 1, "maximum": 8},
            "generators": {"type": "array", "items": {"type": "string", "pattern": "^[+-]?[IXYZ]+$"}},
            "cap": {"type": "integer", "minimum": 1},
        },
    },
    "shots": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "models": {"type": "array", "items": _MODEL, "minItems": 1},
            "shots_per_circuit": {"type": "integer", "minimum": 1},
        },
    },
    "train": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "models": {"type": "array", "items": _MODEL, "minItems": 1},
            "mode": _MODE,
            "steps": {"type": "integer", "minimum": 1},
            "batch_size": {"type": "integer", "minimum": 1},
            "lr": {"type": "number", "exclusiveMinimum": 0},
            "eval_every": {"type": "integer", "minimum": 1},
            "n_train": {"type": "integer", "minimum": 1},
            "n_test": {"type": "integer", "minimum": 1},
        },
    },
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "task"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "task": {"enum": list(TASKS)},
        "seed": {"type": "integer", "minimum": 0},
        "trials": {"type": "integer", "minimum": 1},
        "params": {"type": "object"},
    },
    "allOf": [
        {"if": {"properties": {"task": {"const": t}}}, "then": {"properties": {"params": _PARAMS[t]}}}
        for t in TASKS
    ],
}

DEFAULT_PARAMS = {
    "gradcheck": {
        "circuit": {"type": "random_commuting", "n_qubits": 4, "n_generators": 6, "n_terms": 1},
        "shots": None,
        "fd_step": 1e-5,
        "tolerance": 1e-6,
    },
    "fisher": {
        "circuit": {"type": "random_commuting", "n_qubits": 4, "n_generators": 6, "n_terms": 1},
        "shots": None,
        "n_theta": 10,
        "fd_step": 1e-5,
        "tolerance": 1e-6,
    },
    "dla": {"example": "two_block", "n_qubits": 2, "generators": [], "cap": 4096},
    "shots": {
        "models": [{"kind": "A", "d": 16, "K": 3}, {"kind": "B", "d": 16, "L": 4},
                   {"kind": "C", "d": 16}, {"kind": "D", "d": 16}],
        "shots_per_circuit": 10_000,
    },
    "train": {
        "models": [{"kind": "A", "d": 8}],
        "mode": {"kind": "noisy_exact", "epsilon": 0.1, "imputed_shots": 10_000},
        "steps": 50,
        "batch_size": 20,
        "lr": 0.01,
        "eval_every": 10,
        "n_train": 1000,
        "n_test": 100,
    },
}


class ConfigError(ValueError):
    pass


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def validate_config(config: dict) -> None:
    try:
        jsonschema.validate(config, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {path}: {exc.message}") from None


def resolve_config(config: dict | None, task: str, seed: int | None = None, trials: int | None = None) -> dict:
    """Validate ``config`` and fill defaults; command-line overrides win."""
    config = copy.deepcopy(config) if config is not None else {"schema_version": SCHEMA_VERSION, "task": task}
    validate_config(config)
    if config["task"] != task:
        raise ConfigError(f"config is for task {config['task']!r}, not {task!r}")
    params = copy.deepcopy(DEFAULT_PARAMS[task])
    params.update(config.get("params", {}))
    resolved = {
        "schema_version": SCHEMA_VERSION,
        "task": task,
        "seed": config.get("seed", 0) if seed is None else seed,
        "trials": config.get("trials", 1) if trials is None else trials,
        "params": params,
    }
    validate_config(resolved)
    return resolved


def _model_config(m: dict) -> ModelConfig:
    return ModelConfig(m["kind"], m.get("d", 16), K=m.get("K", 3), L=m.get("L", 4))


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *key]))


# --------------------------------------------------------------------------
# gradcheck

def _finite_difference(f, theta: np.ndarray, h: float) -> np.ndarray:
    out = np.empty(len(theta))
    for j in range(len(theta)):
        e = np.zeros(len(theta))
        e[j] = h
        out[j] = (f(theta + e) - f(theta - e)) / (2 * h)
    return out


def _gradcheck_instance(circ: dict, rng: np.random.Generator, shots, fd_step: float) -> dict:
    """Columns ``parallel``, ``parameter_shift`` and ``finite_difference`` (+ sampled)."""
    kind = circ["type"]
    cols: dict[str, np.ndarray] = {}
    sampled = None
    if kind == "random_commuting":
        spec = random_commuting_spec(circ.get("n_qubits", 4), circ.get("n_generators", 6), rng,
                                     n_terms=circ.get("n_terms", 1))
        cols["parallel"] = gradient_exact(spec)
        cols["parameter_shift"] = parameter_shift_gradient(spec.circuit(), spec.observable, spec.n_params, None).value
        cols["finite_difference"] = _finite_difference(lambda t: spec.with_params(t).cost(), spec.params, fd_step)
        if shots:
            sampled = gradient_sampled(spec, shots, rng)
    elif kind in ("random_block", "block_file"):
        if kind == "random_block":
            spec = random_block_spec(circ.get("n_qubits", 3), circ.get("n_blocks", 2), rng,
                                     max_block_size=circ.get("max_block_size", 3), n_terms=circ.get("n_terms", 1))
        else:
            spec = blk.from_text(Path(circ["path"]).read_text())
        cols["parallel"] = blk.block_gradient(spec, None).value
        cols["parameter_shift"] = parameter_shift_gradient(spec.circuit(), spec.observable, spec.n_params, None).value
        cols["finite_difference"] = _finite_difference(lambda t: spec.with_params(t).cost(), spec.params, fd_step)
        if shots:
            sampled = blk.block_gradient(spec, shots, rng)
    else:
        model = build_model(_model_config(circ["model"]))
        x = rng.normal(size=model.d)
        theta = rng.uniform(0, 2 * np.pi, model.n_params)
        _, g = model.value_and_grad(x[None], theta)
        cols["parallel"] = g[0]
        prep = encode_data(x).apply(sv.StateVector.zero(model.d).amplitudes)
        cols["parameter_shift"] = parameter_shift_gradient(model.circuit(theta), model.observable, model.n_params,
                                                           None, psi0=prep).value
        cols["finite_difference"] = _finite_difference(lambda t: float(model.expectations(x[None], t)[0]),
                                                       theta, fd_step)
        if shots:
            sampled = model.sampled_gradient(x, theta, shots, rng)
    out = dict(cols)
    if sampled is not None:
        value, stderr, ledger = sampled
        out["sampled"] = value
        out["sampled_stderr"] = stderr
        out["_circuits"] = ledger.circuits
    return out


def run_gradcheck(cfg: dict) -> tuple[dict, dict[str, str], bool]:
    p = cfg["params"]
    tol = p["tolerance"]
    rows, trials, ok = [], [], True
    for t in range(cfg["trials"]):
        cols = _gradcheck_instance(p["circuit"], _rng(cfg["seed"], t), p["shots"], p["fd_step"])
        dev_fd = float(np.max(np.abs(cols["parallel"] - cols["finite_difference"]), initial=0.0))
        dev_ps = float(np.max(np.abs(cols["parallel"] - cols["parameter_shift"]), initial=0.0))
        passed = dev_fd <= tol and dev_ps <= tol
        ok &= passed
        rec = {"trial": t, "n_params": len(cols["parallel"]), "max_deviation_fd": dev_fd,
               "max_deviation_shift": dev_ps, "passed": passed}
        if "sampled" in cols:
            z = np.abs(cols["sampled"] - cols["parallel"]) / np.maximum(cols["sampled_stderr"], 1e-300)
            rec["max_sampled_z"] = float(np.max(z, initial=0.0))
            rec["sampled_circuits"] = int(cols["_circuits"])
        trials.append(rec)
        for j in range(len(cols["parallel"])):
            row = {"trial": t, "param": j}
            for name in ("parallel", "parameter_shift", "finite_difference", "sampled", "sampled_stderr"):
                if name in cols:
                    row[name] = float(cols[name][j])
            rows.append(row)
    summary = {
        "trials": trials,
        "max_deviation_fd": max(r["max_deviation_fd"] for r in trials),
        "max_deviation_shift": max(r["max_deviation_shift"] for r in trials),
        "tolerance": tol,
        "passed": bool(ok),
    }
    return summary, {"gradcheck_table.csv": _csv(rows)}, bool(ok)


# --------------------------------------------------------------------------
# fisher

def qfi_from_states(spec, h: float = 1e-5) -> np.ndarray:
    """Quantum Fisher information ``4 Re(<d_j psi|d_k psi> - <d_j psi|psi><psi|d_k psi>)`` by central differences."""
    psi = spec.output_state()
    derivs = []
    for j in range(spec.n_params):
        e = np.zeros(spec.n_params)
        e[j] = h
        plus = spec.with_params(spec.params + e).output_state()
        minus = spec.with_params(spec.params - e).output_state()
        derivs.append((plus - minus) / (2 * h))
    D = np.array(derivs)
    ov = D.conj() @ D.T
    proj = D.conj() @ psi
    return 4 * np.real(ov - np.outer(proj, proj.conj()))


def run_fisher(cfg: dict) -> tuple[dict, dict[str, str], bool]:
    p = cfg["params"]
    if p["circuit"]["type"] != "random_commuting":
        raise ConfigError("fisher needs a random_commuting circuit")
    trials, ok = [], True
    for t in range(cfg["trials"]):
        rng = _rng(cfg["seed"], t)
        c = p["circuit"]
        spec = random_commuting_spec(c.get("n_qubits", 4), c.get("n_generators", 6), rng, n_terms=c.get("n_terms", 1))
        F = fisher_information(spec)
        rounded = [np.round(fisher_information(spec.with_params(rng.uniform(0, 2 * np.pi, spec.n_params))).entries, 10)
                   for _ in range(p["n_theta"])]
        invariant = all(np.array_equal(r, np.round(F.entries, 10)) for r in rounded)
        qfi_dev = float(np.max(np.abs(F.entries - qfi_from_states(spec, p["fd_step"]) / 4)))
        rec = {
            "trial": t,
            "fisher": F.entries.tolist(),
            "symmetric": F.is_symmetric(),
            "psd": F.is_psd(),
            "theta_invariant": bool(invariant),
            "max_deviation_qfi": qfi_dev,
        }
        if p["shots"]:
            Fs: FisherMatrix = fisher_information(spec, p["shots"], rng)
            rec["sampled_max_deviation"] = float(np.max(np.abs(Fs.entries - F.entries)))
            rec["sampled_circuits"] = Fs.ledger.circuits
        rec["passed"] = bool(rec["symmetric"] and rec["psd"] and invariant and qfi_dev <= p["tolerance"])
        ok &= rec["passed"]
        trials.append(rec)
    return {"trials": trials, "passed": bool(ok)}, {}, bool(ok)


# --------------------------------------------------------------------------
# dla

def _dla_generators(p: dict) -> tuple[list[PauliString], int | None]:
    n = p["n_qubits"]
    if p["example"] == "single_qubit_xy":
        return [PauliString.from_label("X"), PauliString.from_label("Y")], 3
    if p["example"] == "two_block":
        return [g for b in two_block_example(n) for g in b], 3 * 2 ** n // 2
    if not p["generators"]:
        raise ConfigError("custom dla needs a generator list")
    return [PauliString.from_label(s) for s in p["generators"]], None


def run_dla(cfg: dict) -> tuple[dict, dict[str, str], bool]:
    p = cfg["params"]
    gens, expected = _dla_generators(p)
    res = dla_dimension(gens, cap=p["cap"])
    ok = expected is None or res.dimension == expected
    summary = {
        "example": p["example"],
        "n_qubits": gens[0].n_qubits,
        "generators": [g.label() for g in gens],
        "dimension": res.dimension,
        "exceeded_cap": res.exceeded,
        "expected": expected,
        "basis": [w.label() for w in res.basis],
        "passed": bool(ok),
    }
    return summary, {}, bool(ok)


# --------------------------------------------------------------------------
# shots

def run_shots(cfg: dict) -> tuple[dict, dict[str, str], bool]:
    p = cfg["params"]
    configs = [_model_config(m) for m in p["models"]]
    try:
        rows = shot_table(configs, p["shots_per_circuit"])
        ok = True
    except AssertionError as exc:
        return {"error": str(exc), "passed": False}, {}, False
    for r, c in zip(rows, configs):
        r["formula_circuits"] = circuits_formula(c)
    return {"rows": rows, "passed": ok}, {"shots_table.csv": _csv(rows)}, ok


# --------------------------------------------------------------------------
# train

def run_train(cfg: dict, progress=None) -> tuple[dict, dict[str, str], bool]:
    p = cfg["params"]
    m = p["mode"]
    mode = GradientMode(m["kind"], epsilon=m.get("epsilon"), shots=m.get("shots"), imputed_shots=m.get("imputed_shots"))
    files: dict[str, str] = {}
    models_out = {}
    ok = True
    for mcfg in p["models"]:
        model = build_model(_model_config(mcfg))
        finals, shots = [], []
        for t in range(cfg["trials"]):
            seed = cfg["seed"] + t
            train_set, test_set = trial_data(model.d, seed, p["n_train"], p["n_test"])
            log = train(model, train_set, test_set, p["steps"], mode, seed, batch_size=p["batch_size"],
                        lr=p["lr"], eval_every=p["eval_every"])
            cum = log.cumulative_shots
            ok &= bool(np.all(np.diff(cum) >= 0))
            finals.append(log.final_accuracy)
            shots.append(int(cum[-1]))
            tag = f"{model.kind}_d{model.d}_seed{seed}"
            files[f"train_{tag}.jsonl"] = log.to_jsonl()
            files[f"curve_{tag}.csv"] = _csv([
                {"step": r.step, "cumulative_shots": r.cumulative_shots, "batch_loss": r.loss,
                 "test_accuracy": "" if r.test_accuracy is None else r.test_accuracy}
                for r in log.records
            ])
            if progress:
                progress(model.kind, t, log)
        models_out[model.kind] = {
            "config": mcfg,
            "n_params": model.n_params,
            "circuits_per_gradient": model.gradient_circuits(),
            "final_accuracies": finals,
            "mean_test_accuracy": float(np.mean(finals)),
            "cumulative_shots": shots,
        }
    summary = {"models": models_out, "mode": m, "steps": p["steps"], "passed": bool(ok)}
    kinds = set(models_out)
    if {"A", "B", "C", "D"} <= kinds:
        acc = {k: models_out[k]["mean_test_accuracy"] for k in "ABCD"}
        sh = {k: models_out[k]["cumulative_shots"][0] for k in "ABCD"}
        summary["checks"] = {
            "shot_ratio_B_over_A": sh["B"] / sh["A"],
            "shot_ratio_C_over_A": sh["C"] / sh["A"],
            "shot_order": check_shot_order(sh)[0],
            "accuracy_order": check_accuracy_order(acc)[0],
        }
    return summary, files, bool(ok)


# --------------------------------------------------------------------------

def _csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    fields = list(rows[0])
    for r in rows[1:]:
        fields.extend(k for k in r if k not in fields)
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


RUNNERS = {"gradcheck": run_gradcheck, "fisher": run_fisher, "dla": run_dla, "shots": run_shots, "train": run_train}


def _progress(kind: str, trial: int, log) -> None:
    print(f"model {kind} trial {trial}: final test accuracy {log.final_accuracy:.3f}", file=sys.stderr, flush=True)


def run(config: dict, out_dir: str | Path | None = None, verbose: bool = False) -> tuple[int, dict]:
    """Execute a resolved config; write artifacts to ``out_dir`` when given."""
    if config["task"] == "train":
        summary, files, ok = run_train(config, _progress if verbose else None)
    else:
        summary, files, ok = RUNNERS[config["task"]](config)
    record = {
        "task": config["task"],
        "config_hash": config_hash(config),
        "seeds": {"seed": config["seed"], "trials": config["trials"]},
        "config": config,
        "result": summary,
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{config['task']}.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
        stamp = f"# config_hash={record['config_hash']} seed={config['seed']} trials={config['trials']}\n"
        for name, text in files.items():
            (out / name).write_text(stamp + text)
    return (0 if ok else 1), record


def _headline(record: dict) -> str:
    res = record["result"]
    task = record["task"]
    if task == "shots" and "rows" in res:
        return "\n".join(f"model {r['model']}: parameters={r['parameters']} circuits={r['circuits']}" for r in res["rows"])
    if task == "dla":
        return f"dimension={res['dimension']}"
    if task == "gradcheck":
        return f"max deviation fd={res['max_deviation_fd']:.3e} shift={res['max_deviation_shift']:.3e}"
    if task == "fisher":
        return "passed" if res["passed"] else "failed"
    if task == "train":
        return "\n".join(f"model {k}: mean test accuracy={v['mean_test_accuracy']:.3f} "
                         f"cumulative shots={v['cumulative_shots'][0]}" for k, v in res["models"].items())
    return json.dumps(res)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="commgrad", description=__doc__.splitlines()[0])
    parser.add_argument("task", choices=TASKS)
    parser.add_argument("--config", type=Path, help="JSON experiment config")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    parser.add_argument("--trials", type=int, help="override the number of trials")
    args = parser.parse_args(argv)
    try:
        raw = json.loads(args.config.read_text()) if args.config else None
        config = resolve_config(raw, args.task, args.seed, args.trials)
    except (ConfigError, json.JSONDecodeError, OSError) as exc:
        print(f"commgrad: {exc}", file=sys.stderr)
        return 2
    try:
        status, record = run(config, args.out, verbose=True)
    except ConfigError as exc:
        print(f"commgrad: {exc}", file=sys.stderr)
        return 2
    print(_headline(record))
    if status:
        print("commgrad: invariant check failed", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
