"""Run configuration files: strict JSON, one file per run.

Every key is checked against a schema; unknown keys are rejected and each
diagnostic names the offending key. Defaults:

* ``T0 = 10 K``, ``T_RL_max = I // 5``
* ``variation``: ``eta_c=15``, ``eta_m=20``, ``p_c=1``, ``p_var=0.5``, ``p_m=1/K``
* ``reinforce=true``, ``stop_on_stationarity=true``, ``algo="sbd"``, ``seed=0``
* ``surrogate``: ``refresh_every=50``, ``n_starts=8``, ``evals_per_start=100``,
  ``max_fit_points=200``
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

import jsonschema

from .dominance import Bounds
from .engine import RunConfig, SurrogateOptions
from .evaluators import DEFAULT_TIMEOUT, Evaluator, ExternalEvaluator
from .problems import AntennaThresholds, get_problem
from .variation import VariationParams


class ConfigError(ValueError):
    """Invalid run configuration."""


_POS_INT = {"type": "integer", "minimum": 1}
_POS_NUM = {"type": "number", "exclusiveMinimum": 0}
_PROB = {"type": "number", "minimum": 0, "maximum": 1}
_NUM_OR_LIST = {
    "oneOf": [_POS_NUM, {"type": "array", "items": _POS_NUM, "minItems": 1}],
}

_PROBLEM_SCHEMA = {
    "type": "object",
    "required": ["name"],
    "oneOf": [
        {
            "properties": {
                "name": {"const": "dtlz1"},
                "K": _POS_INT,
                "Q": {"enum": [2, 3]},
            },
            "required": ["name", "K", "Q"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "name": {"const": "antenna_proxy"},
                "thresholds": {
                    "type": "object",
                    "properties": {
                        "f_min": _POS_NUM,
                        "f_max": _POS_NUM,
                        "B": _POS_INT,
                        "s11_th": {"type": "number"},
                        "sll_th": {"type": "number"},
                        "bdd_th": _POS_NUM,
                    },
                    "additionalProperties": False,
                },
            },
            "required": ["name"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "name": {"const": "external"},
                "command": {
                    "oneOf": [
                        {"type": "string", "minLength": 1},
                        {"type": "array", "items": {"type": "string"}, "minItems": 1},
                    ]
                },
                "K": _POS_INT,
                "Q": {"type": "integer", "minimum": 2},
                "lower": {"type": "array", "items": {"type": "number"}},
                "upper": {"type": "array", "items": {"type": "number"}},
                "timeout": _POS_NUM,
            },
            "required": ["name", "command", "K", "Q"],
            "additionalProperties": False,
        },
    ],
}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["problem", "I", "P", "W", "gamma", "eps"],
    "additionalProperties": False,
    "properties": {
        "problem": _PROBLEM_SCHEMA,
        "algo": {"enum": ["sbd", "std"]},
        "seed": {"type": "integer", "minimum": 0},
        "I": _POS_INT,
        "P": {"type": "integer", "minimum": 2},
        "W": _POS_INT,
        "gamma": _POS_NUM,
        "eps": _NUM_OR_LIST,
        "T0": {"type": "integer", "minimum": 2},
        "T_RL_max": {"type": "integer", "minimum": 0},
        "zeta": {"type": "array", "items": {"type": "number"}, "minItems": 2},
        "reinforce": {"type": "boolean"},
        "stop_on_stationarity": {"type": "boolean"},
        "variation": {
            "type": "object",
            "properties": {
                "eta_c": _POS_NUM,
                "eta_m": _POS_NUM,
                "p_c": _PROB,
                "p_var": _PROB,
                "p_m": {"oneOf": [_PROB, {"type": "null"}]},
            },
            "additionalProperties": False,
        },
        "surrogate": {
            "type": "object",
            "properties": {
                "refresh_every": _POS_INT,
                "n_starts": _POS_INT,
                "evals_per_start": _POS_INT,
                "max_fit_points": {"type": "integer", "minimum": 2},
            },
            "additionalProperties": False,
        },
    },
}


@dataclass(frozen=True)
class RunSpec:
    config: RunConfig
    problem: dict

    def make_evaluator(self) -> Evaluator:
        return make_evaluator(self.problem)

    def to_dict(self) -> dict:
        cfg = self.config
        out = {
            "problem": self.problem,
            "algo": cfg.algo,
            "seed": cfg.seed,
            "I": cfg.I,
            "P": cfg.P,
            "W": cfg.W,
            "gamma": cfg.gamma,
            "eps": list(cfg.eps) if isinstance(cfg.eps, tuple) else cfg.eps,
            "reinforce": cfg.reinforce,
            "stop_on_stationarity": cfg.stop_on_stationarity,
            "variation": asdict(cfg.variation),
            "surrogate": asdict(cfg.surrogate),
        }
        for key in ("T0", "T_RL_max"):
            if getattr(cfg, key) is not None:
                out[key] = getattr(cfg, key)
        if cfg.zeta is not None:
            out["zeta"] = list(cfg.zeta)
        return out


def _where(error: jsonschema.ValidationError) -> str:
    path = [str(p) for p in error.absolute_path]
    return ".".join(path) if path else "<root>"


def _describe(error: jsonschema.ValidationError) -> str:
    if error.validator == "required":
        missing = error.message.split("'")[1]
        prefix = _where(error)
        key = missing if prefix == "<root>" else f"{prefix}.{missing}"
        return f"missing required key `{key}`"
    if error.validator == "additionalProperties":
        return f"`{_where(error)}`: {error.message}"
    return f"key `{_where(error)}`: {error.message}"


def _best_error(errors) -> jsonschema.ValidationError:
    # oneOf failures hide the useful message one level down
    err = jsonschema.exceptions.best_match(errors)
    while err.context:
        err = jsonschema.exceptions.best_match(err.context)
    return err


def validate(doc: Any) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = list(validator.iter_errors(doc))
    if errors:
        raise ConfigError(_describe(_best_error(errors)))


def problem_shape(problem: dict) -> tuple[int, int]:
    name = problem["name"]
    if name == "antenna_proxy":
        return 10, 3
    return int(problem["K"]), int(problem["Q"])


def config_from_dict(doc: dict) -> RunSpec:
    validate(doc)
    problem = dict(doc["problem"])
    K, Q = problem_shape(problem)
    if problem["name"] == "dtlz1" and K < Q:
        raise ConfigError("key `problem.K`: DTLZ1 needs K >= Q")
    if problem["name"] == "external":
        for key in ("lower", "upper"):
            if key in problem and len(problem[key]) != K:
                raise ConfigError(f"key `problem.{key}`: expected {K} entries")
    eps = doc["eps"]
    if isinstance(eps, list):
        if len(eps) != Q:
            raise ConfigError(f"key `eps`: expected {Q} entries, got {len(eps)}")
        eps = tuple(float(e) for e in eps)
    zeta = doc.get("zeta")
    if zeta is not None:
        if len(zeta) != Q:
            raise ConfigError(f"key `zeta`: expected {Q} entries, got {len(zeta)}")
        zeta = tuple(float(z) for z in zeta)
    if doc["W"] > doc["I"]:
        raise ConfigError("key `W`: must not exceed I")
    try:
        variation = VariationParams(**doc.get("variation", {}))
        surrogate = SurrogateOptions(**doc.get("surrogate", {}))
        cfg = RunConfig(
            I=doc["I"],
            P=doc["P"],
            W=doc["W"],
            gamma=float(doc["gamma"]),
            eps=eps,
            T0=doc.get("T0"),
            T_RL_max=doc.get("T_RL_max"),
            zeta=zeta,
            variation=variation,
            seed=doc.get("seed", 0),
            algo=doc.get("algo", "sbd"),
            reinforce=doc.get("reinforce", True),
            stop_on_stationarity=doc.get("stop_on_stationarity", True),
            surrogate=surrogate,
        )
        if problem["name"] == "antenna_proxy" and "thresholds" in problem:
            AntennaThresholds(**problem["thresholds"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return RunSpec(cfg, problem)


def parse_config(path: str | Path) -> RunSpec:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(doc)


def make_evaluator(problem: dict) -> Evaluator:
    name = problem["name"]
    if name == "external":
        K, Q = problem_shape(problem)
        lower = problem.get("lower", [0.0] * K)
        upper = problem.get("upper", [1.0] * K)
        return ExternalEvaluator(
            problem["command"],
            Bounds(lower, upper),
            Q,
            timeout=float(problem.get("timeout", DEFAULT_TIMEOUT)),
        )
    return get_problem(name, **{k: v for k, v in problem.items() if k != "name"})
