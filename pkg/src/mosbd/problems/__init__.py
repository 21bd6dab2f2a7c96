"""Benchmark and application problems, addressable by name."""

from __future__ import annotations

from .antenna import (
    AntennaResponse,
    AntennaThresholds,
    ProxyAntennaProblem,
    ProxyDesign,
    antenna_objectives,
    extract_bdd,
    extract_sll,
    phi_bdd,
    phi_s11,
    phi_sll,
    proxy_antenna_evaluate,
    proxy_response,
)
from .dtlz import default_front, dtlz1_eval, dtlz1_problem, dtlz1_true_front, error_index

__all__ = [
    "AntennaResponse",
    "AntennaThresholds",
    "ProxyAntennaProblem",
    "ProxyDesign",
    "antenna_objectives",
    "default_front",
    "dtlz1_eval",
    "dtlz1_problem",
    "dtlz1_true_front",
    "error_index",
    "extract_bdd",
    "extract_sll",
    "get_problem",
    "phi_bdd",
    "phi_s11",
    "phi_sll",
    "proxy_antenna_evaluate",
    "proxy_response",
]


def get_problem(name: str, **params):
    """Registry lookup: ``dtlz1`` (K, Q) or ``antenna_proxy`` (thresholds)."""
    key = name.lower()
    if key == "dtlz1":
        return dtlz1_problem(int(params["K"]), int(params["Q"]))
    if key == "antenna_proxy":
        th = params.get("thresholds")
        if isinstance(th, dict):
            th = AntennaThresholds(**th)
        return ProxyAntennaProblem(th)
    raise KeyError(f"unknown problem {name!r}")
