"""Parent selection, simulated binary crossover and polynomial mutation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dominance import Bounds, EvaluatedSolution, ParetoArchive, nondominated_subset


@dataclass(frozen=True)
class VariationParams:
    """Operator constants.

    ``p_c`` is the probability that a pair is recombined at all and
    ``p_var`` the per-coordinate exchange probability inside a recombined
    pair. ``p_m=None`` means ``1/K``.
    """

    eta_c: float = 15.0
    eta_m: float = 20.0
    p_c: float = 1.0
    p_var: float = 0.5
    p_m: float | None = None

    def __post_init__(self):
        if not (self.eta_c > 0 and self.eta_m > 0):
            raise ValueError("distribution indices must be positive")
        for name in ("p_c", "p_var"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.p_m is not None and not 0.0 <= self.p_m <= 1.0:
            raise ValueError("p_m must lie in [0, 1]")

    def mutation_rate(self, dim: int) -> float:
        return 1.0 / dim if self.p_m is None else self.p_m


def select_parents(
    archive: ParetoArchive | Sequence[EvaluatedSolution],
    population: Sequence[EvaluatedSolution],
    rng: np.random.Generator,
) -> tuple[EvaluatedSolution, EvaluatedSolution]:
    """One uniform pick from the archive, one from the population's non-dominated set."""
    if len(archive) == 0:
        raise RuntimeError("parent selection from an empty archive")
    if len(population) == 0:
        raise RuntimeError("parent selection from an empty population")
    first = archive[int(rng.integers(len(archive)))]
    front = nondominated_subset(population)
    second = front[int(rng.integers(len(front)))]
    return first, second


def sbx_beta(u: float, eta_c: float) -> float:
    """SBX spread factor for a uniform draw ``u`` in [0, 1)."""
    if u <= 0.5:
        return (2.0 * u) ** (1.0 / (eta_c + 1.0))
    return (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (eta_c + 1.0))


def sbx_pair(p1, p2, beta):
    """Both SBX children before clamping; they sum to ``p1 + p2``."""
    c1 = 0.5 * ((1.0 + beta) * p1 + (1.0 - beta) * p2)
    c2 = 0.5 * ((1.0 - beta) * p1 + (1.0 + beta) * p2)
    return c1, c2


def sbx_crossover(p1, p2, bounds: Bounds, params: VariationParams, rng: np.random.Generator) -> np.ndarray:
    """Single-child SBX; coordinates left alone copy ``p1``."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    child = p1.copy()
    if rng.random() >= params.p_c:
        return child
    K = p1.size
    exchange = rng.random(K) < params.p_var
    u = rng.random(K)
    # equal coordinates are a fixed point of SBX; skipping them avoids rounding drift
    exchange &= p1 != p2
    for k in np.flatnonzero(exchange):
        beta = sbx_beta(u[k], params.eta_c)
        c1, c2 = sbx_pair(p1[k], p2[k], beta)
        assert abs((c1 + c2) - (p1[k] + p2[k])) <= 1e-12 * (1.0 + abs(p1[k]) + abs(p2[k]))
        child[k] = c1
    return bounds.clip(child)


def mutation_shift(r: float, eta_m: float) -> float:
    """Normalized polynomial-mutation perturbation for a uniform draw ``r``."""
    if r < 0.5:
        return (2.0 * r) ** (1.0 / (eta_m + 1.0)) - 1.0
    return 1.0 - (2.0 * (1.0 - r)) ** (1.0 / (eta_m + 1.0))


def polynomial_mutation(x, bounds: Bounds, params: VariationParams, rng: np.random.Generator) -> np.ndarray:
    x = np.array(x, dtype=float)
    K = x.size
    mutate = rng.random(K) < params.mutation_rate(K)
    r = rng.random(K)
    span = bounds.span
    for k in np.flatnonzero(mutate):
        x[k] += mutation_shift(r[k], params.eta_m) * span[k]
    return bounds.clip(x)


def make_offspring(
    archive, population, bounds: Bounds, params: VariationParams, rng: np.random.Generator
) -> np.ndarray:
    """Select, recombine and mutate: the one offspring of a steady-state step."""
    a, b = select_parents(archive, population, rng)
    child = sbx_crossover(a.x, b.x, bounds, params, rng)
    return polynomial_mutation(child, bounds, params, rng)
