"""Optimization loops: surrogate-assisted (SbD) and the exact-evaluation baseline (StD).

Both loops are steady state: each iteration produces one offspring, which may
enter the archive and may replace one population member. They share parent
selection, variation, archive maintenance and the crowding-stationarity stop.

Random streams come from ``np.random.SeedSequence(seed).spawn(4)`` in the
fixed order ``lhs, theta, variation, ties``.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, TextIO

import numpy as np

from . import _kernels
from .dominance import (
    EvaluatedSolution,
    FitnessRecord,
    ParetoArchive,
    as_eps,
    non_eps_dominated_subset,
    sbd_dominates,
)
from .evaluators import EvaluationError, Evaluator
from .surrogate import KrigingModel, lhs_sample
from .variation import VariationParams, make_offspring

log = logging.getLogger(__name__)

STOP_REASONS = ("stationarity", "budget", "max_iterations", "zeta_met")
MIN_STATIONARY_ARCHIVE = 3


@dataclass(frozen=True)
class SurrogateOptions:
    refresh_every: int = 50
    n_starts: int = 8
    evals_per_start: int = 100
    max_fit_points: int = 200

    def __post_init__(self):
        for name in ("refresh_every", "n_starts", "evals_per_start", "max_fit_points"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")


@dataclass(frozen=True)
class RunConfig:
    """Control parameters of one run.

    ``T0`` defaults to ``10 K`` and ``T_RL_max`` to ``I // 5`` once the
    design dimension is known (see :meth:`resolved`). With
    ``stop_on_stationarity=False`` only the budget, ``zeta`` and ``I`` end a
    run. ``reinforce=False`` freezes the surrogate after initialization.
    """

    I: int
    P: int
    W: int
    gamma: float
    eps: tuple[float, ...] | float
    T0: int | None = None
    T_RL_max: int | None = None
    zeta: tuple[float, ...] | None = None
    variation: VariationParams = field(default_factory=VariationParams)
    seed: int = 0
    algo: str = "sbd"
    reinforce: bool = True
    stop_on_stationarity: bool = True
    surrogate: SurrogateOptions = field(default_factory=SurrogateOptions)

    def __post_init__(self):
        if self.algo not in ("sbd", "std"):
            raise ValueError("algo must be 'sbd' or 'std'")
        if not (self.I >= self.W >= 1):
            raise ValueError("need I >= W >= 1")
        if self.P < 2:
            raise ValueError("P must be at least 2")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        eps = np.atleast_1d(np.asarray(self.eps, dtype=float))
        if eps.size == 0 or not np.all(eps > 0) or not np.all(np.isfinite(eps)):
            raise ValueError("eps entries must be finite and positive")
        if self.T0 is not None and self.T0 < 2:
            raise ValueError("T0 must be at least 2")
        if self.T_RL_max is not None and self.T_RL_max < 0:
            raise ValueError("T_RL_max must be non-negative")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def resolved(self, dim: int) -> "RunConfig":
        T0 = 10 * dim if self.T0 is None else self.T0
        T_RL_max = self.I // 5 if self.T_RL_max is None else self.T_RL_max
        return replace(self, T0=T0, T_RL_max=T_RL_max)


@dataclass(frozen=True)
class RunResult:
    archive: ParetoArchive
    C_FW: int
    T_RL: int
    I_stop: int
    gamma_history: tuple[float, ...]
    stop_reason: str
    wall_time: float
    algo: str
    config: RunConfig
    n_failed: int = 0
    n_predicted_skips: int = 0


@dataclass
class _Streams:
    lhs: np.random.Generator
    theta: np.random.Generator
    variation: np.random.Generator
    ties: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "_Streams":
        kids = np.random.SeedSequence(seed).spawn(4)
        return cls(*(np.random.default_rng(k) for k in kids))


@dataclass
class RunState:
    """Mutable loop state; owned by a single loop at a time."""

    config: RunConfig
    evaluator: Evaluator
    streams: _Streams
    archive: ParetoArchive
    population: list[EvaluatedSolution]
    model: KrigingModel | None = None
    C_FW: int = 0
    T_RL: int = 0
    iteration: int = 0
    gamma_history: list[float] = field(default_factory=list)
    archive_streak: int = 0
    n_failed: int = 0
    n_predicted_skips: int = 0
    known: dict[bytes, np.ndarray] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Crowding and stopping
# ---------------------------------------------------------------------------


def crowding_gamma(archive_objectives) -> float:
    """Largest summed crowding distance over members that are never a sort boundary.

    Each objective is sorted independently (stable, so ties keep insertion
    order); the first and last member of every sort count as boundaries.
    Fewer than 3 members give 0.
    """
    F = np.asarray(archive_objectives, dtype=float)
    if F.ndim != 2 or F.shape[0] < 3:
        return 0.0
    return float(_kernels.max_interior_crowding(np.ascontiguousarray(F)))


def stationarity_met(gamma_history, W: int, gamma: float) -> bool:
    """RMS deviation of the last ``W`` values around their mean is at most ``gamma``."""
    if W < 1 or len(gamma_history) < W:
        return False
    window = np.asarray(gamma_history[-W:], dtype=float)
    dev = math.sqrt(float(np.mean((window - window.mean()) ** 2)))
    return dev <= gamma


def zeta_met(archive: ParetoArchive, zeta) -> bool:
    """Some archive member meets every per-objective threshold."""
    if zeta is None or len(archive) == 0:
        return False
    return bool(np.any(np.all(archive.objectives <= np.asarray(zeta, dtype=float), axis=1)))


def time_saving_counts(P: int, I: int, T0: int, T_RL: int) -> float:
    baseline = P + I
    if baseline <= 0:
        raise ValueError("baseline evaluation count must be positive")
    return (baseline - (T0 + T_RL)) / baseline


def time_saving(std: RunResult, sbd: RunResult) -> dict:
    """Relative saving of the SbD run over the StD run, from counters and from wall time."""
    by_count = (std.C_FW - sbd.C_FW) / std.C_FW
    by_wall = (std.wall_time - sbd.wall_time) / std.wall_time if std.wall_time > 0 else float("nan")
    return {"counter": by_count, "wall_clock": by_wall}


# ---------------------------------------------------------------------------
# Population update
# ---------------------------------------------------------------------------


def population_update(
    population: list[EvaluatedSolution],
    offspring: EvaluatedSolution,
    rng: np.random.Generator,
) -> tuple[list[EvaluatedSolution], str]:
    """Apply the provenance-aware replacement ladder.

    Returns the new population (same size) and the name of the rule that
    fired: ``rejected``, ``replace_pred``, ``replace_sim``,
    ``random_pred``, ``kept`` or ``random_sim``.
    """
    pred = [i for i, m in enumerate(population) if not m.is_simulated]
    sim = [i for i, m in enumerate(population) if m.is_simulated]
    beats_child = [sbd_dominates(m, offspring) for m in population]
    if any(beats_child):
        return list(population), "rejected"
    dominated_pred = [i for i in pred if sbd_dominates(offspring, population[i])]
    if dominated_pred:
        return _replace(population, dominated_pred, offspring, rng), "replace_pred"
    dominated_sim = [i for i in sim if sbd_dominates(offspring, population[i])]
    if dominated_sim:
        return _replace(population, dominated_sim, offspring, rng), "replace_sim"
    if pred:
        return _replace(population, pred, offspring, rng), "random_pred"
    if not offspring.is_simulated:
        return list(population), "kept"
    return _replace(population, sim, offspring, rng), "random_sim"


def _replace(population, candidates, offspring, rng):
    out = list(population)
    out[candidates[int(rng.integers(len(candidates)))]] = offspring
    return out


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _key(x: np.ndarray) -> bytes:
    return np.ascontiguousarray(x, dtype=float).tobytes()


def _record_gamma(state: RunState) -> None:
    state.gamma_history.append(crowding_gamma(state.archive.objectives) if len(state.archive) else 0.0)
    if len(state.archive) >= MIN_STATIONARY_ARCHIVE:
        state.archive_streak += 1
    else:
        state.archive_streak = 0


def _stationary(state: RunState) -> bool:
    cfg = state.config
    if not cfg.stop_on_stationarity or state.archive_streak < cfg.W:
        return False
    return stationarity_met(state.gamma_history, cfg.W, cfg.gamma)


def _trace_record(state: RunState) -> dict:
    return {
        "iteration": state.iteration,
        "C_FW": state.C_FW,
        "T_RL": state.T_RL,
        "archive_size": len(state.archive),
        "gamma": state.gamma_history[-1] if state.gamma_history else 0.0,
    }


def _evaluate_initial(evaluator: Evaluator, X: np.ndarray) -> np.ndarray:
    try:
        return evaluator.evaluate_batch(X)
    except EvaluationError as exc:
        raise RuntimeError(f"initial evaluation failed: {exc}") from exc


# ---------------------------------------------------------------------------
# SbD
# ---------------------------------------------------------------------------


def initialize_sbd(config: RunConfig, evaluator: Evaluator, streams: _Streams) -> RunState:
    """Evaluate an LHS training set, fit the surrogate and seed archive and population."""
    cfg = config.resolved(evaluator.dim)
    eps = as_eps(cfg.eps, evaluator.n_obj)
    X = lhs_sample(cfg.T0, evaluator.bounds, streams.lhs)
    Y = _evaluate_initial(evaluator, X)
    opts = cfg.surrogate
    model = KrigingModel.fit(
        X,
        Y,
        evaluator.bounds,
        rng=streams.theta,
        refresh_every=opts.refresh_every,
        n_starts=opts.n_starts,
        evals_per_start=opts.evals_per_start,
        max_fit_points=opts.max_fit_points,
    )
    training = [EvaluatedSolution(x, FitnessRecord.simulated(y)) for x, y in zip(X, Y)]
    archive = ParetoArchive(eps, tuple(non_eps_dominated_subset(training, eps)))
    population = initial_population(archive, training, cfg.P, streams.ties)
    state = RunState(cfg, evaluator, streams, archive, population, model=model, C_FW=cfg.T0)
    state.known = {_key(s.x): s.phi for s in training}
    return state


def initial_population(archive, training, P: int, rng: np.random.Generator) -> list[EvaluatedSolution]:
    """First ``min(P, |A|)`` archive members in order, the rest drawn from the training set.

    Draws avoid designs already chosen while any remain; after that they
    repeat.
    """
    chosen = list(archive.members[:P])
    taken = {_key(s.x) for s in chosen}
    pool = [s for s in training if _key(s.x) not in taken]
    need = P - len(chosen)
    if need <= 0:
        return chosen
    if len(pool) >= need:
        picks = rng.choice(len(pool), size=need, replace=False)
        chosen.extend(pool[int(i)] for i in picks)
    else:
        chosen.extend(pool)
        extra = rng.integers(len(training), size=need - len(pool))
        chosen.extend(training[int(i)] for i in extra)
    return chosen


def sbd_iteration(state: RunState) -> str | None:
    """One SbD step. Returns a stop reason, or None to continue."""
    cfg = state.config
    ev = state.evaluator
    state.iteration += 1
    x = make_offspring(state.archive, state.population, ev.bounds, cfg.variation, state.streams.variation)
    child: EvaluatedSolution | None
    known = state.known.get(_key(x))
    if known is not None:
        # already simulated (a training point): reuse, no solver call
        child = EvaluatedSolution(x, FitnessRecord.simulated(known))
        state.archive = state.archive.insert(child)
    else:
        pred = state.model.predict(x)
        if state.archive.eps_dominated(pred.phi):
            state.n_predicted_skips += 1
            child = EvaluatedSolution(x, pred)
        else:
            try:
                phi = ev.evaluate(x)
            except EvaluationError as exc:
                log.warning("iteration %d: evaluation failed, offspring discarded: %s", state.iteration, exc)
                state.n_failed += 1
                child = None
            else:
                state.C_FW += 1
                state.T_RL += 1
                state.known[_key(x)] = phi
                if cfg.reinforce:
                    state.model.reinforce(x, phi)
                child = EvaluatedSolution(x, FitnessRecord.simulated(phi))
                state.archive = state.archive.insert(child)
    if child is not None:
        state.population, _ = population_update(state.population, child, state.streams.ties)
    _record_gamma(state)
    if _stationary(state):
        return "stationarity"
    if state.T_RL >= cfg.T_RL_max:
        return "budget"
    if zeta_met(state.archive, cfg.zeta):
        return "zeta_met"
    if state.iteration >= cfg.I:
        return "max_iterations"
    return None


# ---------------------------------------------------------------------------
# StD (every offspring simulated)
# ---------------------------------------------------------------------------


def initialize_std(config: RunConfig, evaluator: Evaluator, streams: _Streams) -> RunState:
    """LHS population of size ``P``, all simulated; the archive is its non-epsilon-dominated part."""
    cfg = config.resolved(evaluator.dim)
    eps = as_eps(cfg.eps, evaluator.n_obj)
    X = lhs_sample(cfg.P, evaluator.bounds, streams.lhs)
    Y = _evaluate_initial(evaluator, X)
    population = [EvaluatedSolution(x, FitnessRecord.simulated(y)) for x, y in zip(X, Y)]
    archive = ParetoArchive(eps, tuple(non_eps_dominated_subset(population, eps)))
    return RunState(cfg, evaluator, streams, archive, population, C_FW=cfg.P)


def std_iteration(state: RunState) -> str | None:
    cfg = state.config
    ev = state.evaluator
    state.iteration += 1
    x = make_offspring(state.archive, state.population, ev.bounds, cfg.variation, state.streams.variation)
    try:
        phi = ev.evaluate(x)
    except EvaluationError as exc:
        log.warning("iteration %d: evaluation failed, offspring discarded: %s", state.iteration, exc)
        state.n_failed += 1
    else:
        state.C_FW += 1
        child = EvaluatedSolution(x, FitnessRecord.simulated(phi))
        state.archive = state.archive.insert(child)
        state.population, _ = population_update(state.population, child, state.streams.ties)
    _record_gamma(state)
    if _stationary(state):
        return "stationarity"
    if zeta_met(state.archive, cfg.zeta):
        return "zeta_met"
    if state.iteration >= cfg.I:
        return "max_iterations"
    return None


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------


def run(
    config: RunConfig,
    evaluator: Evaluator,
    trace: TextIO | None = None,
    observer: Callable[[RunState], None] | None = None,
) -> RunResult:
    """Run one optimization to completion.

    ``trace`` receives one JSON line per iteration; ``observer`` is called
    with the live state after initialization and after every iteration and
    must not modify it.
    """
    start = time.perf_counter()
    streams = _Streams.from_seed(config.seed)
    if config.algo == "sbd":
        state = initialize_sbd(config, evaluator, streams)
        step = sbd_iteration
    else:
        state = initialize_std(config, evaluator, streams)
        step = std_iteration
    cfg = state.config
    if observer is not None:
        observer(state)
    reason = None
    if cfg.algo == "sbd" and state.T_RL >= cfg.T_RL_max:
        reason = "budget"
    elif zeta_met(state.archive, cfg.zeta):
        reason = "zeta_met"
    while reason is None:
        reason = step(state)
        if trace is not None:
            trace.write(json.dumps(_trace_record(state)) + "\n")
        if observer is not None:
            observer(state)
    wall = time.perf_counter() - start
    log.info(
        "%s run finished: %s after %d iterations, C_FW=%d, |A|=%d, %.1f s",
        cfg.algo,
        reason,
        state.iteration,
        state.C_FW,
        len(state.archive),
        wall,
    )
    return RunResult(
        archive=state.archive,
        C_FW=state.C_FW,
        T_RL=state.T_RL,
        I_stop=state.iteration,
        gamma_history=tuple(state.gamma_history),
        stop_reason=reason,
        wall_time=wall,
        algo=cfg.algo,
        config=cfg,
        n_failed=state.n_failed,
        n_predicted_skips=state.n_predicted_skips,
    )


__all__ = [
    "RunConfig",
    "RunResult",
    "RunState",
    "STOP_REASONS",
    "SurrogateOptions",
    "crowding_gamma",
    "initial_population",
    "initialize_sbd",
    "initialize_std",
    "population_update",
    "run",
    "sbd_iteration",
    "stationarity_met",
    "std_iteration",
    "time_saving",
    "time_saving_counts",
    "zeta_met",
]
