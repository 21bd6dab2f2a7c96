"""Solution records and the dominance relations used by both optimizers.

Objective vectors are plain 1-d float arrays (lower is better). Design
vectors are plain 1-d float arrays too; their box constraints live in a
shared :class:`Bounds` owned by the problem.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import _kernels


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Bounds:
    """Closed box ``[lower_k, upper_k]`` for every design coordinate."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.ndim != 1 or lo.shape != hi.shape or lo.size < 1:
            raise ValueError("bounds need matching 1-d lower/upper arrays with K >= 1")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("bounds must be finite")
        if np.any(lo >= hi):
            raise ValueError("every lower bound must be strictly below its upper bound")
        object.__setattr__(self, "lower", _frozen(lo))
        object.__setattr__(self, "upper", _frozen(hi))

    @classmethod
    def unit(cls, dim: int) -> "Bounds":
        return cls(np.zeros(dim), np.ones(dim))

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return x.shape == self.lower.shape and bool(
            np.all(x >= self.lower) and np.all(x <= self.upper)
        )

    def check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != self.lower.shape:
            raise ValueError(f"design has shape {x.shape}, expected ({self.dim},)")
        if not self.contains(x):
            raise ValueError("design vector lies outside its bounds")
        return x

    def clip(self, x) -> np.ndarray:
        return np.minimum(np.maximum(x, self.lower), self.upper)

    def normalize(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.lower) / self.span

    def denormalize(self, u) -> np.ndarray:
        return self.lower + np.asarray(u, dtype=float) * self.span


@dataclass(frozen=True, eq=False)
class FitnessRecord:
    """Objective values plus provenance.

    ``delta is None`` marks an exactly simulated record; otherwise the values
    are surrogate predictions with per-objective confidence radius ``delta``.
    """

    phi: np.ndarray
    delta: np.ndarray | None = None

    def __post_init__(self):
        phi = _frozen(self.phi)
        if phi.ndim != 1 or phi.size < 2:
            raise ValueError("an objective vector needs Q >= 2 entries")
        if not np.all(np.isfinite(phi)):
            raise ValueError("objective values must be finite")
        object.__setattr__(self, "phi", phi)
        if self.delta is not None:
            delta = _frozen(self.delta)
            if delta.shape != phi.shape:
                raise ValueError("delta must have one entry per objective")
            if np.any(delta < 0) or not np.all(np.isfinite(delta)):
                raise ValueError("delta must be finite and non-negative")
            object.__setattr__(self, "delta", delta)

    @classmethod
    def simulated(cls, phi) -> "FitnessRecord":
        return cls(phi)

    @classmethod
    def predicted(cls, phi, delta) -> "FitnessRecord":
        return cls(phi, delta)

    @property
    def is_simulated(self) -> bool:
        return self.delta is None

    @cached_property
    def lower(self) -> np.ndarray:
        return self.phi if self.delta is None else _frozen(self.phi - self.delta)

    @cached_property
    def upper(self) -> np.ndarray:
        return self.phi if self.delta is None else _frozen(self.phi + self.delta)


@dataclass(frozen=True, eq=False)
class EvaluatedSolution:
    x: np.ndarray
    fitness: FitnessRecord

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen(self.x))

    @property
    def phi(self) -> np.ndarray:
        return self.fitness.phi

    @property
    def is_simulated(self) -> bool:
        return self.fitness.is_simulated


def as_eps(eps, n_obj: int) -> np.ndarray:
    """Broadcast a scalar or per-objective epsilon to a validated array."""
    arr = np.broadcast_to(np.asarray(eps, dtype=float), (n_obj,)).copy()
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise ValueError("every epsilon must be a finite, strictly positive number")
    arr.setflags(write=False)
    return arr


def _pair(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"objective vectors differ in length: {a.shape} vs {b.shape}")
    return a, b


def _dominates(a: np.ndarray, b: np.ndarray) -> bool:
    return bool(np.all(a <= b) and np.any(a < b))


def dominates(a, b) -> bool:
    """Pareto dominance: ``a`` no worse everywhere and strictly better somewhere."""
    return _dominates(*_pair(a, b))


def eps_quantize(phi, eps):
    """Return ``(boxes, quantized)`` with ``boxes = floor(phi / eps)``."""
    phi = np.asarray(phi, dtype=float)
    eps = np.asarray(eps, dtype=float)
    boxes = np.floor(phi / eps)
    return boxes.astype(np.int64), boxes * eps


def eps_distance(phi, eps) -> float:
    phi = np.asarray(phi, dtype=float)
    _, quantized = eps_quantize(phi, eps)
    return float(np.sqrt(np.sum((phi - quantized) ** 2)))


def _box_and_distance(F: np.ndarray, eps: np.ndarray):
    boxes = np.floor(F / eps)
    dist = np.sqrt(np.sum((F - boxes * eps) ** 2, axis=-1))
    return boxes, dist


def eps_dominates(a, b, eps) -> bool:
    a, b = _pair(a, b)
    box_a, d_a = _box_and_distance(a, eps)
    box_b, d_b = _box_and_distance(b, eps)
    if np.array_equal(box_a, box_b):
        return bool(d_a < d_b)
    return _dominates(box_a, box_b)


def _fitness(s) -> FitnessRecord:
    return s.fitness if isinstance(s, EvaluatedSolution) else s


def sbd_dominates(a, b) -> bool:
    """Provenance-aware dominance between two solutions (or fitness records).

    Simulated values are compared as they are. A predicted record enters the
    comparison through its lower bound when the other side is predicted too,
    and through its upper bound (its worst case) when the other side is
    simulated.
    """
    fa, fb = _fitness(a), _fitness(b)
    if fa.phi.shape != fb.phi.shape:
        raise ValueError("fitness records differ in objective count")
    if fa.is_simulated and fb.is_simulated:
        return _dominates(fa.phi, fb.phi)
    if not fa.is_simulated and not fb.is_simulated:
        return _dominates(fa.lower, fb.lower)
    if fa.is_simulated:
        return _dominates(fa.phi, fb.upper)
    return _dominates(fa.upper, fb.phi)


def objectives(solutions: Sequence[EvaluatedSolution]) -> np.ndarray:
    return np.array([s.phi for s in solutions], dtype=float)


def nondominated_subset(g: Sequence[EvaluatedSolution]) -> list[EvaluatedSolution]:
    """Members of ``g`` not Pareto-dominated by any other member, in input order."""
    if len(g) == 0:
        raise ValueError("nondominated_subset needs a non-empty set")
    D = _kernels.dominance_matrix(objectives(g))
    keep = ~D.any(axis=0)
    return [s for s, k in zip(g, keep) if k]


def non_eps_dominated_subset(g: Sequence[EvaluatedSolution], eps) -> list[EvaluatedSolution]:
    """Members of ``g`` not epsilon-dominated by any other member, in input order."""
    if len(g) == 0:
        raise ValueError("non_eps_dominated_subset needs a non-empty set")
    F = objectives(g)
    boxes, dist = _box_and_distance(F, as_eps(eps, F.shape[1]))
    E = _kernels.eps_dominance_matrix(boxes, dist)
    keep = ~E.any(axis=0)
    return [s for s, k in zip(g, keep) if k]


@dataclass(frozen=True, eq=False)
class ParetoArchive:
    """Variable-size set of simulated, mutually non-epsilon-dominated solutions.

    Instances are immutable; :meth:`insert` returns a new archive.
    """

    eps: np.ndarray
    members: tuple[EvaluatedSolution, ...] = ()
    _boxes: np.ndarray = field(init=False, repr=False)
    _dist: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        members = tuple(self.members)
        for m in members:
            if not m.is_simulated:
                raise ValueError("archive members must carry simulated objectives")
        object.__setattr__(self, "members", members)
        if members:
            F = objectives(members)
            eps = as_eps(self.eps, F.shape[1])
            boxes, dist = _box_and_distance(F, eps)
        else:
            eps = np.asarray(self.eps, dtype=float)
            boxes = dist = None
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "_boxes", boxes)
        object.__setattr__(self, "_dist", dist)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i):
        return self.members[i]

    @property
    def objectives(self) -> np.ndarray:
        return objectives(self.members)

    @classmethod
    def from_solutions(cls, solutions: Sequence[EvaluatedSolution], eps) -> "ParetoArchive":
        """Archive holding the non-epsilon-dominated subset of ``solutions``."""
        archive = cls(eps)
        for s in solutions:
            archive = archive.insert(s)
        return archive

    def eps_dominated(self, phi) -> bool:
        """True when some member epsilon-dominates the objective vector ``phi``."""
        if not self.members:
            return False
        phi = np.asarray(phi, dtype=float)
        eps = as_eps(self.eps, phi.size)
        box, d = _box_and_distance(phi, eps)
        le = np.all(self._boxes <= box, axis=1)
        lt = np.any(self._boxes < box, axis=1)
        same = np.all(self._boxes == box, axis=1)
        return bool(np.any((le & lt) | (same & (self._dist < d))))

    def insert(self, candidate: EvaluatedSolution) -> "ParetoArchive":
        if not candidate.is_simulated:
            raise ValueError("only simulated solutions may enter the archive")
        if not self.members:
            return ParetoArchive(self.eps, (candidate,))
        phi = candidate.phi
        if self.eps_dominated(phi):
            return self
        if any(np.array_equal(m.phi, phi) for m in self.members):
            # exact duplicate objective vector: the incumbent stays
            return self
        eps = as_eps(self.eps, phi.size)
        box, d = _box_and_distance(phi, eps)
        ge = np.all(box <= self._boxes, axis=1)
        gt = np.any(box < self._boxes, axis=1)
        same = np.all(self._boxes == box, axis=1)
        beaten = (ge & gt) | (same & (d < self._dist))
        kept = tuple(m for m, b in zip(self.members, beaten) if not b)
        return ParetoArchive(self.eps, kept + (candidate,))


def archive_insert(archive: ParetoArchive, candidate: EvaluatedSolution) -> ParetoArchive:
    return archive.insert(candidate)
