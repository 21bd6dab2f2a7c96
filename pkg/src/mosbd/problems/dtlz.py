"""DTLZ1 benchmark, its analytic front and the front-distance error index."""

from __future__ import annotations

import numpy as np

from ..dominance import Bounds
from ..evaluators import FunctionEvaluator

FRONT_SIZE_2 = 10_000
FRONT_SIZE_3 = 5_151


def dtlz1_eval(x, n_obj: int) -> np.ndarray:
    """DTLZ1 objectives for ``x`` in ``[0, 1]^K`` with ``K >= n_obj``."""
    x = np.asarray(x, dtype=float)
    K = x.size
    if K < n_obj:
        raise ValueError("DTLZ1 needs K >= Q")
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError("DTLZ1 is defined on the unit box")
    tail = x[n_obj - 1 :]
    g = 100.0 * (tail.size + np.sum((tail - 0.5) ** 2 - np.cos(20.0 * np.pi * (tail - 0.5))))
    f = np.empty(n_obj)
    for m in range(n_obj):
        v = 0.5 * (1.0 + g)
        v *= np.prod(x[: n_obj - 1 - m])
        if m > 0:
            v *= 1.0 - x[n_obj - 1 - m]
        f[m] = v
    return f


def dtlz1_true_front(n_obj: int, n: int) -> np.ndarray:
    """Uniform samples of the simplex ``sum(f) = 0.5``.

    For two objectives ``n`` evenly spaced points; for three objectives the
    densest triangular lattice with at most ``n`` points.
    """
    if n < 2:
        raise ValueError("front sampling needs n >= 2")
    if n_obj == 2:
        f1 = np.linspace(0.0, 0.5, n)
        return np.column_stack([f1, 0.5 - f1])
    if n_obj == 3:
        h = 1
        while (h + 2) * (h + 3) // 2 <= n:
            h += 1
        pts = [(i, j, h - i - j) for i in range(h + 1) for j in range(h + 1 - i)]
        return 0.5 * np.array(pts, dtype=float) / h
    raise ValueError("only Q in {2, 3} is supported")


def default_front(n_obj: int) -> np.ndarray:
    return dtlz1_true_front(n_obj, FRONT_SIZE_2 if n_obj == 2 else FRONT_SIZE_3)


def error_index(archive_objectives, front) -> float:
    """Mean distance from each archive point to its nearest front sample."""
    A = np.atleast_2d(np.asarray(archive_objectives, dtype=float))
    front = np.atleast_2d(np.asarray(front, dtype=float))
    if A.shape[0] == 0 or front.shape[0] == 0:
        raise ValueError("error_index needs a non-empty archive and front")
    # explicit loop keeps memory at O(front) for large archives
    nearest = np.array([np.sqrt(np.min(np.sum((front - a) ** 2, axis=1))) for a in A])
    return float(nearest.mean())


def dtlz1_problem(K: int, n_obj: int) -> FunctionEvaluator:
    if n_obj not in (2, 3):
        raise ValueError("only Q in {2, 3} is supported")
    if K < n_obj:
        raise ValueError("DTLZ1 needs K >= Q")
    return FunctionEvaluator(lambda x: dtlz1_eval(x, n_obj), Bounds.unit(K), n_obj, name="dtlz1")
