"""Hot numeric kernels.

Every kernel exists twice: a numba ``@njit`` version and a pure-numpy
version with identical semantics. The numba path is used by default; set
``MOSBD_DISABLE_NUMBA=1`` (or run without numba installed) to force the
numpy path. Both implementations stay importable under ``*_nb`` / ``*_np``
names so the test-suite and ``benchmarks/bench_kernels.py`` can compare them.
"""

from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("MOSBD_DISABLE_NUMBA", "").strip().lower()

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def _njit(fn):
    if not HAVE_NUMBA:  # pragma: no cover
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


# ---------------------------------------------------------------------------
# Gaussian correlation
# ---------------------------------------------------------------------------


def corr_matrix_np(X, theta):
    diff = X[:, None, :] - X[None, :, :]
    return np.exp(-np.einsum("ijk,k->ij", diff * diff, theta))


@_njit
def corr_matrix_nb(X, theta):
    n, k = X.shape
    R = np.empty((n, n))
    for i in range(n):
        R[i, i] = 1.0
        for j in range(i):
            s = 0.0
            for d in range(k):
                t = X[i, d] - X[j, d]
                s += theta[d] * t * t
            v = np.exp(-s)
            R[i, j] = v
            R[j, i] = v
    return R


def corr_vector_np(X, x, theta):
    diff = X - x
    return np.exp(-((diff * diff) @ theta))


@_njit
def corr_vector_nb(X, x, theta):
    n, k = X.shape
    r = np.empty(n)
    for i in range(n):
        s = 0.0
        for d in range(k):
            t = X[i, d] - x[d]
            s += theta[d] * t * t
        r[i] = np.exp(-s)
    return r


# ---------------------------------------------------------------------------
# Dominance matrices
# ---------------------------------------------------------------------------


def dominance_matrix_np(F):
    """``D[i, j]`` is True when row ``i`` Pareto-dominates row ``j``."""
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    return le & lt


@_njit
def dominance_matrix_nb(F):
    n, q = F.shape
    D = np.zeros((n, n), dtype=np.bool_)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            le = True
            lt = False
            for m in range(q):
                if F[i, m] > F[j, m]:
                    le = False
                    break
                if F[i, m] < F[j, m]:
                    lt = True
            D[i, j] = le and lt
    return D


def eps_dominance_matrix_np(boxes, dist):
    """``E[i, j]`` is True when row ``i`` epsilon-dominates row ``j``."""
    box_dom = dominance_matrix_np(boxes)
    same = np.all(boxes[:, None, :] == boxes[None, :, :], axis=2)
    closer = dist[:, None] < dist[None, :]
    return box_dom | (same & closer)


@_njit
def eps_dominance_matrix_nb(boxes, dist):
    n, q = boxes.shape
    E = np.zeros((n, n), dtype=np.bool_)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            le = True
            lt = False
            for m in range(q):
                if boxes[i, m] > boxes[j, m]:
                    le = False
                    break
                if boxes[i, m] < boxes[j, m]:
                    lt = True
            if le and lt:
                E[i, j] = True
            elif le and dist[i] < dist[j]:
                # le and not lt means the boxes coincide
                E[i, j] = True
    return E


# ---------------------------------------------------------------------------
# Crowding
# ---------------------------------------------------------------------------


def max_interior_crowding_np(F):
    n, q = F.shape
    if n < 3:
        return 0.0
    total = np.zeros(n)
    boundary = np.zeros(n, dtype=bool)
    for m in range(q):
        order = np.argsort(F[:, m], kind="stable")
        boundary[order[0]] = True
        boundary[order[-1]] = True
        col = F[order, m]
        total[order[1:-1]] += col[2:] - col[:-2]
    interior = ~boundary
    if not interior.any():
        return 0.0
    return float(total[interior].max())


@_njit
def max_interior_crowding_nb(F):
    n, q = F.shape
    if n < 3:
        return 0.0
    total = np.zeros(n)
    boundary = np.zeros(n, dtype=np.bool_)
    for m in range(q):
        order = np.argsort(F[:, m], kind="mergesort")
        boundary[order[0]] = True
        boundary[order[n - 1]] = True
        for a in range(1, n - 1):
            total[order[a]] += F[order[a + 1], m] - F[order[a - 1], m]
    best = 0.0
    found = False
    for i in range(n):
        if not boundary[i]:
            if not found or total[i] > best:
                best = total[i]
                found = True
    return best


# ---------------------------------------------------------------------------
# Linear array power pattern
# ---------------------------------------------------------------------------


def array_power_np(amps, psi_step, kd, theta_rad):
    """|cos(theta) * sum_n a_n exp(j n (kd sin(theta) + psi_step))|^2."""
    n = np.arange(amps.size)
    phase = np.outer(kd * np.sin(theta_rad) + psi_step, n)
    af = np.exp(1j * phase) @ amps
    ef = np.cos(theta_rad)
    return (ef * ef) * (af.real**2 + af.imag**2)


@_njit
def array_power_nb(amps, psi_step, kd, theta_rad):
    m = theta_rad.size
    out = np.empty(m)
    for i in range(m):
        u = kd * np.sin(theta_rad[i]) + psi_step
        re = 0.0
        im = 0.0
        for n in range(amps.size):
            re += amps[n] * np.cos(n * u)
            im += amps[n] * np.sin(n * u)
        ef = np.cos(theta_rad[i])
        out[i] = ef * ef * (re * re + im * im)
    return out


if USE_NUMBA:
    corr_matrix = corr_matrix_nb
    corr_vector = corr_vector_nb
    dominance_matrix = dominance_matrix_nb
    eps_dominance_matrix = eps_dominance_matrix_nb
    max_interior_crowding = max_interior_crowding_nb
    array_power = array_power_nb
else:
    corr_matrix = corr_matrix_np
    corr_vector = corr_vector_np
    dominance_matrix = dominance_matrix_np
    eps_dominance_matrix = eps_dominance_matrix_np
    max_interior_crowding = max_interior_crowding_np
    array_power = array_power_np

BACKEND = "numba" if USE_NUMBA else "numpy"
