"""Latin Hypercube sampling and Ordinary Kriging surrogates.

One independent Ordinary Kriging model is kept per objective, each with an
anisotropic Gaussian correlation on inputs mapped to the unit box. The
Cholesky factor of the correlation matrix is stored row-packed so that a new
training point can be appended in O(T^2) without copying the factor.
"""

from __future__ import annotations

import json
import logging
import math

import numpy as np
from scipy.linalg import blas

from . import _kernels
from .dominance import Bounds, FitnessRecord

log = logging.getLogger(__name__)

BASE_NUGGET = 1e-10
MAX_NUGGET = 1e-4
DUPLICATE_TOL = 1e-12
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def lhs_sample(t0: int, bounds: Bounds, rng: np.random.Generator) -> np.ndarray:
    """Latin Hypercube design of ``t0`` points, returned as a ``(t0, K)`` array.

    Each dimension is cut into ``t0`` equal strata; every stratum receives one
    point at a uniform position inside it, with an independent random
    stratum permutation per dimension.
    """
    if t0 < 2:
        raise ValueError("lhs_sample needs at least 2 samples")
    K = bounds.dim
    strata = np.column_stack([rng.permutation(t0) for _ in range(K)])
    u = (strata + rng.random((t0, K))) / t0
    return bounds.denormalize(u)


def _packed_offset(n: int) -> int:
    return n * (n + 1) // 2


class _Objective:
    """Ordinary Kriging state for one standardized response."""

    def __init__(self, theta: np.ndarray):
        self.theta = np.asarray(theta, dtype=float)
        self.nugget = BASE_NUGGET
        self.ap = np.empty(0)
        self.n = 0
        self.y = np.empty(0)
        self.z1 = np.empty(0)
        self.zy = np.empty(0)
        self.mu = 0.0
        self.sigma2 = 0.0
        self.w = np.empty(0)

    def factorize(self, X: np.ndarray, y: np.ndarray, capacity: int) -> None:
        n = X.shape[0]
        R = _kernels.corr_matrix(X, self.theta)
        nugget = BASE_NUGGET
        while True:
            try:
                L = np.linalg.cholesky(R + nugget * np.eye(n))
                break
            except np.linalg.LinAlgError:
                if nugget >= MAX_NUGGET:
                    raise
                nugget *= 10.0
        if nugget > BASE_NUGGET:
            log.debug("nugget escalated to %.1e at T=%d", nugget, n)
        self.nugget = nugget
        self.ap = np.empty(_packed_offset(max(capacity, n)))
        self.ap[: _packed_offset(n)] = L[np.tril_indices(n)]
        self.n = n
        self.y = np.empty(max(capacity, n))
        self.y[:n] = y
        self.z1 = np.empty(max(capacity, n))
        self.zy = np.empty(max(capacity, n))
        self.z1[:n] = self._solve_lower(np.ones(n))
        self.zy[:n] = self._solve_lower(y)
        self._update_moments()

    def _packed(self) -> np.ndarray:
        return self.ap[: _packed_offset(self.n)]

    def _solve_lower(self, b: np.ndarray) -> np.ndarray:
        return blas.dtpsv(self.n, self._packed(), b, lower=0, trans=1)

    def _solve_upper(self, b: np.ndarray) -> np.ndarray:
        return blas.dtpsv(self.n, self._packed(), b, lower=0, trans=0)

    def _update_moments(self) -> None:
        n = self.n
        z1, zy = self.z1[:n], self.zy[:n]
        self.mu = float(z1 @ zy / (z1 @ z1))
        resid = zy - self.mu * z1
        self.sigma2 = float(resid @ resid / n)
        self.w = self._solve_upper(resid)

    def _grow(self, capacity: int) -> None:
        ap = np.empty(_packed_offset(capacity))
        ap[: _packed_offset(self.n)] = self._packed()
        self.ap = ap
        for name in ("y", "z1", "zy"):
            old = getattr(self, name)
            new = np.empty(capacity)
            new[: self.n] = old[: self.n]
            setattr(self, name, new)

    def extend(self, X: np.ndarray, x: np.ndarray, y: float) -> bool:
        """Append one point by a rank-one extension of the factor.

        ``X`` holds the already stored inputs. Returns False when the Schur
        complement is too small to extend safely (caller refactorizes).
        """
        n = self.n
        r = _kernels.corr_vector(X, x, self.theta)
        ell = self._solve_lower(r)
        d2 = 1.0 + self.nugget - ell @ ell
        if not d2 > 1e-12:
            return False
        if _packed_offset(n + 1) > self.ap.size or n + 1 > self.y.size:
            self._grow(max(2 * (n + 1), 16))
        d = math.sqrt(d2)
        start = _packed_offset(n)
        self.ap[start : start + n] = ell
        self.ap[start + n] = d
        self.y[n] = y
        self.z1[n] = (1.0 - ell @ self.z1[:n]) / d
        self.zy[n] = (y - ell @ self.zy[:n]) / d
        self.n = n + 1
        self._update_moments()
        return True

    def predict(self, X: np.ndarray, x: np.ndarray) -> tuple[float, float]:
        r = _kernels.corr_vector(X, x, self.theta)
        # zero lag carries the nugget too, so training inputs are reproduced exactly
        r[r == 1.0] += self.nugget
        mean = self.mu + r @ self.w
        v = self._solve_lower(r)
        z1 = self.z1[: self.n]
        mse = self.sigma2 * (1.0 - v @ v + (1.0 - z1 @ v) ** 2 / (z1 @ z1))
        return float(mean), float(max(mse, 0.0))


def concentrated_nll(X: np.ndarray, y: np.ndarray, log10_theta: np.ndarray) -> float:
    """Negative concentrated log-likelihood of an Ordinary Kriging model.

    ``(n/2) ln(sigma2) + (1/2) ln|R|`` with the process mean and variance at
    their closed-form optima. Returns ``inf`` when ``R`` cannot be factorized.
    """
    n = X.shape[0]
    R = _kernels.corr_matrix(X, 10.0**log10_theta)
    nugget = BASE_NUGGET
    while True:
        try:
            L = np.linalg.cholesky(R + nugget * np.eye(n))
            break
        except np.linalg.LinAlgError:
            if nugget >= MAX_NUGGET:
                return math.inf
            nugget *= 10.0
    ones = np.ones(n)
    z1 = blas.dtrsv(L, ones, lower=1)
    zy = blas.dtrsv(L, y, lower=1)
    mu = z1 @ zy / (z1 @ z1)
    resid = zy - mu * z1
    sigma2 = max(resid @ resid / n, 1e-300)
    return 0.5 * n * math.log(sigma2) + float(np.sum(np.log(np.diag(L))))


def _golden_section(f, a: float, b: float, n_evals: int):
    """Minimize ``f`` on ``[a, b]`` with ``n_evals`` evaluations (n_evals >= 2)."""
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(n_evals - 2):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def optimize_theta(
    X: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    *,
    n_starts: int = 8,
    evals_per_start: int = 100,
    log10_bounds: tuple[float, float] = (-3.0, 3.0),
    gs_evals: int = 5,
) -> np.ndarray:
    """Maximize the concentrated likelihood over ``log10(theta)``.

    Multi-start coordinate search: starts come from a Latin Hypercube of the
    log-theta box; from each start the coordinates are refined in turn by a
    golden-section search on a window that halves after every sweep, until
    the per-start evaluation budget is spent.
    """
    K = X.shape[1]
    lo, hi = log10_bounds
    box = Bounds(np.full(K, lo), np.full(K, hi))
    starts = lhs_sample(max(n_starts, 2), box, rng)[:n_starts]
    best_x, best_f = None, math.inf
    for start in starts:
        cur = start.copy()
        f_cur = concentrated_nll(X, y, cur)
        used = 1
        width = (hi - lo) / 4.0
        while used + gs_evals <= evals_per_start:
            for k in range(K):
                if used + gs_evals > evals_per_start:
                    break
                a, b = max(lo, cur[k] - width), min(hi, cur[k] + width)

                def f(t, k=k):
                    trial = cur.copy()
                    trial[k] = t
                    return concentrated_nll(X, y, trial)

                t, ft = _golden_section(f, a, b, gs_evals)
                used += gs_evals
                if ft < f_cur:
                    cur[k], f_cur = t, ft
            width *= 0.5
        if f_cur < best_f or best_x is None:
            best_x, best_f = cur, f_cur
    return 10.0**best_x


class KrigingModel:
    """Per-objective Ordinary Kriging surrogate with incremental reinforcement.

    Hyperparameters are fitted at construction and re-fitted after every
    ``refresh_every`` successful reinforcements; in between, the factor of
    each correlation matrix is extended one row at a time.
    """

    def __init__(
        self,
        bounds: Bounds,
        n_obj: int,
        *,
        rng: np.random.Generator | None = None,
        refresh_every: int = 50,
        n_starts: int = 8,
        evals_per_start: int = 100,
        log10_theta_bounds: tuple[float, float] = (-3.0, 3.0),
        max_fit_points: int = 200,
    ):
        self.bounds = bounds
        self.n_obj = n_obj
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.refresh_every = refresh_every
        self.n_starts = n_starts
        self.evals_per_start = evals_per_start
        self.log10_theta_bounds = log10_theta_bounds
        self.max_fit_points = max_fit_points
        self._X = np.empty((0, bounds.dim))
        self._Y = np.empty((0, n_obj))
        self._n = 0
        self.y_mean = np.zeros(n_obj)
        self.y_scale = np.ones(n_obj)
        self._objectives: list[_Objective] = []
        self.since_refresh = 0
        self.n_refreshes = 0

    # -- construction -------------------------------------------------------

    @classmethod
    def fit(cls, X, Y, bounds: Bounds, **kwargs) -> "KrigingModel":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if X.shape[0] != Y.shape[0]:
            raise ValueError("X and Y need the same number of rows")
        if X.shape[0] < 2:
            raise ValueError("kriging needs at least 2 training points")
        if not np.all(np.isfinite(Y)):
            raise ValueError("training responses must be finite")
        for x in X:
            bounds.check(x)
        U = bounds.normalize(X)
        model = cls(bounds, Y.shape[1], **kwargs)
        for i in range(1, U.shape[0]):
            gap = np.max(np.abs(U[:i] - U[i]), axis=1)
            if np.any(gap < DUPLICATE_TOL):
                raise ValueError(f"training input {i} duplicates an earlier input")
        model._set_data(U, Y)
        model.refresh()
        return model

    def _set_data(self, U: np.ndarray, Y: np.ndarray) -> None:
        cap = max(2 * U.shape[0], 16)
        self._X = np.empty((cap, U.shape[1]))
        self._Y = np.empty((cap, Y.shape[1]))
        self._X[: U.shape[0]] = U
        self._Y[: U.shape[0]] = Y
        self._n = U.shape[0]

    @property
    def n_train(self) -> int:
        return self._n

    @property
    def X_train(self) -> np.ndarray:
        """Training inputs in raw design units."""
        return self.bounds.denormalize(self._X[: self._n])

    @property
    def Y_train(self) -> np.ndarray:
        return self._Y[: self._n].copy()

    @property
    def thetas(self) -> np.ndarray:
        return np.array([o.theta for o in self._objectives])

    def refresh(self, thetas: np.ndarray | None = None, *, restandardize: bool = True) -> None:
        """Re-standardize outputs, re-fit hyperparameters and refactorize.

        Passing ``thetas`` skips the hyperparameter search.
        """
        n = self._n
        U, Y = self._X[:n], self._Y[:n]
        if restandardize:
            self.y_mean = Y.mean(axis=0)
            scale = Y.std(axis=0)
            self.y_scale = np.where(scale > 0, scale, 1.0)
        Ys = (Y - self.y_mean) / self.y_scale
        if thetas is None:
            if n > self.max_fit_points:
                idx = np.sort(self.rng.choice(n, self.max_fit_points, replace=False))
            else:
                idx = np.arange(n)
            thetas = [
                optimize_theta(
                    U[idx],
                    Ys[idx, q],
                    self.rng,
                    n_starts=self.n_starts,
                    evals_per_start=self.evals_per_start,
                    log10_bounds=self.log10_theta_bounds,
                )
                for q in range(self.n_obj)
            ]
        self._objectives = []
        for q in range(self.n_obj):
            obj = _Objective(thetas[q])
            obj.factorize(U, Ys[:, q], capacity=self._X.shape[0])
            self._objectives.append(obj)
        self.since_refresh = 0
        self.n_refreshes += 1

    # -- use --------------------------------------------------------------

    def _is_duplicate(self, u: np.ndarray) -> bool:
        if self._n == 0:
            return False
        gap = np.max(np.abs(self._X[: self._n] - u), axis=1)
        return bool(np.any(gap < DUPLICATE_TOL))

    def contains(self, x) -> bool:
        """True when ``x`` coincides with a stored training input."""
        return self._is_duplicate(self.bounds.normalize(x))

    def predict(self, x) -> FitnessRecord:
        """Predicted objectives with confidence radii (raw objective units)."""
        mean, mse = self.predict_normalized(x)
        phi = self.y_mean + self.y_scale * mean
        delta = self.y_scale * np.sqrt(mse)
        return FitnessRecord.predicted(phi, delta)

    def predict_normalized(self, x):
        """Standardized mean and mean-squared error per objective."""
        u = self.bounds.normalize(x)
        X = self._X[: self._n]
        out = [o.predict(X, u) for o in self._objectives]
        return np.array([m for m, _ in out]), np.array([s for _, s in out])

    def reinforce(self, x, y) -> bool:
        """Add one exactly evaluated pair; returns False for a duplicate input."""
        u = self.bounds.normalize(x)
        y = np.asarray(y, dtype=float)
        if y.shape != (self.n_obj,) or not np.all(np.isfinite(y)):
            raise ValueError("reinforcement responses must be finite with one entry per objective")
        if self._is_duplicate(u):
            log.info("discarding duplicate training input")
            return False
        n = self._n
        if n + 1 > self._X.shape[0]:
            cap = 2 * (n + 1)
            X = np.empty((cap, self._X.shape[1]))
            Y = np.empty((cap, self.n_obj))
            X[:n], Y[:n] = self._X[:n], self._Y[:n]
            self._X, self._Y = X, Y
        X_old = self._X[:n]
        ys = (y - self.y_mean) / self.y_scale
        extended = [o.extend(X_old, u, ys[q]) for q, o in enumerate(self._objectives)]
        self._X[n] = u
        self._Y[n] = y
        self._n = n + 1
        self.since_refresh += 1
        if self.since_refresh >= self.refresh_every:
            self.refresh()
        elif not all(extended):
            log.debug("rank-one extension unsafe at T=%d; refactorizing", self._n)
            self.refresh(thetas=self.thetas, restandardize=False)
        return True

    # -- persistence -------------------------------------------------------

    def to_json(self) -> str:
        def enc(a):
            return [float(format(v, ".17g")) for v in np.ravel(a)]

        doc = {
            "lower": enc(self.bounds.lower),
            "upper": enc(self.bounds.upper),
            "theta": [enc(t) for t in self.thetas],
            "y_mean": enc(self.y_mean),
            "y_scale": enc(self.y_scale),
            "X": [enc(r) for r in self.X_train],
            "U": [enc(r) for r in self._X[: self._n]],
            "Y": [enc(r) for r in self.Y_train],
            "refresh_every": self.refresh_every,
            "since_refresh": self.since_refresh,
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str, **kwargs) -> "KrigingModel":
        doc = json.loads(text)
        bounds = Bounds(doc["lower"], doc["upper"])
        Y = np.array(doc["Y"], dtype=float)
        kwargs.setdefault("refresh_every", doc["refresh_every"])
        model = cls(bounds, Y.shape[1], **kwargs)
        model._set_data(np.array(doc["U"], dtype=float), Y)
        model.y_mean = np.array(doc["y_mean"], dtype=float)
        model.y_scale = np.array(doc["y_scale"], dtype=float)
        model.refresh(thetas=np.array(doc["theta"], dtype=float), restandardize=False)
        model.n_refreshes = 0
        model.since_refresh = doc["since_refresh"]
        return model
