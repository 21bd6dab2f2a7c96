"""Radar-antenna cost terms and an analytic series-fed array stand-in.

The three cost terms are hinge penalties averaged over ``B`` frequency
samples: reflection above the S11 threshold, sidelobe level above the SLL
threshold and beam-pointing deviation above the BDD threshold. A term is 0
exactly when its threshold is met at every frequency (H{0} = 0).

:func:`proxy_antenna_evaluate` is a cheap analytic model of a six-element
series-fed linear array, used in place of a full-wave solver. Its mapping
from the ten design coordinates (all in ``[0, 1]``) is fixed:

====  ==========================================================
x[0]  element spacing ``d / lambda0`` in ``[0.4, 0.7]``
x[1]  amplitude of the two centre elements, ``[0.2, 1]``
x[2]  amplitude of the next pair out, ``[0.2, 1]``
x[3]  amplitude of the edge pair, ``[0.2, 1]``
x[4]  loading sign and strength ``c`` in ``[-1, 1]``
x[5:9]  per-section reflection magnitudes ``r_n`` in ``[0, 0.3]``
x[9]  feed-line length per element, in guided wavelengths, ``[0.97, 1.03]``
====  ==========================================================

Reflection section ``n`` sits ``n`` feed-line lengths from the input, so at
mid-band with a one-wavelength line all sections reflect in phase. The line
delay makes the inter-element phase drift across the band (beam squint);
the reactive loading of the sections, scaled by ``c``, is the only way to
cancel that drift. Matching and pointing therefore compete for the same
parameters.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .. import _kernels
from ..dominance import Bounds
from ..evaluators import Evaluator

log = logging.getLogger(__name__)

DB_FLOOR = -80.0
N_ELEMENTS = 6
THETA_STEP = 0.25
PROXY_VERSION = 1


@dataclass(frozen=True)
class AntennaThresholds:
    f_min: float = 76e9
    f_max: float = 79e9
    B: int = 7
    s11_th: float = -15.0
    sll_th: float = -20.0
    bdd_th: float = 0.25

    def __post_init__(self):
        if not self.f_min < self.f_max:
            raise ValueError("f_min must be below f_max")
        if self.B < 1:
            raise ValueError("B must be at least 1")
        if not all(np.isfinite([self.s11_th, self.sll_th, self.bdd_th])):
            raise ValueError("thresholds must be finite")
        if self.s11_th == 0 or self.sll_th == 0:
            raise ValueError("dB thresholds must be non-zero")
        if not self.bdd_th > 0:
            raise ValueError("bdd_th must be positive")

    def frequencies(self) -> np.ndarray:
        if self.B == 1:
            return np.array([0.5 * (self.f_min + self.f_max)])
        return self.f_min + np.arange(self.B) * (self.f_max - self.f_min) / (self.B - 1)

    @property
    def f0(self) -> float:
        return 0.5 * (self.f_min + self.f_max)


@dataclass(frozen=True)
class AntennaResponse:
    freqs: np.ndarray
    s11_db: np.ndarray
    pattern_db: np.ndarray
    theta_grid: np.ndarray

    def __post_init__(self):
        for name in ("freqs", "s11_db", "pattern_db", "theta_grid"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        B = self.freqs.size
        if B < 1 or self.s11_db.shape != (B,):
            raise ValueError("need one S11 sample per frequency")
        if self.pattern_db.shape != (B, self.theta_grid.size):
            raise ValueError("pattern must be (B, len(theta_grid))")
        if np.any(np.diff(self.theta_grid) <= 0):
            raise ValueError("theta grid must be strictly increasing")


def _hinge(values, threshold, scale) -> float:
    values = np.asarray(values, dtype=float)
    excess = values - threshold
    terms = np.where(excess > 0, excess / scale, 0.0)
    return float(terms.mean())


def _check_grid(resp: AntennaResponse, th: AntennaThresholds) -> None:
    expected = th.frequencies()
    if resp.freqs.shape != expected.shape or not np.allclose(resp.freqs, expected, rtol=1e-12, atol=0):
        raise ValueError("response frequencies do not match the threshold frequency grid")


def phi_s11(resp: AntennaResponse, th: AntennaThresholds) -> float:
    _check_grid(resp, th)
    return _hinge(resp.s11_db, th.s11_th, abs(th.s11_th))


def extract_sll(pattern_db, theta_grid) -> float:
    """Highest level outside the main lobe, in dB; ``-inf`` if there is none.

    The main lobe runs from the global peak down to the first local minimum
    on each side.
    """
    p = np.asarray(pattern_db, dtype=float)
    peak = int(np.argmax(p))
    lo = peak
    while lo > 0 and p[lo - 1] < p[lo]:
        lo -= 1
    hi = peak
    while hi < p.size - 1 and p[hi + 1] < p[hi]:
        hi += 1
    outside = np.concatenate([p[:lo], p[hi + 1 :]])
    if outside.size == 0:
        return -np.inf
    return float(outside.max())


def phi_sll(resp: AntennaResponse, th: AntennaThresholds) -> float:
    _check_grid(resp, th)
    sll = [extract_sll(row, resp.theta_grid) for row in resp.pattern_db]
    return _hinge(sll, th.sll_th, abs(th.sll_th))


def extract_bdd(pattern_db, theta_grid) -> float:
    """Beam direction in degrees, refined by a parabola through the peak samples."""
    p = np.asarray(pattern_db, dtype=float)
    t = np.asarray(theta_grid, dtype=float)
    i = int(np.argmax(p))
    if i == 0 or i == p.size - 1:
        log.info("pattern peak on the grid boundary; no interpolation")
        return float(t[i])
    y0, y1, y2 = p[i - 1], p[i], p[i + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom >= 0:
        return float(t[i])
    offset = 0.5 * (y0 - y2) / denom
    step = 0.5 * (t[i + 1] - t[i - 1])
    return float(t[i] + offset * step)


def phi_bdd(resp: AntennaResponse, th: AntennaThresholds) -> float:
    _check_grid(resp, th)
    bdd = [abs(extract_bdd(row, resp.theta_grid)) for row in resp.pattern_db]
    return _hinge(bdd, th.bdd_th, th.bdd_th)


def antenna_objectives(resp: AntennaResponse, th: AntennaThresholds) -> np.ndarray:
    return np.array([phi_s11(resp, th), phi_sll(resp, th), phi_bdd(resp, th)])


def theta_grid(step: float = THETA_STEP) -> np.ndarray:
    n = int(round(180.0 / step)) + 1
    return np.linspace(-90.0, 90.0, n)


def power_pattern_db(amps, psi_step: float, kd: float, theta_deg) -> np.ndarray:
    """Peak-normalized power pattern of a linear array with cos(theta) elements."""
    power = _kernels.array_power(
        np.asarray(amps, dtype=float), float(psi_step), float(kd), np.radians(theta_deg)
    )
    peak = power.max()
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(power / peak)
    return np.maximum(db, DB_FLOOR)


@dataclass(frozen=True)
class ProxyDesign:
    """Physical parameters of the proxy array.

    The inter-element phase at relative frequency ``nu = f / f0`` is
    ``phase_offset + dispersion * (nu - 1)`` radians; reflection section
    ``n`` (1-based) sits ``n * line_length`` guided wavelengths from the input.
    """

    spacing: float
    amps: np.ndarray
    phase_offset: float
    dispersion: float
    reflections: np.ndarray
    line_length: float

    @classmethod
    def from_unit(cls, x) -> "ProxyDesign":
        x = np.asarray(x, dtype=float)
        if x.shape != (10,):
            raise ValueError("the proxy antenna takes K = 10 design coordinates")
        a = 0.2 + 0.8 * x[1:4]
        slope = -1.0 + 2.0 * x[4]
        reflections = 0.3 * x[5:9]
        line_length = 0.97 + 0.06 * x[9]
        # the line delay disperses by one full cycle per unit relative
        # frequency; reactive loading of the sections can cancel it
        loading = slope * reflections.mean() / 0.3
        return cls(
            spacing=0.4 + 0.3 * x[0],
            amps=np.concatenate([a[::-1], a]),
            phase_offset=2.0 * np.pi * (line_length - 1.0),
            dispersion=2.0 * np.pi * (line_length + _LOADING_GAIN * loading),
            reflections=reflections,
            line_length=line_length,
        )


# dispersion compensation available at full loading
_LOADING_GAIN = 2.0


def proxy_response(design: ProxyDesign, th: AntennaThresholds, step: float = THETA_STEP) -> AntennaResponse:
    freqs = th.frequencies()
    nu = freqs / th.f0
    n = np.arange(1, design.reflections.size + 1)
    round_trip = 2.0 * (2.0 * np.pi * nu[:, None]) * (n[None, :] * design.line_length)
    s11 = np.abs(np.exp(-1j * round_trip) @ design.reflections)
    with np.errstate(divide="ignore"):
        s11_db = np.maximum(20.0 * np.log10(s11), DB_FLOOR)
    psi = design.phase_offset + design.dispersion * (nu - 1.0)
    kd = 2.0 * np.pi * nu * design.spacing
    grid = theta_grid(step)
    pattern = np.array([power_pattern_db(design.amps, p, k, grid) for p, k in zip(psi, kd)])
    return AntennaResponse(freqs, s11_db, pattern, grid)


def proxy_antenna_evaluate(x, th: AntennaThresholds, step: float = THETA_STEP) -> AntennaResponse:
    return proxy_response(ProxyDesign.from_unit(x), th, step)


class ProxyAntennaProblem(Evaluator):
    """Three-objective antenna problem on the analytic proxy model."""

    def __init__(self, thresholds: AntennaThresholds | None = None):
        self.thresholds = thresholds or AntennaThresholds()
        self.bounds = Bounds.unit(10)
        self.n_obj = 3

    def evaluate(self, x):
        x = self.bounds.check(x)
        return self._checked(antenna_objectives(proxy_antenna_evaluate(x, self.thresholds), self.thresholds))
