"""Inversion profiles: brute-force scans, closed forms, widths and bands.

Closed forms are written in terms of the single-pulse probability
``p = sin^2(A/2)``:

* broadband   ``1 - (1-p)^N_b``
* narrowband  ``p^N_n``
* N(B)        ``(1 - (1-p)^N_b)^N_n``
* B(N)        ``1 - (1 - p^N_n)^N_b``

A broadband sequence is the N(B) family with ``N_n = 1`` and a narrowband
sequence is B(N) with ``N_b = 1``; the width/steepness helpers use that.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from .errors import ConsistencyError, InvalidInputError
from .sequences import Kind, PhaseList
from .su2 import CLAMP_TOL, compose_arrays, transition_probabilities

TWO_PI = 2 * math.pi
DEFAULT_POINTS = 2001
DEFAULT_THRESHOLD = 1e-4
EDGE_TOL = 1e-10
LN2 = math.log(2)


class Source(str, Enum):
    MATRIX = "MatrixProduct"
    ANALYTIC_BB = "AnalyticBB"
    ANALYTIC_NB = "AnalyticNB"
    ANALYTIC_PB = "AnalyticPB"
    TIME_DOMAIN = "TimeDomain"


@dataclass(frozen=True)
class ProfileScan:
    areas: np.ndarray
    probabilities: np.ndarray
    source: Source
    sequence_label: str = ""

    def __post_init__(self):
        areas = np.asarray(self.areas, dtype=float)
        probs = np.asarray(self.probabilities, dtype=float)
        if areas.shape != probs.shape or areas.ndim != 1:
            raise ConsistencyError("areas and probabilities must be 1-D of equal length")
        if areas.size > 1 and np.any(np.diff(areas) <= 0):
            raise ConsistencyError("areas must be strictly increasing")
        if np.any(probs < -CLAMP_TOL) or np.any(probs > 1 + CLAMP_TOL):
            raise ConsistencyError("probabilities outside [0, 1]")
        object.__setattr__(self, "areas", areas)
        object.__setattr__(self, "probabilities", probs)

    def to_csv(self, round_digits: Optional[int] = None) -> str:
        return profile_csv(self.areas, self.probabilities, round_digits=round_digits)


Interval = Optional[Tuple[float, float]]


@dataclass(frozen=True)
class ProfileMetrics:
    hwhm: float
    steepness_interval: float
    top_band: Interval
    bottom_band_0: Interval
    bottom_band_2pi: Interval
    threshold: float
    method: str = "analytic"

    @property
    def bottom_bands(self):
        return (self.bottom_band_0, self.bottom_band_2pi)

    def to_dict(self) -> dict:
        band = lambda b: None if b is None else [b[0], b[1]]
        return {
            "hwhm_rad": self.hwhm,
            "steepness_rad": self.steepness_interval,
            "top_band": band(self.top_band),
            "bottom_band_0": band(self.bottom_band_0),
            "bottom_band_2pi": band(self.bottom_band_2pi),
            "threshold": self.threshold,
            "method": self.method,
        }

    def to_json(self, indent=2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


# ---------------------------------------------------------------------------
# grids and brute-force scans

def area_grid(start: float = 0.0, stop: float = TWO_PI,
              points: int = DEFAULT_POINTS) -> np.ndarray:
    if not (math.isfinite(start) and math.isfinite(stop)) or stop <= start:
        raise InvalidInputError(f"invalid area range [{start}, {stop}]")
    if int(points) < 2:
        raise InvalidInputError("an area grid needs at least 2 points")
    return np.linspace(start, stop, int(points))


def scan_matrix(ph: PhaseList, areas=None, workers: int = 1) -> ProfileScan:
    """Transition probability from the full propagator product at each area.

    With ``workers > 1`` the grid is split into contiguous chunks evaluated
    in a thread pool and reassembled in order, so the output does not depend
    on the worker count.
    """
    areas = area_grid() if areas is None else np.asarray(areas, dtype=float)
    if areas.ndim != 1 or areas.size == 0:
        raise InvalidInputError("area grid must be a non-empty 1-D array")
    phases = ph.radians
    if workers and workers > 1 and areas.size >= 2 * workers:
        chunks = np.array_split(areas, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: transition_probabilities(c, phases), chunks))
        probs = np.concatenate(parts)
    else:
        probs = transition_probabilities(areas, phases)
    return ProfileScan(areas, probs, Source.MATRIX, ph.label)


def _p(area):
    return np.sin(np.asarray(area, dtype=float) / 2) ** 2


def analytic_bb(n_b: int, area):
    """Broadband profile ``1 - cos^(2 n_b)(A/2)``."""
    return 1.0 - np.cos(np.asarray(area, dtype=float) / 2) ** (2 * n_b)


def analytic_nb(n_n: int, area):
    """Narrowband profile ``sin^(2 n_n)(A/2)``."""
    return _p(area) ** n_n


def _kind(kind) -> Kind:
    try:
        k = Kind(kind)
    except ValueError:
        raise InvalidInputError(f"unknown passband kind {kind!r}") from None
    if k not in (Kind.NESTED_NB, Kind.NESTED_BN):
        raise InvalidInputError(f"expected N(B) or B(N), got {k.value}")
    return k


def analytic_pb(kind, n_b: int, n_n: int, area):
    kind = _kind(kind)
    if kind is Kind.NESTED_NB:
        # 1 - (1-p)^N_b written via cos to keep precision near A = 0
        return analytic_bb(n_b, area) ** n_n
    return 1.0 - (1.0 - analytic_nb(n_n, area)) ** n_b


def _pb_params(ph: PhaseList):
    """Map a generated sequence onto (kind, N_b, N_n) of the nested family."""
    if ph.kind is Kind.NESTED_NB or ph.kind is Kind.NESTED_BN:
        return ph.kind, ph.n_b, ph.n_n
    if ph.kind is Kind.BROADBAND:
        return Kind.NESTED_NB, ph.n_b, 1
    if ph.kind is Kind.NARROWBAND:
        return Kind.NESTED_BN, 1, ph.n_n
    if ph.kind is Kind.SINGLE:
        return Kind.NESTED_NB, 1, 1
    return None


def has_closed_form(ph: PhaseList) -> bool:
    return _pb_params(ph) is not None and None not in _pb_params(ph)


def analytic_profile(ph: PhaseList, areas) -> np.ndarray:
    params = _pb_params(ph)
    if params is None or None in params:
        raise InvalidInputError(f"no closed-form profile for {ph.kind.value} sequences")
    return analytic_pb(*params, areas)


def scan_analytic(ph: PhaseList, areas=None) -> ProfileScan:
    areas = area_grid() if areas is None else np.asarray(areas, dtype=float)
    source = {Kind.BROADBAND: Source.ANALYTIC_BB,
              Kind.NARROWBAND: Source.ANALYTIC_NB}.get(ph.kind, Source.ANALYTIC_PB)
    return ProfileScan(areas, analytic_profile(ph, areas), source, ph.label)


# ---------------------------------------------------------------------------
# half width and steepness

def half_max_probability(kind, n_b: int, n_n: int) -> float:
    """Single-pulse probability p at which the nested profile equals 1/2."""
    kind = _kind(kind)
    if kind is Kind.NESTED_NB:
        return 1.0 - (1.0 - 2.0 ** (-1.0 / n_n)) ** (1.0 / n_b)
    return (1.0 - 2.0 ** (-1.0 / n_b)) ** (1.0 / n_n)


def hwhm_exact(kind, n_b: int, n_n: int) -> float:
    """Half width at half maximum, measured from A = pi (radians)."""
    p_half = half_max_probability(kind, n_b, n_n)
    return math.pi - 2.0 * math.asin(math.sqrt(p_half))


def hwhm_asymptotic(kind, n_b: int, n_n: int) -> float:
    """Large-N approximation of :func:`hwhm_exact`."""
    if _kind(kind) is Kind.NESTED_NB:
        return math.pi - 2.0 * math.sqrt(math.log(n_n / LN2) / n_b)
    return 2.0 * math.sqrt(math.log(n_b / LN2) / n_n)


def steepness_exact(kind, n_b: int, n_n: int) -> float:
    """Reciprocal slope dA/dP of the profile at its P = 1/2 crossing."""
    if _kind(kind) is Kind.NESTED_NB:
        q = 1.0 - 2.0 ** (-1.0 / n_n)
        return 2.0 / (n_b * n_n * (2.0 ** (1.0 / n_n) - 1.0)
                      * math.sqrt(q ** (-1.0 / n_b) - 1.0))
    q = 1.0 - 2.0 ** (-1.0 / n_b)
    return (2.0 * q ** (1.0 / (2 * n_n))
            / (n_b * n_n * (2.0 ** (1.0 / n_b) - 1.0) * math.sqrt(1.0 - q ** (1.0 / n_n))))


def steepness_asymptotic(kind, n_b: int, n_n: int) -> float:
    if _kind(kind) is Kind.NESTED_NB:
        return (2.0 / LN2) / math.sqrt(n_b * math.log(n_n / LN2))
    return (2.0 / LN2) / math.sqrt(n_n * math.log(n_b / LN2))


def _bisect(f, lo, hi, tol):
    """Root of f on [lo, hi] given a sign change; stops at width < tol."""
    flo = f(lo)
    if flo == 0:
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _point_probability(phases_rad, area):
    return float(transition_probabilities(np.array([area]), phases_rad)[0])


def half_max_crossing(ph: PhaseList, points: int = DEFAULT_POINTS,
                      tol: float = 1e-14) -> float:
    """Area below pi where the matrix-product profile crosses P = 1/2.

    The crossing closest to pi is returned, i.e. P >= 1/2 on (A, pi].
    """
    phases = ph.radians
    grid = np.linspace(0.0, math.pi, points)
    probs = transition_probabilities(grid, phases)
    if probs[-1] < 0.5:
        raise InvalidInputError(f"{ph.label or 'sequence'} does not reach P = 1/2 at A = pi")
    below = np.nonzero(probs < 0.5)[0]
    if below.size == 0:
        return 0.0
    i = below[-1]
    return _bisect(lambda a: _point_probability(phases, a) - 0.5, grid[i], grid[i + 1], tol)


def hwhm_numeric(ph: PhaseList) -> float:
    return math.pi - half_max_crossing(ph)


def slope_at(ph: PhaseList, area: float, h: float = 1e-4) -> float:
    """dP/dA by Richardson-extrapolated central differences."""
    phases = ph.radians

    def central(step):
        pts = np.array([area - step, area + step])
        lo, hi = transition_probabilities(pts, phases)
        return (hi - lo) / (2 * step)

    return (4.0 * central(h / 2) - central(h)) / 3.0


def steepness_numeric(ph: PhaseList) -> float:
    return 1.0 / slope_at(ph, half_max_crossing(ph))


# ---------------------------------------------------------------------------
# fidelity bands

def _band(f, grid, values, anchor, tol):
    """Maximal interval around grid[anchor] where f < 0, edges refined by bisection."""
    if not values[anchor] < 0:
        return None
    n = len(grid)
    i = anchor
    while i > 0 and values[i - 1] < 0:
        i -= 1
    j = anchor
    while j < n - 1 and values[j + 1] < 0:
        j += 1
    lo = grid[0] if i == 0 else _bisect(f, grid[i - 1], grid[i], tol)
    hi = grid[-1] if j == n - 1 else _bisect(f, grid[j], grid[j + 1], tol)
    return (float(lo), float(hi))


def fidelity_bands(ph: PhaseList, threshold: float = DEFAULT_THRESHOLD,
                   areas=None, tol: float = EDGE_TOL) -> ProfileMetrics:
    """High-fidelity ranges: 1 - P < threshold around pi, P < threshold near 0 and 2pi.

    Empty bands are reported as ``None``.  Width and steepness come from the
    closed forms when the sequence belongs to a generated family, otherwise
    from the matrix-product profile.
    """
    if not 0 < threshold < 1:
        raise InvalidInputError(f"threshold must lie in (0, 1), got {threshold}")
    grid = area_grid() if areas is None else np.asarray(areas, dtype=float)
    phases = ph.radians
    ua, ub = compose_arrays(grid, phases)
    infidelity = np.abs(ua) ** 2
    excitation = np.abs(ub) ** 2

    def top_f(a):
        u, _ = compose_arrays(np.array([a]), phases)
        return abs(u[0]) ** 2 - threshold

    def bottom_f(a):
        _, u = compose_arrays(np.array([a]), phases)
        return abs(u[0]) ** 2 - threshold

    top = _band(top_f, grid, infidelity - threshold,
                int(np.argmin(np.abs(grid - math.pi))), tol)
    b0 = _band(bottom_f, grid, excitation - threshold,
               int(np.argmin(np.abs(grid))), tol)
    b2 = _band(bottom_f, grid, excitation - threshold,
               int(np.argmin(np.abs(grid - TWO_PI))), tol)

    params = _pb_params(ph)
    if params is not None and None not in params:
        hwhm, steep, method = hwhm_exact(*params), steepness_exact(*params), "analytic"
    else:
        hwhm, steep, method = hwhm_numeric(ph), steepness_numeric(ph), "numeric"
    return ProfileMetrics(hwhm, steep, top, b0, b2, threshold, method)


# ---------------------------------------------------------------------------
# CSV output

def format_value(x: float, round_digits: Optional[int] = None) -> str:
    if abs(x) < 1e-300:
        x = 0.0
    if round_digits is not None:
        return f"{x:.{round_digits}g}"
    return f"{x:.17g}"


def profile_csv(areas, probabilities, round_digits=None, overlap=None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["area_over_pi", "probability"]
    if overlap is not None:
        header = ["overlap_fraction"] + header
    writer.writerow(header)
    for a, p in zip(areas, probabilities):
        row = [format_value(a / math.pi, round_digits), format_value(p, round_digits)]
        if overlap is not None:
            row = [format_value(overlap, round_digits)] + row
        writer.writerow(row)
    return buf.getvalue()


def read_profile_csv(text: str):
    """Parse CSV written by :func:`profile_csv`; returns (areas_rad, probabilities)."""
    rows = list(csv.DictReader(io.StringIO(text)))
    areas = np.array([float(r["area_over_pi"]) for r in rows]) * math.pi
    probs = np.array([float(r["probability"]) for r in rows])
    return areas, probs
