"""Time-domain integration of resonant, shaped, phased pulse trains.

The state obeys ``i dc/dt = H(t) c`` with

    H(t) = 1/2 [[0, W(t)], [W(t)*, 0]],   W(t) = sum_k Omega_k(t) e^{i phi_k}

(time in units of the pulse duration T).  Overlap model: a fraction ``f``
of each pulse's area sits in raised-cosine tails just outside its slot,
half before and half after.  The tails have width ``tau = f T / (1 - f)``
and start at the rectangular core height ``(1 - f) A / T``, so a
rectangular pulse stays continuous.  Neighbouring envelopes add coherently
with their own phases.

Integration is fixed-step RK4 on a grid that contains every envelope
breakpoint.  Because the equation is linear, each RK4 step is a 2x2 matrix;
finals for a whole area grid are computed at once by multiplying those
matrices, and the step is halved until the final populations settle.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.special import erf

from .errors import ConvergenceError, InvalidInputError
from .profiles import ProfileScan, Source, area_grid, format_value
from .sequences import PhaseList
from .su2 import SU2Propagator

MAX_OVERLAP = 0.05
REFINE_TOL = 1e-10
MAX_SAMPLES = 1 << 15
_NUDGE = 1e-13
_CHUNK_ELEMENTS = 1 << 21


@dataclass(frozen=True)
class PulseShape:
    """Envelope inside the pulse slot.

    ``kind`` is ``"rectangular"``, ``"raised_cosine"`` (``param`` = edge
    fraction of the slot, each side) or ``"gaussian"`` (``param`` = number
    of standard deviations from the centre to the slot edge).
    """

    kind: str = "rectangular"
    param: float = 0.0

    def __post_init__(self):
        if self.kind == "raised_cosine" and not 0 < self.param <= 0.5:
            raise InvalidInputError("raised-cosine edge fraction must lie in (0, 0.5]")
        if self.kind == "gaussian" and not self.param > 0:
            raise InvalidInputError("gaussian truncation must be positive")
        if self.kind not in ("rectangular", "raised_cosine", "gaussian"):
            raise InvalidInputError(f"unknown pulse shape {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "PulseShape":
        """``rect``, ``raised-cosine[:0.2]`` or ``gaussian[:3]``."""
        name, _, arg = text.partition(":")
        name = name.strip().lower().replace("-", "_")
        if name in ("rect", "rectangular"):
            return cls("rectangular")
        if name in ("raised_cosine", "cosine", "rc"):
            return cls("raised_cosine", float(arg) if arg else 0.2)
        if name in ("gaussian", "gauss"):
            return cls("gaussian", float(arg) if arg else 3.0)
        raise InvalidInputError(f"unknown pulse shape {text!r}")

    def core(self, u):
        """Unit-area envelope on u in [0, 1] (zero outside)."""
        u = np.asarray(u, dtype=float)
        inside = (u >= 0) & (u <= 1)
        if self.kind == "rectangular":
            g = np.ones_like(u)
        elif self.kind == "raised_cosine":
            e = self.param
            d = np.minimum(u, 1 - u)
            g = np.where(d < e, 0.5 * (1 - np.cos(np.pi * np.clip(d, 0, None) / e)), 1.0)
            g = g / (1 - e)
        else:
            sigma = 0.5 / self.param
            norm = sigma * math.sqrt(2 * math.pi) * erf(self.param / math.sqrt(2))
            g = np.exp(-0.5 * ((u - 0.5) / sigma) ** 2) / norm
        return np.where(inside, g, 0.0)

    def breakpoints(self):
        if self.kind == "raised_cosine":
            return [self.param, 1 - self.param]
        return []


@dataclass(frozen=True)
class PulseTrainSpec:
    phases: PhaseList
    area: float                      # per-pulse area, radians
    shape: PulseShape = PulseShape()
    overlap_fraction: float = 0.0
    inter_pulse_gap: float = 0.0
    pulse_duration: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.area):
            raise InvalidInputError("pulse area must be finite")
        if not 0 <= self.overlap_fraction <= MAX_OVERLAP:
            raise InvalidInputError(
                f"overlap fraction must lie in [0, {MAX_OVERLAP}], got {self.overlap_fraction}")
        if self.inter_pulse_gap < 0 or self.pulse_duration <= 0:
            raise InvalidInputError("gap must be >= 0 and duration > 0")
        if len(self.phases) == 0:
            raise InvalidInputError("pulse train needs at least one pulse")

    @classmethod
    def with_amplitude_error(cls, phases, epsilon, **kw):
        """Train whose pulses have area (1 - epsilon) pi."""
        return cls(phases, (1 - epsilon) * math.pi, **kw)

    @property
    def tail_width(self) -> float:
        f = self.overlap_fraction
        return f * self.pulse_duration / (1 - f)

    def slot_starts(self) -> np.ndarray:
        step = self.pulse_duration + self.inter_pulse_gap
        return np.arange(len(self.phases)) * step

    @property
    def t_start(self) -> float:
        return -self.tail_width

    @property
    def t_end(self) -> float:
        return self.slot_starts()[-1] + self.pulse_duration + self.tail_width

    def envelope(self, t, k: int, area: float = 1.0):
        """Real Rabi envelope of pulse k (0-based) at times t."""
        t = np.asarray(t, dtype=float)
        T = self.pulse_duration
        f = self.overlap_fraction
        t0 = self.slot_starts()[k]
        out = area * (1 - f) * self.shape.core((t - t0) / T) / T
        tau = self.tail_width
        if tau > 0:
            height = area * (1 - f) / T
            before = t0 - t
            after = t - (t0 + T)
            for s in (before, after):
                m = (s > 0) & (s <= tau)
                out = out + np.where(m, height * 0.5 * (1 + np.cos(np.pi * s / tau)), 0.0)
        return out

    def drive(self, t, area: float = 1.0):
        """Complex coherent sum of all envelopes at times t."""
        t = np.asarray(t, dtype=float)
        total = np.zeros(t.shape, dtype=complex)
        for k, phi in enumerate(self.phases.radians):
            total += self.envelope(t, k, area) * np.exp(1j * phi)
        if not np.all(np.isfinite(total)):
            raise InvalidInputError("non-finite pulse envelope")
        return total

    def breakpoints(self) -> np.ndarray:
        T = self.pulse_duration
        tau = self.tail_width
        pts = []
        for t0 in self.slot_starts():
            pts += [t0, t0 + T] + [t0 + b * T for b in self.shape.breakpoints()]
            if tau > 0:
                pts += [t0 - tau, t0 + T + tau]
        return np.unique(np.round(np.array(pts), 14))

    def time_grid(self, samples_per_pulse: int) -> np.ndarray:
        h = self.pulse_duration / samples_per_pulse
        min_steps = max(1, samples_per_pulse // 16)
        bp = self.breakpoints()
        pieces = []
        for lo, hi in zip(bp[:-1], bp[1:]):
            # short segments (overlap tails, edges) keep a floor that also halves
            n = max(min_steps, int(math.ceil((hi - lo) / h - 1e-9)))
            pieces.append(np.linspace(lo, hi, n + 1)[:-1])
        pieces.append(bp[-1:])
        return np.concatenate(pieces)


@dataclass
class EvolutionTrace:
    times: np.ndarray
    populations: np.ndarray
    final_propagator: SU2Propagator
    norms: np.ndarray = field(default=None)
    samples_per_pulse: int = 0

    @property
    def final_population(self) -> float:
        return float(self.populations[-1])

    def max_norm_error(self) -> float:
        return float(np.max(np.abs(self.norms - 1.0)))

    def to_csv(self, pulse_duration=1.0, round_digits=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time_over_T", "population"])
        for t, p in zip(self.times, self.populations):
            w.writerow([format_value(t / pulse_duration, round_digits),
                        format_value(p, round_digits)])
        return buf.getvalue()


def _stage_drives(train: PulseTrainSpec, grid: np.ndarray):
    t0, t1 = grid[:-1], grid[1:]
    h = t1 - t0
    nudge = _NUDGE * train.pulse_duration
    w1 = train.drive(t0 + nudge)
    w2 = train.drive(t0 + h / 2)
    w3 = train.drive(t1 - nudge)
    return h, w1, w2, w3


# Batches of 2x2 matrices are tuples (m11, m12, m21, m22) of equal-shape
# arrays; element-wise products beat np.matmul on tiny matrices by far.

def _mul(x, y):
    return (x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3],
            x[2] * y[0] + x[3] * y[2], x[2] * y[1] + x[3] * y[3])


def _gen_mul(z, y, m):
    """[[0, z], [y, 0]] @ m for off-diagonal generators."""
    return (z * m[2], z * m[3], y * m[0], y * m[1])


def _rk4_steps(h, w1, w2, w3, scale):
    """RK4 one-step propagators for every (area, step), arrays of shape (M, S).

    With ``-iH = [[0, z], [y, 0]]``, ``z = -i/2 W``, ``y = -i/2 W*``.
    """
    h = h[None, :]
    scale = np.asarray(scale, dtype=float)[:, None]
    z1, z2, z3 = (-0.5j * scale * w[None, :] for w in (w1, w2, w3))
    y1, y2, y3 = (-0.5j * scale * np.conj(w)[None, :] for w in (w1, w2, w3))
    one = np.ones_like(z1)
    zero = np.zeros_like(z1)
    m1 = (zero, z1, y1, zero)
    # Y1 = I + h/2 M1
    s1 = (one, 0.5 * h * z1, 0.5 * h * y1, one)
    k2 = _gen_mul(z2, y2, s1)
    s2 = (one + 0.5 * h * k2[0], 0.5 * h * k2[1], 0.5 * h * k2[2], one + 0.5 * h * k2[3])
    k3 = _gen_mul(z2, y2, s2)
    s3 = (one + h * k3[0], h * k3[1], h * k3[2], one + h * k3[3])
    k4 = _gen_mul(z3, y3, s3)
    c = h / 6.0
    return tuple(
        (1.0 if i in (0, 3) else 0.0) + c * (m1[i] + 2 * k2[i] + 2 * k3[i] + k4[i])
        for i in range(4))


def _ordered_product(steps):
    """Product S_n ... S_2 S_1 along the last axis by pairwise reduction."""
    while steps[0].shape[-1] > 1:
        if steps[0].shape[-1] % 2:
            lead = steps[0].shape[:-1] + (1,)
            pad = (np.ones(lead), np.zeros(lead), np.zeros(lead), np.ones(lead))
            steps = tuple(np.concatenate([s, p], axis=-1) for s, p in zip(steps, pad))
        steps = _mul(tuple(s[..., 1::2] for s in steps), tuple(s[..., 0::2] for s in steps))
    return tuple(s[..., 0] for s in steps)


def _final_propagators(train, areas, samples_per_pulse):
    grid = train.time_grid(samples_per_pulse)
    h, w1, w2, w3 = _stage_drives(train, grid)
    areas = np.asarray(areas, dtype=float)
    chunk = max(1, _CHUNK_ELEMENTS // max(len(h), 1))
    out = np.empty((len(areas), 2, 2), dtype=complex)
    for i in range(0, len(areas), chunk):
        sl = slice(i, i + chunk)
        p = _ordered_product(_rk4_steps(h, w1, w2, w3, areas[sl]))
        out[sl] = np.stack([np.stack(p[:2], -1), np.stack(p[2:], -1)], -2)
    return out


def final_populations(train: PulseTrainSpec, areas=None,
                      samples_per_pulse: int = 16, tol: float = REFINE_TOL,
                      return_samples: bool = False):
    """Excited-state population at the end of the train, for each per-pulse area.

    ``train.area`` is ignored; the drive is scaled to every value in
    ``areas``.  The step is halved until successive finals agree within
    ``tol`` everywhere.
    """
    if samples_per_pulse < 16:
        raise InvalidInputError("samples_per_pulse must be at least 16")
    areas = np.atleast_1d(np.asarray(
        [train.area] if areas is None else areas, dtype=float))
    n = int(samples_per_pulse)
    prev = None
    while n <= MAX_SAMPLES:
        props = _final_propagators(train, areas, n)
        pops = np.abs(props[:, 1, 0]) ** 2
        if prev is not None and np.max(np.abs(pops - prev)) < tol:
            return (pops, n) if return_samples else pops
        prev = pops
        n *= 2
    raise ConvergenceError(f"step halving did not reach {tol:g} by {MAX_SAMPLES} samples/pulse")


def integrate(train: PulseTrainSpec, samples_per_pulse: int = 16,
              tol: float = REFINE_TOL) -> EvolutionTrace:
    """Population history for one train, initial state (1, 0)."""
    _, n = final_populations(train, None, samples_per_pulse, tol, return_samples=True)
    grid = train.time_grid(n)
    h, w1, w2, w3 = _stage_drives(train, grid)
    m11, m12, m21, m22 = (x[0] for x in _rk4_steps(h, w1, w2, w3, [train.area]))
    states = np.empty((len(grid), 2), dtype=complex)
    c1, c2 = 1.0 + 0j, 0j
    states[0] = (c1, c2)
    for i in range(len(m11)):
        c1, c2 = m11[i] * c1 + m12[i] * c2, m21[i] * c1 + m22[i] * c2
        states[i + 1] = (c1, c2)
    pops = np.abs(states[:, 1]) ** 2
    norms = np.sum(np.abs(states) ** 2, axis=1)
    total = _ordered_product((m11[None], m12[None], m21[None], m22[None]))
    # first column of the product is (a, -b*) for [[a, b], [-b*, a*]]
    final = SU2Propagator(complex(total[0][0]), complex(-np.conj(total[2][0])))
    return EvolutionTrace(grid, pops, final, norms, n)


def evolution_trace_pair(ph: PhaseList, epsilon: float, **train_kw):
    """Traces for per-pulse areas (1 - epsilon) pi and epsilon pi."""
    if not 0 < epsilon < 1:
        raise InvalidInputError("epsilon must lie in (0, 1)")
    upper = integrate(PulseTrainSpec(ph, (1 - epsilon) * math.pi, **train_kw))
    lower = integrate(PulseTrainSpec(ph, epsilon * math.pi, **train_kw))
    return upper, lower


def overlap_scan(ph: PhaseList, overlaps: Sequence[float], areas=None,
                 shape: Optional[PulseShape] = None, samples_per_pulse: int = 16,
                 tol: float = REFINE_TOL) -> List[ProfileScan]:
    """One time-domain profile per overlap fraction, in input order."""
    areas = area_grid(points=401) if areas is None else np.asarray(areas, dtype=float)
    shape = shape or PulseShape()
    scans = []
    for f in overlaps:
        train = PulseTrainSpec(ph, math.pi, shape=shape, overlap_fraction=float(f))
        pops = final_populations(train, areas, samples_per_pulse, tol)
        label = f"{ph.label} overlap={f:g}"
        scans.append(ProfileScan(areas, np.clip(pops, 0.0, 1.0), Source.TIME_DOMAIN, label))
    return scans


def overlap_csv(overlaps, scans, round_digits=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["overlap_fraction", "area_over_pi", "probability"])
    for f, scan in zip(overlaps, scans):
        for a, p in zip(scan.areas, scan.probabilities):
            w.writerow([format_value(f, round_digits), format_value(a / math.pi, round_digits),
                        format_value(p, round_digits)])
    return buf.getvalue()
