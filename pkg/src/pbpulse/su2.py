"""Resonant two-state propagators and their phased compositions.

A resonant pulse of area ``A`` acts as the SU(2) matrix

    [[ a,        b e^{i phi} ],
     [ -b* e^{-i phi},  a*   ]]

with ``a = cos(A/2)`` and ``b = -i sin(A/2)``.  Sequences are composed with
the first pulse as the rightmost factor, so ``phases[0]`` acts first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Union

import numpy as np

from .errors import ConsistencyError, InvalidInputError

# Probabilities may overshoot [0, 1] by this much from rounding before we
# treat the excursion as a bug.
CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class Phase:
    """A phase stored exactly as a rational multiple of pi.

    >>> Phase(Fraction(-2, 3)).canonical()
    Phase(over_pi=Fraction(4, 3))
    """

    over_pi: Fraction

    def __post_init__(self):
        if not isinstance(self.over_pi, Fraction):
            object.__setattr__(self, "over_pi", Fraction(self.over_pi))

    @cached_property
    def radians(self) -> float:
        return float(self.over_pi) * math.pi

    def __float__(self):
        return self.radians

    def __add__(self, other: "Phase") -> "Phase":
        return Phase(self.over_pi + other.over_pi)

    def __neg__(self) -> "Phase":
        return Phase(-self.over_pi)

    def canonical(self) -> "Phase":
        """Reduce into [0, 2pi)."""
        return Phase(self.over_pi % 2)

    def __str__(self):
        return f"{self.over_pi}π"


PhaseLike = Union[Phase, float]


def _radians(phi: PhaseLike) -> float:
    return phi.radians if isinstance(phi, Phase) else float(phi)


@dataclass(frozen=True)
class SU2Propagator:
    """Cayley-Klein pair (a, b) of the matrix [[a, b], [-b*, a*]]."""

    a: complex
    b: complex

    @property
    def matrix(self) -> np.ndarray:
        a, b = self.a, self.b
        return np.array([[a, b], [-b.conjugate(), a.conjugate()]], dtype=complex)

    @property
    def det(self) -> float:
        return abs(self.a) ** 2 + abs(self.b) ** 2

    def __matmul__(self, other: "SU2Propagator") -> "SU2Propagator":
        # self acts after other
        a1, b1 = other.a, other.b
        a2, b2 = self.a, self.b
        return SU2Propagator(
            a2 * a1 - b2 * b1.conjugate(),
            a2 * b1 + b2 * a1.conjugate(),
        )

    @classmethod
    def identity(cls) -> "SU2Propagator":
        return cls(1.0 + 0j, 0j)


def resonant_propagator(area: float) -> SU2Propagator:
    """Propagator of a single resonant pulse of the given area (radians)."""
    area = float(area)
    if not math.isfinite(area):
        raise InvalidInputError(f"pulse area must be finite, got {area!r}")
    return SU2Propagator(complex(math.cos(area / 2)), -1j * math.sin(area / 2))


def phased(u: SU2Propagator, phi: PhaseLike) -> SU2Propagator:
    """Apply a constant drive phase: b -> b e^{i phi}, diagonal untouched."""
    return SU2Propagator(u.a, u.b * np.exp(1j * _radians(phi)))


def compose_sequence(area: float, phases: Iterable[PhaseLike]) -> SU2Propagator:
    """Propagator of equal-area pulses with the given phases, first pulse first."""
    phases = list(phases)
    if not phases:
        raise InvalidInputError("phase list must be non-empty")
    single = resonant_propagator(area)
    total = SU2Propagator.identity()
    for phi in phases:
        total = phased(single, phi) @ total
    return total


def transition_probability(u: SU2Propagator) -> float:
    """Population transferred out of state 1, i.e. |U_12|^2."""
    return _checked_probability(abs(u.b) ** 2)


def _checked_probability(p):
    p = np.asarray(p, dtype=float)
    if np.any(p < -CLAMP_TOL) or np.any(p > 1 + CLAMP_TOL):
        raise ConsistencyError(
            f"probability outside [0, 1] beyond tolerance: "
            f"min={p.min():.3e}, max={p.max():.3e}")
    p = np.clip(p, 0.0, 1.0)
    return float(p) if p.ndim == 0 else p


def compose_arrays(areas, phases_rad):
    """Vectorised composition over an array of areas.

    Returns the Cayley-Klein arrays ``(a, b)`` with the same shape as
    ``areas``.  ``phases_rad`` are floats in radians, in pulse order.
    """
    areas = np.asarray(areas, dtype=float)
    if not np.all(np.isfinite(areas)):
        raise InvalidInputError("pulse areas must be finite")
    phases_rad = np.asarray(phases_rad, dtype=float)
    if phases_rad.size == 0:
        raise InvalidInputError("phase list must be non-empty")
    a1 = np.cos(areas / 2).astype(complex)
    s1 = -1j * np.sin(areas / 2)
    ua = np.ones_like(a1)
    ub = np.zeros_like(a1)
    for phi in phases_rad:
        b1 = s1 * np.exp(1j * phi)
        ua, ub = a1 * ua - b1 * np.conj(ub), a1 * ub + b1 * np.conj(ua)
    return ua, ub


def transition_probabilities(areas, phases_rad) -> np.ndarray:
    """|U_12|^2 over an array of areas; see :func:`compose_arrays`."""
    _, ub = compose_arrays(areas, phases_rad)
    return _checked_probability(np.abs(ub) ** 2)
