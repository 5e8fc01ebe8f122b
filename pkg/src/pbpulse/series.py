"""Truncated power series in the area offset, for exact derivatives.

Every quantity is carried as its Taylor coefficients in ``eps = A - A0`` up
to a fixed order; products are truncated convolutions.  Composing the pulse
propagators over these series gives all derivatives of the sequence
propagator at ``A0`` to machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .su2 import _radians

MAX_ORDER = 64


class SeriesElement:
    """Complex Taylor coefficients ``c[0] + c[1] eps + ... + c[order] eps^order``."""

    __slots__ = ("coefficients",)

    def __init__(self, coefficients):
        self.coefficients = np.asarray(coefficients, dtype=complex)

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    @classmethod
    def constant(cls, value, order):
        c = np.zeros(order + 1, dtype=complex)
        c[0] = value
        return cls(c)

    def _coerce(self, other):
        if isinstance(other, SeriesElement):
            if other.order != self.order:
                raise InvalidInputError("series orders differ")
            return other
        return SeriesElement.constant(other, self.order)

    def __add__(self, other):
        return SeriesElement(self.coefficients + self._coerce(other).coefficients)

    __radd__ = __add__

    def __sub__(self, other):
        return SeriesElement(self.coefficients - self._coerce(other).coefficients)

    def __rsub__(self, other):
        return SeriesElement(self._coerce(other).coefficients - self.coefficients)

    def __neg__(self):
        return SeriesElement(-self.coefficients)

    def __mul__(self, other):
        if isinstance(other, SeriesElement):
            n = self.order + 1
            return SeriesElement(np.convolve(self.coefficients, other.coefficients)[:n])
        return SeriesElement(self.coefficients * other)

    __rmul__ = __mul__

    def conj(self):
        # the expansion variable is real, so conjugation acts coefficient-wise
        return SeriesElement(np.conj(self.coefficients))

    def derivative(self, k: int) -> complex:
        """k-th derivative at the expansion point."""
        return complex(math.factorial(k) * self.coefficients[k])

    def derivatives(self) -> np.ndarray:
        fact = np.array([math.factorial(k) for k in range(self.order + 1)], dtype=float)
        return self.coefficients * fact

    def __call__(self, eps):
        return np.polyval(self.coefficients[::-1], eps)

    def __repr__(self):
        return f"SeriesElement({self.coefficients!r})"


def _exact_trig(area0: float):
    """cos/sin of A0/2 with exact zeros at multiples of pi."""
    ratio = area0 / math.pi
    if ratio == round(ratio):
        m = int(round(ratio)) % 4
        return [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)][m]
    return math.cos(area0 / 2), math.sin(area0 / 2)


def half_angle_series(area0: float, order: int):
    """Series of cos((A0+eps)/2) and sin((A0+eps)/2) around eps = 0."""
    c0, s0 = _exact_trig(area0)
    k = np.arange(order + 1)
    fact = np.array([math.factorial(int(i)) for i in k], dtype=float)
    scale = 0.5 ** k / fact
    # cos(eps/2) and sin(eps/2) coefficients, exact zeros in alternate slots
    cos_e = np.where(k % 2 == 0, scale * (-1.0) ** (k // 2), 0.0)
    sin_e = np.where(k % 2 == 1, scale * (-1.0) ** (k // 2), 0.0)
    cos_s = c0 * cos_e - s0 * sin_e
    sin_s = s0 * cos_e + c0 * sin_e
    return SeriesElement(cos_s), SeriesElement(sin_s)


@dataclass(frozen=True)
class SeriesPropagator:
    """Cayley-Klein pair of series; the matrix is [[a, b], [-b*, a*]]."""

    a: SeriesElement
    b: SeriesElement

    @property
    def u11(self):
        return self.a

    @property
    def u12(self):
        return self.b

    @property
    def u21(self):
        return -self.b.conj()

    @property
    def u22(self):
        return self.a.conj()

    @property
    def matrix(self):
        return [[self.u11, self.u12], [self.u21, self.u22]]


def series_propagator(phases, area0: float, order: int) -> SeriesPropagator:
    """Taylor expansion of the composed sequence propagator around ``area0``.

    ``phases`` is a PhaseList or any iterable of Phase / radians, first pulse
    first.
    """
    if not isinstance(order, (int, np.integer)) or order < 1:
        raise InvalidInputError("series order must be an integer >= 1")
    if order > MAX_ORDER:
        raise InvalidInputError(f"series order {order} exceeds cap {MAX_ORDER}")
    if not math.isfinite(area0):
        raise InvalidInputError("expansion point must be finite")
    phases = [_radians(p) for p in phases]
    if not phases:
        raise InvalidInputError("phase list must be non-empty")
    cos_s, sin_s = half_angle_series(float(area0), int(order))
    a1 = cos_s
    s1 = sin_s * (-1j)
    ua = SeriesElement.constant(1.0, order)
    ub = SeriesElement.constant(0.0, order)
    for phi in phases:
        b1 = s1 * np.exp(1j * phi)
        ua, ub = a1 * ua - b1 * ub.conj(), a1 * ub + b1 * ua.conj()
    return SeriesPropagator(ua, ub)
