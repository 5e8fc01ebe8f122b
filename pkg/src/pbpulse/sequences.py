"""Closed-form broadband, narrowband and nested passband phase sequences.

All phases are exact rational multiples of pi.  The formulas index pulses
from 1 (``k = 1..N_b``, ``j = 1..N_n``); the Python lists are 0-based, so
list position ``i`` holds the phase of pulse ``i + 1``.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidInputError
from .su2 import Phase


class Kind(str, Enum):
    SINGLE = "Single"
    BROADBAND = "Broadband"
    NARROWBAND = "Narrowband"
    NESTED_NB = "N(B)"
    NESTED_BN = "B(N)"
    REFERENCE = "Reference"
    NUMERICAL = "Numerical"


@dataclass(frozen=True)
class PhaseList:
    phases: tuple
    kind: Kind
    n_b: Optional[int] = None
    n_n: Optional[int] = None
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(
            p if isinstance(p, Phase) else Phase(p) for p in self.phases))
        object.__setattr__(self, "kind", Kind(self.kind))
        expected = {
            Kind.BROADBAND: self.n_b,
            Kind.NARROWBAND: self.n_n,
            Kind.NESTED_NB: (self.n_b or 0) * (self.n_n or 0),
            Kind.NESTED_BN: (self.n_b or 0) * (self.n_n or 0),
        }.get(self.kind)
        if expected is not None and len(self.phases) != expected:
            raise InvalidInputError(
                f"{self.kind.value} sequence needs {expected} phases, "
                f"got {len(self.phases)}")

    def __len__(self):
        return len(self.phases)

    def __iter__(self):
        return iter(self.phases)

    def __getitem__(self, i):
        return self.phases[i]

    @property
    def over_pi(self) -> list:
        return [p.over_pi for p in self.phases]

    @property
    def radians(self) -> np.ndarray:
        return np.array([p.radians for p in self.phases], dtype=float)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "kind": self.kind.value,
            "N_b": self.n_b,
            "N_n": self.n_n,
            "phases": [{"num": f.numerator, "den": f.denominator}
                       for f in self.over_pi],
        }

    def to_json(self, indent=2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, data: dict) -> "PhaseList":
        try:
            phases = [Fraction(int(p["num"]), int(p["den"])) for p in data["phases"]]
            kind = Kind(data["kind"])
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise InvalidInputError(f"malformed sequence document: {exc}") from exc
        if not phases:
            raise InvalidInputError("sequence document has no phases")
        return cls(tuple(phases), kind, data.get("N_b"), data.get("N_n"),
                   data.get("label", ""))

    @classmethod
    def from_json(cls, text: str) -> "PhaseList":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)


def _check_odd(name, n):
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1 or n % 2 == 0:
        raise InvalidInputError(f"{name} must be an odd positive integer, got {n!r}")


def broadband_fractions(n_b: int) -> list:
    _check_odd("N_b", n_b)
    return [Fraction((n_b + 1 - 2 * ((k + 1) // 2)) * (k // 2), n_b)
            for k in range(1, n_b + 1)]


def narrowband_fractions(n_n: int) -> list:
    # signed values, e.g. N_3 = {0, 2/3, -2/3}
    _check_odd("N_n", n_n)
    return [Fraction((-1) ** j * (j // 2) * 2, n_n) for j in range(1, n_n + 1)]


def broadband_phases(n_b: int) -> PhaseList:
    """Broadband sequence B_{n_b}, flat top of order n_b around A = pi."""
    return PhaseList(tuple(broadband_fractions(n_b)), Kind.BROADBAND,
                     n_b=n_b, label=f"B{n_b}")


def narrowband_phases(n_n: int) -> PhaseList:
    """Narrowband sequence N_{n_n} with signed (non-canonical) phases."""
    return PhaseList(tuple(narrowband_fractions(n_n)), Kind.NARROWBAND,
                     n_n=n_n, label=f"N{n_n}")


def canonicalize(ph: PhaseList) -> PhaseList:
    """Reduce every phase into [0, 2pi) exactly."""
    return PhaseList(tuple(p.canonical() for p in ph.phases), ph.kind,
                     ph.n_b, ph.n_n, ph.label)


def nest_nb(n_n: int, n_b: int, canonical: bool = True) -> PhaseList:
    """N(B): every pulse of N_{n_n} replaced by B_{n_b} shifted by its phase.

    Pulse ``n_b*(j-1) + k`` gets ``nu_j + beta_k``.
    """
    nu = narrowband_fractions(n_n)
    beta = broadband_fractions(n_b)
    phases = [v + b for v in nu for b in beta]
    out = PhaseList(tuple(phases), Kind.NESTED_NB, n_b=n_b, n_n=n_n,
                    label=f"N{n_n}(B{n_b})")
    return canonicalize(out) if canonical else out


def nest_bn(n_b: int, n_n: int, canonical: bool = True) -> PhaseList:
    """B(N): N_{n_n} nested into B_{n_b}, alternating N and its reverse.

    Pulse ``n_n*(k-1) + j`` gets ``nu_j + beta_k`` for odd k and
    ``nu_{n_n+1-j} + beta_k`` for even k.
    """
    nu = narrowband_fractions(n_n)
    beta = broadband_fractions(n_b)
    phases = []
    for k, b in enumerate(beta, start=1):
        inner = nu if k % 2 == 1 else nu[::-1]
        phases.extend(v + b for v in inner)
    out = PhaseList(tuple(phases), Kind.NESTED_BN, n_b=n_b, n_n=n_n,
                    label=f"B{n_b}(N{n_n})")
    return canonicalize(out) if canonical else out


WIMPERIS_PB2 = (0, Fraction(1, 2), Fraction(1, 2), Fraction(11, 8), Fraction(11, 8),
                Fraction(11, 8), Fraction(11, 8), Fraction(1, 2), Fraction(1, 2))


def wimperis_pb2() -> PhaseList:
    """Wimperis' 9-pulse PB2(pi) passband reference sequence."""
    return PhaseList(WIMPERIS_PB2, Kind.REFERENCE, label="PB2(pi)")


def single_pulse() -> PhaseList:
    return PhaseList((0,), Kind.SINGLE, n_b=1, n_n=1, label="single")


_NESTED_RE = re.compile(r"^\s*([NB])_?(\d+)\s*\(\s*([NB])_?(\d+)\s*\)\s*$", re.I)
_PRIME_RE = re.compile(r"^\s*([NB])_?(\d+)\s*$", re.I)


def parse_selector(selector: str) -> PhaseList:
    """Build a sequence from bracket notation.

    Accepts ``N3(B5)``, ``B3(N5)``, ``B7``, ``N5``, ``single`` and
    ``wimperis`` / ``PB2``.
    """
    s = selector.strip()
    low = s.lower()
    if low in ("single", "pi", "1"):
        return single_pulse()
    if low in ("wimperis", "wimperis-pb2", "pb2", "pb2(pi)"):
        return wimperis_pb2()
    m = _NESTED_RE.match(s)
    if m:
        outer, n_outer, inner, n_inner = m.groups()
        outer, inner = outer.upper(), inner.upper()
        if outer == inner:
            raise InvalidInputError(f"selector {selector!r} nests a family into itself")
        if outer == "N":
            return nest_nb(int(n_outer), int(n_inner))
        return nest_bn(int(n_outer), int(n_inner))
    m = _PRIME_RE.match(s)
    if m:
        fam, n = m.group(1).upper(), int(m.group(2))
        return broadband_phases(n) if fam == "B" else narrowband_phases(n)
    raise InvalidInputError(f"unknown sequence selector {selector!r}")


def load_sequence(spec: str) -> PhaseList:
    """Selector string or path to a sequence JSON file."""
    path = Path(spec)
    if spec.endswith(".json") or path.is_file():
        try:
            text = path.read_text()
        except OSError as exc:
            raise InvalidInputError(f"cannot read {spec}: {exc}") from exc
        return PhaseList.from_json(text)
    return parse_selector(spec)


def from_radians(values: Sequence[float], kind=Kind.NUMERICAL, label="",
                 n_b=None, n_n=None) -> PhaseList:
    """Wrap float phases; the exact binary value of ``phi/pi`` is kept."""
    fracs = []
    for v in values:
        v = float(v)
        if not math.isfinite(v):
            raise InvalidInputError("phases must be finite")
        fracs.append(Fraction(v / math.pi))
    return PhaseList(tuple(fracs), kind, n_b=n_b, n_n=n_n, label=label)
