"""Passband derivative conditions and a numerical solver for the phases.

Flatness is expressed through orders of zero of the composed propagator:
``U_11`` at ``A = pi`` (flat inversion top) and ``U_12`` at ``A = 0`` (flat
excitation bottom).  For any odd-length sequence ``U_11`` is odd in
``A - pi`` and ``U_12`` is odd in ``A``, so only odd Taylor coefficients can
be nonzero there and only those enter the residual.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np
from scipy.optimize import least_squares

from .errors import ConvergenceError, InvalidInputError
from .sequences import Kind, PhaseList, from_radians, nest_nb
from .series import MAX_ORDER, series_propagator

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class ConditionReport:
    residual_at_pi: float
    top_derivatives: List[float]       # |d^k U11/dA^k| at pi, k = 1..K
    bottom_derivatives: List[float]    # |d^j U11/dA^j| at 0, j = 1..J
    bottom_u12_derivatives: List[float]  # |d^j U12/dA^j| at 0, j = 1..J
    order_of_zero_top: Optional[int]
    order_of_zero_bottom: Optional[int]
    tol: float = DEFAULT_TOL

    def satisfies(self, n_b: int, n_n: int) -> bool:
        """True when the flat top/bottom orders reach the requested values."""
        top = self.order_of_zero_top
        bottom = self.order_of_zero_bottom
        return (top is None or top >= n_b) and (bottom is None or bottom >= n_n)

    def to_dict(self) -> dict:
        return {
            "residual_at_pi": self.residual_at_pi,
            "top_derivatives": list(self.top_derivatives),
            "bottom_derivatives": list(self.bottom_derivatives),
            "bottom_u12_derivatives": list(self.bottom_u12_derivatives),
            "order_of_zero_top": self.order_of_zero_top,
            "order_of_zero_bottom": self.order_of_zero_bottom,
            "tol": self.tol,
        }


def _order_of_zero(coefficients, tol):
    """Index of the first coefficient with magnitude above tol, else None."""
    big = np.nonzero(np.abs(coefficients) > tol)[0]
    return int(big[0]) if big.size else None


def check_pb_conditions(ph, K: int, J: int, tol: float = DEFAULT_TOL) -> ConditionReport:
    """Derivatives of the composed propagator at A = pi and A = 0.

    Orders of zero are read from Taylor coefficients ``0..K`` (top, U_11 at
    pi) and ``0..J`` (bottom, U_12 at 0); ``None`` means no coefficient in
    range exceeded ``tol``.
    """
    if K < 0 or J < 0:
        raise InvalidInputError("derivative counts must be non-negative")
    top = series_propagator(ph, math.pi, max(K, 1))
    bottom = series_propagator(ph, 0.0, max(J, 1))
    top_d = np.abs(top.u11.derivatives())
    bot11_d = np.abs(bottom.u11.derivatives())
    bot12_d = np.abs(bottom.u12.derivatives())
    return ConditionReport(
        residual_at_pi=float(abs(top.u11.coefficients[0])),
        top_derivatives=[float(x) for x in top_d[1:K + 1]],
        bottom_derivatives=[float(x) for x in bot11_d[1:J + 1]],
        bottom_u12_derivatives=[float(x) for x in bot12_d[1:J + 1]],
        order_of_zero_top=_order_of_zero(top.u11.coefficients[:K + 1], tol),
        order_of_zero_bottom=_order_of_zero(bottom.u12.coefficients[:J + 1], tol),
        tol=tol,
    )


def condition_residuals(phases_rad, n_b: int, n_n: int) -> np.ndarray:
    """Real residual vector whose zeros give the requested flatness orders.

    Contains Re/Im of U_11(pi), of the odd coefficients 1, 3, .., n_b - 2 of
    U_11 at pi and of the odd coefficients 1, 3, .., n_n - 2 of U_12 at 0.
    Even coefficients vanish identically for odd sequences and are left out.
    """
    top = series_propagator(phases_rad, math.pi, max(n_b - 1, 1)).u11.coefficients
    parts = [top[:1]]
    parts.append(top[1:n_b:2])
    if n_n > 1:
        bottom = series_propagator(phases_rad, 0.0, n_n - 1).u12.coefficients
        parts.append(bottom[1:n_n:2])
    c = np.concatenate(parts)
    return np.concatenate([c.real, c.imag])


@dataclass
class SolverConfig:
    tol: float = DEFAULT_TOL
    max_iter: int = 500
    n_starts: int = 16
    perturb: float = 0.0      # uniform noise amplitude (rad) added to a seed
    rng_seed: int = 0
    workers: int = 1


@dataclass
class SolveResult:
    phases: PhaseList
    report: ConditionReport
    residual_norm: float
    iterations: int
    converged: bool
    solutions: list = field(default_factory=list)

    def report_dict(self) -> dict:
        return {
            "residuals": self.residual_norm,
            "orders": {"top": self.report.order_of_zero_top,
                       "bottom": self.report.order_of_zero_bottom},
            "iterations": self.iterations,
            "converged": self.converged,
            "distinct_solutions": len(self.solutions),
            "conditions": self.report.to_dict(),
        }

    def report_json(self, indent=2) -> str:
        return json.dumps(self.report_dict(), indent=indent)


def _gauge_fix(phases):
    phases = np.asarray(phases, dtype=float)
    return np.mod(phases - phases[0], 2 * math.pi)


def _solve_one(x0_full, n_b, n_n, config):
    """One trust-region least-squares run from a full phase vector (phi_1 fixed to 0)."""
    x0_full = _gauge_fix(x0_full)
    n = len(x0_full)

    def full(x):
        return np.concatenate([[0.0], x])

    def fun(x):
        return condition_residuals(full(x), n_b, n_n)

    if n == 1:
        r = fun(np.zeros(0))
        return full(np.zeros(0)), float(np.linalg.norm(r)), 0
    r0 = fun(x0_full[1:])
    if np.linalg.norm(r0) < config.tol:
        return x0_full, float(np.linalg.norm(r0)), 0
    res = least_squares(fun, x0_full[1:], jac="2-point", method="trf",
                        xtol=1e-15, ftol=1e-15, gtol=1e-15,
                        max_nfev=config.max_iter)
    return _gauge_fix(full(res.x)), float(np.linalg.norm(res.fun)), int(res.nfev)


def _distinct(solutions, atol=1e-6):
    kept = []
    for phases, norm, its in solutions:
        is_new = True
        for other, _, _ in kept:
            d = np.angle(np.exp(1j * (phases - other)))
            if np.max(np.abs(d)) < atol:
                is_new = False
                break
        if is_new:
            kept.append((phases, norm, its))
    return kept


def solve_pb(n: int, n_b: int, n_n: int,
             seed: Union[PhaseList, str] = "nested",
             config: Optional[SolverConfig] = None) -> SolveResult:
    """Find N phases whose propagator has flat-top order n_b and flat-bottom order n_n.

    ``seed`` is a PhaseList, ``"nested"`` (the N(B) construction, requires
    ``n == n_b * n_n``) or ``"random"`` (multi-start from uniform phases).
    Raises ConvergenceError when no start reaches ``config.tol``.
    """
    config = config or SolverConfig()
    if not isinstance(n, int) or n < 1 or n % 2 == 0:
        raise InvalidInputError(f"N must be an odd positive integer, got {n!r}")
    if n_b < 1 or n_n < 1:
        raise InvalidInputError("target orders must be positive")
    if max(n_b, n_n) + 2 > MAX_ORDER:
        raise InvalidInputError("target orders exceed the series order cap")
    rng = np.random.default_rng(config.rng_seed)

    if isinstance(seed, PhaseList):
        if len(seed) != n:
            raise InvalidInputError(f"seed has {len(seed)} phases, expected {n}")
        starts = [seed.radians]
    elif seed == "nested":
        if n_b * n_n != n:
            raise InvalidInputError("nested seed requires N = N_b * N_n")
        starts = [nest_nb(n_n, n_b).radians]
    elif seed == "random":
        starts = [rng.uniform(0, 2 * math.pi, n) for _ in range(config.n_starts)]
    else:
        raise InvalidInputError(f"unknown seed {seed!r}")
    if config.perturb:
        starts = [s + rng.uniform(-config.perturb, config.perturb, n) for s in starts]

    if config.workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            runs = list(pool.map(lambda s: _solve_one(s, n_b, n_n, config), starts))
    else:
        runs = [_solve_one(s, n_b, n_n, config) for s in starts]

    converged = [r for r in runs if r[1] < config.tol]
    best = min(runs, key=lambda r: r[1])
    chosen = converged[0] if converged else best
    phases = from_radians(chosen[0], Kind.NUMERICAL, label=f"PB{n}(b{n_b},n{n_n})",
                          n_b=n_b, n_n=n_n)
    report = check_pb_conditions(phases, n_b + 2, n_n + 2, config.tol)
    result = SolveResult(phases, report, chosen[1], chosen[2], bool(converged),
                         solutions=[from_radians(s[0], Kind.NUMERICAL, n_b=n_b, n_n=n_n)
                                    for s in _distinct(converged)])
    if not converged:
        raise ConvergenceError(
            f"no start reached residual < {config.tol:g}; best {best[1]:.3e}", best=result)
    return result
