from fractions import Fraction as F

import numpy as np
import pytest
from scipy.linalg import expm

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)


def expm_sequence(area, phases_rad):
    """Brute-force oracle: product of matrix exponentials of the pulse Hamiltonians."""
    u = np.eye(2, dtype=complex)
    for phi in phases_rad:
        h = 0.5 * area * (np.cos(phi) * SX - np.sin(phi) * SY)
        u = expm(-1j * h) @ u
    return u


def expm_probability(area, phases_rad):
    return abs(expm_sequence(area, phases_rad)[0, 1]) ** 2


def _f(*items):
    return [F(x) if isinstance(x, int) else F(*x) for x in items]


# Golden phases in units of pi for the nested families.
TABLE_I = {
    (3, 3): _f(0, (2, 3), 0, (2, 3), (4, 3), (2, 3), (4, 3), 0, (4, 3)),
    (3, 5): _f(0, (4, 5), (2, 5), (4, 5), 0, (2, 3), (22, 15), (16, 15), (22, 15), (2, 3),
               (4, 3), (2, 15), (26, 15), (2, 15), (4, 3)),
    (3, 7): _f(0, (6, 7), (4, 7), (8, 7), (4, 7), (6, 7), 0, (2, 3), (32, 21), (26, 21),
               (38, 21), (26, 21), (32, 21), (2, 3), (4, 3), (4, 21), (40, 21), (10, 21),
               (40, 21), (4, 21), (4, 3)),
    (5, 3): _f(0, (2, 3), 0, (2, 5), (16, 15), (2, 5), (8, 5), (4, 15), (8, 5), (4, 5),
               (22, 15), (4, 5), (6, 5), (28, 15), (6, 5)),
    (5, 5): _f(0, (4, 5), (2, 5), (4, 5), 0, (2, 5), (6, 5), (4, 5), (6, 5), (2, 5), (8, 5),
               (2, 5), 0, (2, 5), (8, 5), (4, 5), (8, 5), (6, 5), (8, 5), (4, 5), (6, 5), 0,
               (8, 5), 0, (6, 5)),
    (7, 3): _f(0, (2, 3), 0, (2, 7), (20, 21), (2, 7), (12, 7), (8, 21), (12, 7), (4, 7),
               (26, 21), (4, 7), (10, 7), (2, 21), (10, 7), (6, 7), (32, 21), (6, 7), (8, 7),
               (38, 21), (8, 7)),
}
"""N_n(B_b) keyed by (N_n, N_b)."""

TABLE_II = {
    (3, 3): _f(0, (2, 3), (4, 3), 0, (4, 3), (2, 3), 0, (2, 3), (4, 3)),
    (3, 5): _f(0, (2, 5), (8, 5), (4, 5), (6, 5), (28, 15), (22, 15), (4, 15), (16, 15),
               (2, 3), 0, (2, 5), (8, 5), (4, 5), (6, 5)),
    (3, 7): _f(0, (2, 7), (12, 7), (4, 7), (10, 7), (6, 7), (8, 7), (2, 3), (20, 21),
               (8, 21), (26, 21), (2, 21), (32, 21), (38, 21), 0, (2, 7), (12, 7), (4, 7),
               (10, 7), (6, 7), (8, 7)),
    (5, 3): _f(0, (2, 3), (4, 3), (2, 15), (22, 15), (4, 5), (2, 5), (16, 15), (26, 15),
               (2, 15), (22, 15), (4, 5), 0, (2, 3), (4, 3)),
    (5, 5): _f(0, (2, 5), (8, 5), (4, 5), (6, 5), 0, (8, 5), (2, 5), (6, 5), (4, 5), (2, 5),
               (4, 5), 0, (6, 5), (8, 5), 0, (8, 5), (2, 5), (6, 5), (4, 5), 0, (2, 5),
               (8, 5), (4, 5), (6, 5)),
    (7, 3): _f(0, (2, 3), (4, 3), (4, 21), (32, 21), (6, 7), (4, 7), (26, 21), (40, 21),
               (10, 21), (38, 21), (8, 7), (4, 7), (26, 21), (40, 21), (4, 21), (32, 21),
               (6, 7), 0, (2, 3), (4, 3)),
}
"""B_b(N_n) keyed by (N_b, N_n)."""

ODD = (1, 3, 5, 7, 9)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# ---------------------------------------------------------------------------
# acceptance summary: one PASS/FAIL line per criterion

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when != "call" and not report.failed:
        return
    n, title = mark.args
    entry = _CRITERIA.setdefault(n, {"title": title, "ok": True, "time": 0.0, "why": []})
    entry["time"] += report.duration
    if report.failed:
        entry["ok"] = False
        msg = str(report.longrepr.reprcrash.message) if hasattr(report.longrepr, "reprcrash") \
            else str(report.longrepr)
        entry["why"].append(msg.splitlines()[0][:160])


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        line = f"criterion {n}: {'PASS' if e['ok'] else 'FAIL'}  {e['title']}  ({e['time']:.2f} s)"
        if e["why"]:
            line += "  -- " + "; ".join(e["why"])
        terminalreporter.write_line(line)
