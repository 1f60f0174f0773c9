"""Independent oracles shared by the test modules.

Nothing here calls the package's banded kernels or engines: matrices are
assembled densely from their defining formulas and occupation laws are
summed branch by branch.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest


def flat_range(window: int) -> np.ndarray:
    return np.arange(-2 * window, 2 * window + 2)


def dense_transition_rules(coin_matrices, window: int) -> np.ndarray:
    """Coined walk from the transition rules, no boundary closure.

    ``coin_matrices(i)`` returns the 2x2 coin of site ``i``.  Amplitude that
    would leave the window is dropped, so columns of the two outermost
    sites are not normalized.
    """
    flats = flat_range(window)
    pos = {int(f): k for k, f in enumerate(flats)}
    u = np.zeros((flats.size, flats.size), dtype=complex)
    for i in range(-window, window + 1):
        c = np.asarray(coin_matrices(i), dtype=complex)
        for spin, col in ((0, 2 * i), (1, 2 * i + 1)):
            right, left = 2 * (i + 1), 2 * (i - 1) + 1
            if right in pos:
                u[pos[right], pos[col]] += c[0, spin]
            if left in pos:
                u[pos[left], pos[col]] += c[1, spin]
    return u


def theta(alpha: complex, rho: float) -> np.ndarray:
    return np.array([[np.conj(alpha), rho], [rho, -alpha]], dtype=complex)


def dense_cmv_display(alpha, rho, mlo: int, mhi: int) -> np.ndarray:
    """``E = L M`` on CMV indices ``mlo..mhi`` from its 2x2 factors.

    Blocks that straddle the edges are dropped entirely, so this agrees
    with the full matrix on rows and columns whose blocks are inside.
    """
    n = mhi - mlo + 1
    lmat = np.zeros((n, n), dtype=complex)
    mmat = np.zeros((n, n), dtype=complex)
    for j in range(mlo, mhi):
        target = lmat if j % 2 == 0 else mmat
        target[j - mlo : j - mlo + 2, j - mlo : j - mlo + 2] = theta(alpha(j), rho(j))
    return lmat @ mmat


def branch_sum(u: np.ndarray, psi: np.ndarray, positive: np.ndarray, n: int) -> np.ndarray:
    """``P(N_n = r)`` by summing ``||P_n U ... P_1 U psi||^2`` over all words."""
    probs = np.zeros(n + 1)
    proj = {True: positive.astype(float), False: (~positive).astype(float)}
    for word in itertools.product((False, True), repeat=n):
        v = psi.astype(complex)
        for b in word:
            v = proj[b] * (u @ v)
        probs[sum(word)] += float(np.vdot(v, v).real)
    return probs


def initial_vector(window: int) -> np.ndarray:
    flats = flat_range(window)
    v = np.zeros(flats.size, dtype=complex)
    v[flats == 0] = 1 / math.sqrt(2)
    v[flats == 1] = 1j / math.sqrt(2)
    return v


def positive_flags(window: int) -> np.ndarray:
    return flat_range(window) >= 1


HADAMARD_MATRIX = np.array([[1, 1], [1, -1]]) / math.sqrt(2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# ---------------------------------------------------------------- acceptance

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
