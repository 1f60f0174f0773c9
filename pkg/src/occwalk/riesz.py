"""Riesz product moments and Verblunsky coefficients on the unit circle.

Moments follow ``c_m = <delta_0, C^m delta_0> = int z^m dmu``.  With this
convention the Szegő recursion reads

    Phi_{n+1}(z) = z Phi_n(z) - conj(alpha_n) Phi_n^*(z),
    conj(alpha_n) = int z Phi_n dmu / ||Phi_n||^2,

and the semi-infinite CMV matrix ``L M`` (``L = Theta_0 + Theta_2 + ...``,
``M = 1 + Theta_1 + ...``) has ``C[0, 0] = conj(alpha_0) = c_1``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .coins import VerblunskySequence, fair_extend
from .errors import IncompleteModelError, InvalidMeasureError, InvalidWindowError

__all__ = [
    "MomentSequence",
    "riesz_weight",
    "riesz_moments",
    "riesz_density",
    "verblunsky_from_moments",
    "semi_infinite_cmv",
    "cmv_moment_check",
    "riesz_walk_alphas",
]

log = logging.getLogger(__name__)

CONDITIONING_MARGIN = 1e-12


@dataclass(frozen=True)
class MomentSequence:
    """Moments ``c_0..c_M`` of a probability measure on the unit circle.

    Negative orders follow from ``c_{-m} = conj(c_m)``.
    """

    values: tuple

    def __post_init__(self) -> None:
        if not self.values:
            raise InvalidMeasureError("empty moment sequence")
        if self.values[0] != 1:
            raise InvalidMeasureError(f"c_0 must be 1 for a probability measure, got {self.values[0]}")

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, m: int):
        if m < 0:
            v = self.values[-m]
            return v.conjugate() if isinstance(v, complex) else v
        return self.values[m]

    @property
    def max_order(self) -> int:
        return len(self.values) - 1

    def as_array(self) -> np.ndarray:
        return np.array([complex(v) for v in self.values], dtype=np.complex128)

    def toeplitz(self, size: int) -> np.ndarray:
        """Hermitian Toeplitz matrix ``T[j, k] = c_{k-j}``."""
        if size > len(self.values):
            raise InvalidMeasureError(f"need {size} moments, have {len(self.values)}")
        c = self.as_array()
        j, k = np.indices((size, size))
        d = k - j
        return np.where(d >= 0, c[np.abs(d)], c[np.abs(d)].conj())

    @classmethod
    def lebesgue(cls, max_order: int) -> "MomentSequence":
        return cls((Fraction(1),) + (Fraction(0),) * max_order)

    @classmethod
    def geometric(cls, a, max_order: int) -> "MomentSequence":
        """Moments ``c_m = a^m`` (Poisson kernel at real ``a``, ``|a| < 1``)."""
        return cls(tuple(a**m for m in range(max_order + 1)))


def riesz_weight(m: int, depth: int) -> Fraction:
    """Fourier coefficient of ``prod_{k=1}^{depth} (1 + cos(4^k theta))`` at order ``m``.

    Every order has at most one representation ``m = sum eps_k 4^k`` with
    ``eps_k in {-1, 0, 1}`` and ``1 <= k <= depth``; the coefficient is
    ``2^-t`` with ``t`` the number of nonzero digits, or 0 if there is none.
    """
    m = abs(int(m))
    if m == 0:
        return Fraction(1)
    if m % 4:
        return Fraction(0)
    q, t, k = m // 4, 0, 0
    while q:
        k += 1
        if k > depth:
            return Fraction(0)
        r = q % 4
        if r == 2:
            return Fraction(0)
        if r == 1:
            t += 1
            q -= 1
        elif r == 3:
            t += 1
            q += 1
        q //= 4
    return Fraction(1, 2**t)


def riesz_moments(max_order: int, depth: int = 6) -> MomentSequence:
    if max_order < 0:
        raise InvalidMeasureError(f"max order must be >= 0, got {max_order}")
    if depth < 1:
        raise InvalidMeasureError(f"truncation depth must be >= 1, got {depth}")
    return MomentSequence(tuple(riesz_weight(m, depth) for m in range(max_order + 1)))


def riesz_density(theta, depth: int) -> np.ndarray:
    """Density of the truncated product w.r.t. ``dtheta / 2 pi``."""
    theta = np.asarray(theta, dtype=float)
    out = np.ones_like(theta)
    for k in range(1, depth + 1):
        out = out * (1.0 + np.cos(4.0**k * theta))
    return out


def verblunsky_from_moments(c: MomentSequence, count: int, *, exact: bool = False) -> list:
    """``alpha_0 .. alpha_{count-1}`` by the Szegő (Levinson) recursion.

    With ``exact=True`` the recursion runs on Fractions (moments must be
    rational and real); otherwise in complex floating point.

    Raises :class:`InvalidMeasureError` when the Toeplitz matrix stops
    being positive definite (``|alpha_n| >= 1``).
    """
    if count < 0:
        raise InvalidMeasureError("count must be >= 0")
    if count > c.max_order:
        raise InvalidMeasureError(f"{count} coefficients need moments up to order {count}, have {c.max_order}")
    if exact:
        mom = [Fraction(v) for v in c.values[: count + 1]]
        phi = [Fraction(1)]
        norm = Fraction(mom[0])
        one = Fraction(1)
    else:
        mom = c.as_array()[: count + 1]
        phi = np.ones(1, dtype=np.complex128)
        norm = float(mom[0].real)
        one = 1.0
    alphas = []
    for n in range(count):
        if exact:
            conj_a = sum(a * mom[k + 1] for k, a in enumerate(phi)) / norm
            a_n = conj_a
            mod2 = a_n * a_n
        else:
            conj_a = complex(np.dot(phi, mom[1 : n + 2])) / norm
            a_n = conj_a.conjugate()
            mod2 = abs(a_n) ** 2
        if mod2 >= one:
            raise InvalidMeasureError(f"moments are not positive definite at order {n + 1} (|alpha_{n}| >= 1)")
        if not exact and mod2 >= (1.0 - CONDITIONING_MARGIN) ** 2:
            log.warning("alpha_%d has modulus %.16f; recursion is ill-conditioned", n, abs(a_n))
        alphas.append(a_n)
        # Phi_n^* has reversed, conjugated coefficients.
        if exact:
            rev = phi[::-1]
            phi = [Fraction(0)] + phi
            for k, b in enumerate(rev):
                phi[k] -= conj_a * b
        else:
            rev = phi[::-1].conj()
            phi = np.concatenate(([0.0], phi)) - conj_a * np.concatenate((rev, [0.0]))
        norm = norm * (one - mod2)
    return alphas


def semi_infinite_cmv(alphas, size: int) -> np.ndarray:
    """Top-left ``size x size`` block of the CMV matrix ``L M`` for ``alpha_0, alpha_1, ...``."""
    if len(alphas) < size:
        raise InvalidWindowError(f"need {size} coefficients for a {size}x{size} CMV block, got {len(alphas)}")
    a = np.array([complex(x) for x in alphas[:size]], dtype=np.complex128)
    rho = np.sqrt(np.maximum(0.0, 1.0 - np.abs(a) ** 2))

    def theta_sum(start: int) -> np.ndarray:
        m = np.zeros((size, size), dtype=np.complex128)
        if start == 1:
            m[0, 0] = 1.0
        for j in range(start, size, 2):
            m[j, j] = a[j].conjugate()
            if j + 1 < size:
                m[j, j + 1] = rho[j]
                m[j + 1, j] = rho[j]
                m[j + 1, j + 1] = -a[j]
        return m

    return theta_sum(0) @ theta_sum(1)


def cmv_moment_check(alphas, c: MomentSequence, max_order: int) -> float:
    """``max_m |<delta_0, C^m delta_0> - c_m|`` for ``m <= max_order``.

    Paths of length ``m`` returning to the origin stay within index ``m``,
    so a block of size ``max_order + 3`` is exact.
    """
    size = max_order + 3
    if len(alphas) < size:
        raise InvalidWindowError(f"moment check to order {max_order} needs {size} coefficients, got {len(alphas)}")
    if c.max_order < max_order:
        raise InvalidWindowError(f"moment sequence only reaches order {c.max_order}")
    cmv = semi_infinite_cmv(alphas, size)
    v = np.zeros(size, dtype=np.complex128)
    v[0] = 1.0
    worst = 0.0
    for m in range(max_order + 1):
        worst = max(worst, abs(v[0] - complex(c[m])))
        v = cmv @ v
    return worst


class _RieszTable:
    """Lazily grown table of Riesz Verblunsky coefficients (indices >= 0)."""

    def __init__(self, depth: int, count: int | None):
        self.depth = depth
        self.limit = count
        self.table: list = []

    def ensure(self, n: int) -> None:
        if n <= len(self.table):
            return
        target = max(n, 2 * len(self.table), 64)
        if self.limit is not None:
            target = min(target, self.limit)
        self.table = [float(a.real) for a in verblunsky_from_moments(riesz_moments(target, self.depth), target)]

    def __call__(self, j: int):
        if self.limit is not None and j >= self.limit:
            raise IncompleteModelError(f"alpha_{j} requested but the Riesz table holds {self.limit} coefficients")
        self.ensure(j + 1)
        return self.table[j]


def riesz_walk_alphas(count: int | None = None, alpha_minus_one=0, depth: int = 6) -> VerblunskySequence:
    """Fair extension of the Riesz coefficients to all integers.

    ``count`` limits the table to ``alpha_0..alpha_{count-1}``; ``None``
    grows it on demand.  The measure is real and symmetric, so the
    coefficients are real.
    """
    seq = fair_extend(_RieszTable(depth, count), alpha_minus_one)
    seq.description = f"riesz(K={depth})"
    return seq
