"""Coins, Verblunsky coefficient sequences and the map between them."""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from numbers import Number

import numpy as np

from .errors import (
    IncompleteModelError,
    InvalidCoefficientError,
    InvalidCoinError,
    OutOfDomainError,
)

__all__ = [
    "Coin",
    "VerblunskySequence",
    "coin_from_alpha",
    "fair_extend",
    "polynomial_coin_alpha",
    "HADAMARD",
    "UNITARY_TOL",
]

UNITARY_TOL = 1e-12

Scalar = int | float | complex | Fraction


@dataclass(frozen=True)
class Coin:
    """2x2 unitary coin; ``c21`` is the amplitude for ``up -> down``."""

    c11: complex
    c12: complex
    c21: complex
    c22: complex

    def __post_init__(self) -> None:
        m = self.matrix
        err = np.abs(m.conj().T @ m - np.eye(2)).max()
        if not err <= UNITARY_TOL:
            raise InvalidCoinError(f"coin is not unitary (max deviation {err:.3e})")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.c11, self.c12], [self.c21, self.c22]], dtype=np.complex128)

    @classmethod
    def from_matrix(cls, m) -> "Coin":
        m = np.asarray(m, dtype=np.complex128)
        if m.shape != (2, 2):
            raise InvalidCoinError(f"coin must be 2x2, got {m.shape}")
        return cls(complex(m[0, 0]), complex(m[0, 1]), complex(m[1, 0]), complex(m[1, 1]))


HADAMARD = Coin.from_matrix(np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0))


def _modulus(a: Scalar) -> Number:
    if isinstance(a, Fraction):
        return abs(a)
    return abs(complex(a))


def _check_alpha(a: Scalar, where: str = "") -> None:
    if not isinstance(a, Number) or (isinstance(a, float) and math.isnan(a)):
        raise InvalidCoefficientError(f"Verblunsky coefficient{where} is not a number: {a!r}")
    if not _modulus(a) < 1:
        raise InvalidCoefficientError(f"Verblunsky coefficient{where} must satisfy |alpha| < 1, got {a!r}")


def _rho(a: Scalar) -> float:
    # 1 - |a|^2 formed exactly for rationals, so rho stays accurate when |a| is near 1.
    if isinstance(a, (Fraction, int)):
        return math.sqrt(float(1 - Fraction(a) ** 2))
    m = abs(complex(a))
    return math.sqrt((1.0 - m) * (1.0 + m))


def coin_from_alpha(alpha: Scalar) -> Coin:
    """The coin ``[[rho, -alpha], [conj(alpha), rho]]``."""
    _check_alpha(alpha)
    rho = _rho(alpha)
    a = complex(alpha)
    return Coin(rho, -a, a.conjugate(), rho)


def polynomial_coin_alpha(i: int) -> tuple[Fraction, Fraction]:
    """Exact ``(alpha_i, rho_i)`` of the site-dependent coin model for even ``i >= 0``.

    ``alpha_i = ((i+1)^10 - 1) / ((i+1)^10 + 1)`` and
    ``rho_i = 2 (i+1)^5 / ((i+1)^10 + 1)``.  Odd indices carry ``alpha = 0``
    and are handled by the model catalog.
    """
    if int(i) != i or i < 0 or i % 2:
        raise OutOfDomainError(f"polynomial coin coefficients are defined for even i >= 0, got {i!r}")
    p5 = (i + 1) ** 5
    p10 = p5 * p5
    return Fraction(p10 - 1, p10 + 1), Fraction(2 * p5, p10 + 1)


class VerblunskySequence:
    """Lazily evaluated doubly-infinite sequence ``j -> alpha_j``.

    ``evaluator`` may return ints, floats, complex numbers or Fractions;
    rationals are kept exact so that ``rho`` is computed without
    cancellation.  Values are validated (``|alpha| < 1``) and memoized on
    first access.
    """

    def __init__(self, evaluator: Callable[[int], Scalar], description: str = "custom"):
        self._evaluator = evaluator
        self.description = description
        self._cache: dict[int, Scalar] = {}

    def exact(self, j: int) -> Scalar:
        j = int(j)
        try:
            return self._cache[j]
        except KeyError:
            pass
        a = self._evaluator(j)
        _check_alpha(a, f" alpha_{j}")
        self._cache[j] = a
        return a

    def alpha(self, j: int) -> complex:
        return complex(self.exact(j))

    def rho(self, j: int) -> float:
        return _rho(self.exact(j))

    def __getitem__(self, j: int) -> complex:
        return self.alpha(j)

    def alphas(self, lo: int, hi: int) -> np.ndarray:
        """``alpha_j`` for ``lo <= j < hi`` as a complex array."""
        return np.array([self.alpha(j) for j in range(lo, hi)], dtype=np.complex128)

    def coins(self) -> Callable[[int], Coin]:
        """Coins ``C_i`` built from the even coefficients ``alpha_{2i}``.

        Only meaningful when every odd coefficient vanishes; checked lazily.
        """

        def coin(i: int) -> Coin:
            if self.exact(2 * i - 1) != 0 or self.exact(2 * i + 1) != 0:
                raise IncompleteModelError(f"odd coefficients around site {i} are nonzero; not a coined walk")
            return coin_from_alpha(self.exact(2 * i))

        return coin

    def __repr__(self) -> str:
        return f"VerblunskySequence({self.description})"

    @classmethod
    def constant(cls, alpha: Scalar, *, odd_zero: bool = True) -> "VerblunskySequence":
        _check_alpha(alpha)
        if odd_zero:
            return cls(lambda j: alpha if j % 2 == 0 else 0, f"constant even {alpha}")
        return cls(lambda j: alpha, f"constant {alpha}")

    @classmethod
    def from_table(cls, table: dict[int, Scalar], default: Scalar | None = None) -> "VerblunskySequence":
        table = dict(table)
        for j, a in table.items():
            _check_alpha(a, f" alpha_{j}")

        def ev(j: int) -> Scalar:
            if j in table:
                return table[j]
            if default is None:
                raise IncompleteModelError(f"alpha_{j} is not in the table")
            return default

        return cls(ev, f"table[{len(table)}]")


def fair_extend(
    nonneg: Sequence[Scalar] | Callable[[int], Scalar],
    alpha_minus_one: Scalar = 0,
) -> VerblunskySequence:
    """Extend ``alpha_j, j >= 0`` to all integers by ``alpha_j = alpha_{-2-j}``.

    ``nonneg`` is either a finite table (queries past its end raise
    :class:`IncompleteModelError`) or a callable on ``j >= 0``.
    ``alpha_{-1}`` is free and set from ``alpha_minus_one``.
    """
    _check_alpha(alpha_minus_one, " alpha_-1")
    if callable(nonneg):
        base = nonneg
        desc = "fair(callable)"
    else:
        table = list(nonneg)
        for j, a in enumerate(table):
            _check_alpha(a, f" alpha_{j}")

        def base(j: int) -> Scalar:
            if j >= len(table):
                raise IncompleteModelError(f"alpha_{j} requested but only {len(table)} coefficients are known")
            return table[j]

        desc = f"fair(table[{len(table)}])"

    def ev(j: int) -> Scalar:
        if j == -1:
            return alpha_minus_one
        if j < -1:
            j = -2 - j
        return base(j)

    return VerblunskySequence(ev, desc)

