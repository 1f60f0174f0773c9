"""Occupation times of the classical fair coin walk.

``S_k`` is the running sum of ``n`` fair +-1 tosses, ``S_0 = 0``.  Step
``k`` counts as positive when ``S_k > 0``, or when ``S_k = 0`` and
``S_{k-1} > 0`` (a return to zero from above stays on the positive side).
``N_n`` is the number of positive steps among ``1..n``.

Closed forms are exact :class:`~fractions.Fraction` values; only the
arcsine law and the Legendre check use floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import InvalidConfigError, OutOfDomainError

__all__ = [
    "ExactDistribution",
    "EmpiricalDistribution",
    "u",
    "chung_feller",
    "odd_step",
    "exact_distribution",
    "enumerate_paths",
    "monte_carlo",
    "arcsine_cdf",
    "arcsine_density",
    "legendre",
    "legendre_identity_residual",
    "ENUMERATION_MAX_STEPS",
    "RNG_ALGORITHM",
    "MC_CHUNK",
]

ENUMERATION_MAX_STEPS = 24
RNG_ALGORITHM = "numpy.random.Philox(SeedSequence(seed).spawn per chunk)"
MC_CHUNK = 1 << 15


@dataclass(frozen=True)
class ExactDistribution:
    """``probs[r] = P(N_n = r)`` as exact rationals."""

    n: int
    probs: tuple[Fraction, ...]
    source: str = ""

    def __post_init__(self) -> None:
        if len(self.probs) != self.n + 1:
            raise ValueError(f"need {self.n + 1} probabilities, got {len(self.probs)}")
        if any(p < 0 or p > 1 for p in self.probs):
            raise ValueError("probabilities must lie in [0, 1]")

    @property
    def total(self) -> Fraction:
        return sum(self.probs, Fraction(0))

    def cdf(self) -> tuple[Fraction, ...]:
        out, acc = [], Fraction(0)
        for p in self.probs:
            acc += p
            out.append(acc)
        return tuple(out)

    def as_float(self) -> np.ndarray:
        return np.array([float(p) for p in self.probs])


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Monte Carlo frequencies of ``N_n`` with the counts they came from."""

    n: int
    trials: int
    seed: int
    counts: tuple[int, ...]
    metadata: dict = field(default_factory=dict)

    @property
    def probs(self) -> np.ndarray:
        return np.array(self.counts, dtype=float) / self.trials

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.counts) / self.trials


def _require_int(name: str, value) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise OutOfDomainError(f"{name} must be an integer, got {value!r}")
    return int(value)


@lru_cache(maxsize=None)
def _u(k: int) -> Fraction:
    return Fraction(math.comb(k, k // 2), 2**k)


def u(k: int) -> Fraction:
    """``u_k = binom(k, k/2) / 2^k``: probability that ``S_k = 0``."""
    k = _require_int("k", k)
    if k < 0 or k % 2:
        raise OutOfDomainError(f"u_k needs an even k >= 0, got {k}")
    return _u(k)


def chung_feller(n: int, r: int) -> Fraction:
    """``P(N_{2n} = 2r) = u_{2r} u_{2n-2r}``."""
    n, r = _require_int("n", n), _require_int("r", r)
    if n < 0 or not 0 <= r <= n:
        raise OutOfDomainError(f"chung_feller needs 0 <= r <= n, got n={n}, r={r}")
    return _u(2 * r) * _u(2 * n - 2 * r)


def odd_step(n: int, r: int, parity: str) -> Fraction:
    """Occupation law after ``2n + 1`` tosses.

    ``parity="even"``: ``P(N_{2n+1} = 2r) = u_{2r} u_{2n+2-2r} (n-r+1)/(n+1)``
    for ``0 <= r <= n``.  ``parity="odd"``:
    ``P(N_{2n+1} = 2r-1) = u_{2r} u_{2n+2-2r} r/(n+1)`` for ``1 <= r <= n+1``.
    """
    n, r = _require_int("n", n), _require_int("r", r)
    if n < 0:
        raise OutOfDomainError(f"odd_step needs n >= 0, got {n}")
    if parity == "even":
        if not 0 <= r <= n:
            raise OutOfDomainError(f"even target needs 0 <= r <= n, got r={r}")
        weight = Fraction(n - r + 1, n + 1)
    elif parity == "odd":
        if not 1 <= r <= n + 1:
            raise OutOfDomainError(f"odd target needs 1 <= r <= n+1, got r={r}")
        weight = Fraction(r, n + 1)
    else:
        raise OutOfDomainError(f"parity must be 'even' or 'odd', got {parity!r}")
    return _u(2 * r) * _u(2 * n + 2 - 2 * r) * weight


def exact_distribution(steps: int) -> ExactDistribution:
    """Law of ``N_steps`` from the closed forms (any ``steps >= 0``)."""
    steps = _require_int("steps", steps)
    if steps < 0:
        raise OutOfDomainError(f"steps must be >= 0, got {steps}")
    h = steps // 2
    if steps % 2 == 0:
        probs = [Fraction(0)] * (steps + 1)
        for r in range(h + 1):
            probs[2 * r] = chung_feller(h, r)
        return ExactDistribution(steps, tuple(probs), "chung-feller")
    probs = [Fraction(0)] * (steps + 1)
    for r in range(h + 1):
        probs[2 * r] = odd_step(h, r, "even")
    for r in range(1, h + 2):
        probs[2 * r - 1] = odd_step(h, r, "odd")
    return ExactDistribution(steps, tuple(probs), "odd-step")


def _occupation_counts(steps: np.ndarray) -> np.ndarray:
    """``N_n`` for each row of a ``(paths, n)`` array of +-1 steps."""
    s = np.cumsum(steps, axis=1, dtype=np.int32)
    prev = np.concatenate([np.zeros((s.shape[0], 1), dtype=np.int32), s[:, :-1]], axis=1)
    positive = (s > 0) | ((s == 0) & (prev > 0))
    return positive.sum(axis=1)


def enumerate_paths(n: int, *, chunk: int = 1 << 16) -> ExactDistribution:
    """Exact law of ``N_n`` by walking all ``2^n`` toss sequences."""
    n = _require_int("n", n)
    if not 0 <= n <= ENUMERATION_MAX_STEPS:
        raise OutOfDomainError(f"enumeration needs 0 <= n <= {ENUMERATION_MAX_STEPS}, got {n}")
    total = 1 << n
    counts = np.zeros(n + 1, dtype=np.int64)
    if n == 0:
        counts[0] = 1
    bits = np.arange(n, dtype=np.int64)
    for start in range(0, total if n else 0, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        steps = (((codes[:, None] >> bits) & 1) * 2 - 1).astype(np.int8)
        counts += np.bincount(_occupation_counts(steps), minlength=n + 1)
    probs = tuple(Fraction(int(c), total) for c in counts)
    return ExactDistribution(n, probs, "enumeration")


def monte_carlo(n: int, trials: int, seed: int) -> EmpiricalDistribution:
    """Sampled law of ``N_n``.

    Trials are split into chunks of ``MC_CHUNK``; chunk ``c`` draws from a
    Philox generator seeded by the ``c``-th child of ``SeedSequence(seed)``.
    The chunking is fixed, so counts depend only on ``(n, trials, seed)``.
    """
    n, trials, seed = _require_int("n", n), _require_int("trials", trials), _require_int("seed", seed)
    if n < 0:
        raise OutOfDomainError(f"n must be >= 0, got {n}")
    if trials < 1:
        raise InvalidConfigError(f"trials must be >= 1, got {trials}")
    if not 0 <= seed < 2**64:
        raise InvalidConfigError(f"seed must be a 64-bit unsigned integer, got {seed}")
    n_chunks = -(-trials // MC_CHUNK)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    counts = np.zeros(n + 1, dtype=np.int64)
    for c, child in enumerate(children):
        size = min(MC_CHUNK, trials - c * MC_CHUNK)
        if n == 0:
            counts[0] += size
            continue
        rng = np.random.Generator(np.random.Philox(child))
        steps = rng.integers(0, 2, size=(size, n), dtype=np.int8) * 2 - 1
        counts += np.bincount(_occupation_counts(steps), minlength=n + 1)
    meta = {"rng": RNG_ALGORITHM, "chunk": MC_CHUNK, "numpy": np.__version__}
    return EmpiricalDistribution(n, trials, seed, tuple(int(c) for c in counts), meta)


def arcsine_cdf(x: float) -> float:
    """Limit law of ``N_n / n``: ``F(x) = (2/pi) asin(sqrt x)``."""
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise OutOfDomainError(f"arcsine_cdf needs 0 <= x <= 1, got {x}")
    # atan2 keeps full precision near both ends, so F(x) + F(1 - x) = 1
    return 2.0 / math.pi * math.atan2(math.sqrt(x), math.sqrt(1.0 - x))


def arcsine_density(x: float) -> float:
    """``1 / (pi sqrt(x (1-x)))`` on the open interval."""
    x = float(x)
    if not 0.0 < x < 1.0:
        raise OutOfDomainError(f"arcsine_density needs 0 < x < 1, got {x}")
    return 1.0 / (math.pi * math.sqrt(x * (1.0 - x)))


def legendre(n: int, x: float) -> float:
    """Legendre polynomial ``P_n(x)`` by the three-term recurrence."""
    if n < 0:
        raise OutOfDomainError(f"degree must be >= 0, got {n}")
    p0, p1 = 1.0, x
    if n == 0:
        return p0
    for k in range(1, n):
        p0, p1 = p1, ((2 * k + 1) * x * p1 - k * p0) / (k + 1)
    return p1


def legendre_identity_residual(n: int, q: float) -> float:
    """``|sum_k u_{2k} u_{2n-2k} q^{2k} - P_n((q + 1/q)/2) q^n|``."""
    n = _require_int("n", n)
    if n < 0:
        raise OutOfDomainError(f"degree must be >= 0, got {n}")
    q = float(q)
    if not q > 0:
        raise OutOfDomainError(f"q must be positive, got {q}")
    lhs = math.fsum(float(chung_feller(n, k)) * q ** (2 * k) for k in range(n + 1))
    rhs = legendre(n, (q + 1.0 / q) / 2.0) * q**n
    return abs(lhs - rhs)
