"""Catalog of the walks studied: Hadamard, constant coins, the site-dependent
polynomial coin and the Riesz walk."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .cmv import BandedUnitary, alignment_offset, build_cmv, build_coined
from .coins import HADAMARD, Coin, VerblunskySequence, coin_from_alpha, fair_extend, polynomial_coin_alpha
from .errors import InvalidConfigError

__all__ = [
    "ModelSpec",
    "MODEL_TAGS",
    "DEFAULT_ALIGNMENT",
    "catalog",
    "cmv_alphas",
    "build_unitary",
    "polynomial_alphas",
    "hadamard_cmv_form",
]

MODEL_TAGS = ("hadamard", "constant", "polynomial_coin", "riesz")
DEFAULT_RIESZ_DEPTH = 6
DEFAULT_ALIGNMENT = "display"


@dataclass(frozen=True)
class ModelSpec:
    tag: str
    alpha: Fraction | None = None
    alpha_minus_one: complex = 0j
    riesz_depth: int = DEFAULT_RIESZ_DEPTH
    alignment: str = DEFAULT_ALIGNMENT

    def __post_init__(self) -> None:
        alignment_offset(self.alignment)
        if self.tag not in MODEL_TAGS:
            raise InvalidConfigError(f"unknown model {self.tag!r}; choose from {', '.join(MODEL_TAGS)}")
        if self.tag == "constant":
            if self.alpha is None:
                raise InvalidConfigError("constant model needs alpha")
            a = self.alpha
            if isinstance(a, complex):
                if a.imag != 0:
                    raise InvalidConfigError(f"constant model needs a real alpha, got {a}")
                a = a.real
            if not isinstance(a, Fraction):
                a = Fraction(a) if isinstance(a, int) else Fraction(a).limit_denominator(10**12)
            if not -1 < a < 1:
                raise InvalidConfigError(f"constant model needs alpha in (-1, 1), got {a}")
            object.__setattr__(self, "alpha", a)
        if abs(complex(self.alpha_minus_one)) >= 1:
            raise InvalidConfigError(f"alpha_-1 must have modulus < 1, got {self.alpha_minus_one}")
        object.__setattr__(self, "alpha_minus_one", complex(self.alpha_minus_one))
        if self.tag == "riesz" and self.riesz_depth < 1:
            raise InvalidConfigError(f"riesz depth must be >= 1, got {self.riesz_depth}")
        if self.tag == "polynomial_coin" and self.alpha_minus_one != 0:
            raise InvalidConfigError("polynomial_coin is a coined walk; alpha_-1 must be 0")

    @property
    def label(self) -> str:
        if self.tag == "constant":
            name = f"constant({self.alpha})"
        elif self.tag == "riesz":
            name = f"riesz(K={self.riesz_depth}, alpha_-1={_fmt_complex(self.alpha_minus_one)})"
        else:
            name = self.tag
        return name if self.alignment == DEFAULT_ALIGNMENT else f"{name} [{self.alignment}]"

    @property
    def is_coined(self) -> bool:
        return self.tag != "riesz"

    def canonical(self) -> dict:
        d = {"tag": self.tag, "alignment": self.alignment}
        if self.tag == "constant":
            d["alpha"] = str(self.alpha)
        if self.tag == "riesz":
            d["riesz_depth"] = self.riesz_depth
            d["alpha_minus_one"] = _fmt_complex(self.alpha_minus_one)
        return d


def _fmt_complex(z: complex) -> str:
    return repr(z.real) if z.imag == 0 else f"{z.real!r}{z.imag:+}j"


@lru_cache(maxsize=None)
def _polynomial_coin(i: int) -> Coin:
    if i < 0:
        i = -1 - i
    alpha, _ = polynomial_coin_alpha(2 * i)
    return coin_from_alpha(alpha)


def _polynomial_alpha(j: int) -> Fraction:
    return polynomial_coin_alpha(j)[0] if j % 2 == 0 else Fraction(0)


def polynomial_alphas() -> VerblunskySequence:
    """The polynomial-coin model as a fair CMV sequence (odd coefficients zero)."""
    seq = fair_extend(_polynomial_alpha, 0)
    seq.description = "polynomial_coin"
    return seq


def hadamard_cmv_form() -> tuple[VerblunskySequence, callable]:
    """A CMV-form walk gauge-equivalent to the Hadamard walk.

    With basis phases ``d(i, up) = 1`` and ``d(i, down) = (-1)^i`` the
    Hadamard step becomes the coined walk of ``alpha_{2i} = (-1)^(i+1)/sqrt 2``
    (odd coefficients zero).  Both phases equal 1 at site 0, so the
    starting state is unchanged by the gauge.  Returns the sequence and
    the phase function on flat indices.
    """
    s = 1.0 / math.sqrt(2.0)

    def alpha(j: int) -> float:
        if j % 2:
            return 0.0
        return s if (j // 2) % 2 else -s

    def phase(flat: int) -> complex:
        site, spin = divmod(flat, 2)
        return 1.0 + 0j if spin == 0 else (-1.0 if site % 2 else 1.0) + 0j

    return VerblunskySequence(alpha, "hadamard-cmv-form"), phase


def catalog(model: ModelSpec):
    """Coins (callable ``site -> Coin``) for the coined models, Verblunsky
    coefficients for the Riesz walk."""
    if model.tag == "hadamard":
        return lambda i: HADAMARD
    if model.tag == "constant":
        coin = coin_from_alpha(model.alpha)
        return lambda i: coin
    if model.tag == "polynomial_coin":
        return _polynomial_coin
    return _riesz(model)


def _riesz(model: ModelSpec) -> VerblunskySequence:
    from .riesz import riesz_walk_alphas

    return riesz_walk_alphas(alpha_minus_one=model.alpha_minus_one, depth=model.riesz_depth)


def cmv_alphas(model: ModelSpec) -> VerblunskySequence:
    """Verblunsky coefficients of ``model``; the Hadamard walk enters
    through its gauge-equivalent CMV form."""
    if model.tag == "hadamard":
        return hadamard_cmv_form()[0]
    if model.tag == "constant":
        return VerblunskySequence.constant(model.alpha)
    if model.tag == "polynomial_coin":
        return polynomial_alphas()
    return _riesz(model)


def build_unitary(model: ModelSpec, window: int) -> BandedUnitary:
    """One-step operator of ``model`` on sites ``-window..window``.

    Under the ``"transition-rules"`` alignment coined models are built
    from their coins directly; every other case goes through
    :func:`build_cmv`.
    """
    if model.alignment == "transition-rules" and model.is_coined:
        return build_coined(catalog(model), window)
    return build_cmv(cmv_alphas(model), window, model.alignment)
