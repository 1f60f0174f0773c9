"""Spin-site basis of the walk.

States live on sites ``-L..L`` of the integer line, each carrying a spin
up or down.  Basis vectors are enumerated by a *flat* index::

    flat(i, up) = 2 i,     flat(i, down) = 2 i + 1

so that sorting by flat index gives ``..., |-1 up>, |-1 down>, |0 up>,
|0 down>, |1 up>, ...``.  The positive subspace is exactly ``flat >= 1``
(``|0 down>, |1 up>, |1 down>, ...``) and the projection onto it is a
diagonal indicator.  Inside a window of half-width ``L`` the flat index
``f`` is stored at array position ``f + 2 L``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InvalidWindowError, WindowMismatchError

__all__ = [
    "Spin",
    "BasisIndex",
    "StateVector",
    "flat_index",
    "from_flat",
    "window_size",
    "cut_position",
    "positive_mask",
    "initial_state",
    "project_positive",
    "project_negative",
]


class Spin(enum.IntEnum):
    UP = 0
    DOWN = 1


@dataclass(frozen=True)
class BasisIndex:
    site: int
    spin: Spin

    @property
    def flat(self) -> int:
        return 2 * self.site + int(self.spin)

    @classmethod
    def from_flat(cls, flat: int) -> "BasisIndex":
        site, spin = divmod(flat, 2)
        return cls(site, Spin(spin))

    @property
    def positive(self) -> bool:
        return self.flat >= 1


def flat_index(site: int, spin: Spin | int) -> int:
    return 2 * site + int(spin)


def from_flat(flat: int) -> BasisIndex:
    return BasisIndex.from_flat(flat)


def window_size(half_width: int) -> int:
    """Number of basis states for sites ``-L..L``."""
    return 4 * half_width + 2


def cut_position(half_width: int) -> int:
    """Array position of flat index 1, the first positive basis state."""
    return 2 * half_width + 1


def positive_mask(half_width: int) -> np.ndarray:
    mask = np.zeros(window_size(half_width), dtype=bool)
    mask[cut_position(half_width):] = True
    return mask


def _check_window(half_width: int) -> None:
    if int(half_width) != half_width or half_width < 1:
        raise InvalidWindowError(f"window half-width must be an integer >= 1, got {half_width!r}")


@dataclass(frozen=True, eq=False)
class StateVector:
    """Amplitudes over the flat indices ``-2L .. 2L+1`` of a symmetric window.

    Amplitudes outside the window are implicitly zero.  The array is made
    read-only on construction.
    """

    window: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        _check_window(self.window)
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.shape != (window_size(self.window),):
            raise WindowMismatchError(
                f"expected {window_size(self.window)} amplitudes for window {self.window}, "
                f"got shape {amps.shape}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_dict(cls, window: int, amps: dict[int, complex]) -> "StateVector":
        """Build a state from ``{flat index: amplitude}``."""
        _check_window(window)
        arr = np.zeros(window_size(window), dtype=np.complex128)
        for flat, value in amps.items():
            pos = flat + 2 * window
            if not 0 <= pos < arr.size:
                raise InvalidWindowError(f"flat index {flat} outside window {window}")
            arr[pos] = value
        return cls(window, arr)

    def __getitem__(self, flat: int) -> complex:
        pos = flat + 2 * self.window
        if not 0 <= pos < self.amplitudes.size:
            return 0j
        return complex(self.amplitudes[pos])

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def flat_indices(self) -> np.ndarray:
        return np.arange(-2 * self.window, 2 * self.window + 2)

    def support(self, tol: float = 0.0) -> tuple[int, int]:
        """Smallest and largest flat index carrying ``|amplitude| > tol``."""
        nz = np.flatnonzero(np.abs(self.amplitudes) > tol)
        if nz.size == 0:
            return (0, -1)
        return (int(nz[0]) - 2 * self.window, int(nz[-1]) - 2 * self.window)

    def allclose(self, other: "StateVector", atol: float = 1e-12) -> bool:
        if other.window != self.window:
            return False
        return bool(np.allclose(self.amplitudes, other.amplitudes, rtol=0.0, atol=atol))


def initial_state(window: int) -> StateVector:
    """``(|0 up> + i |0 down>) / sqrt 2``, the starting state of every run."""
    _check_window(window)
    s = 1.0 / np.sqrt(2.0)
    return StateVector.from_dict(window, {0: s, 1: 1j * s})


def project_positive(v: StateVector) -> StateVector:
    amps = np.array(v.amplitudes)
    amps[: cut_position(v.window)] = 0.0
    return StateVector(v.window, amps)


def project_negative(v: StateVector) -> StateVector:
    amps = np.array(v.amplitudes)
    amps[cut_position(v.window):] = 0.0
    return StateVector(v.window, amps)
