"""One-step evolution operators on a finite window.

A :class:`BandedUnitary` stores the matrix of ``U`` in the flat basis as
diagonals: ``bands[w + o, a] = U[a, a + o]`` for array positions ``a``
and offsets ``|o| <= w``.  Coined and CMV walks both have ``w = 2``.

The CMV construction follows the doubly-infinite matrix ``E = L M`` with
``L`` the direct sum of ``Theta_{2j}`` on ``(2j, 2j+1)`` and ``M`` the
direct sum of ``Theta_{2j-1}`` on ``(2j-1, 2j)``,
``Theta_j = [[conj a_j, rho_j], [rho_j, -a_j]]``.  Its entries are the
transition amplitudes read row-to-column (row = source state), so the
column-vector operator is ``U = E^T``.  Where the CMV indices sit on the
flat basis is a separate choice, see :func:`build_cmv`.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping

import numpy as np
import scipy.sparse as sp

from .basis import StateVector, window_size
from .coins import Coin, VerblunskySequence
from .errors import IncompleteModelError, InvalidConfigError, InvalidWindowError, WindowMismatchError

__all__ = [
    "BandedUnitary",
    "build_coined",
    "build_cmv",
    "ALIGNMENTS",
    "alignment_offset",
    "apply",
    "apply_adjoint",
    "gauge_transform",
    "band_left",
    "band_right_adjoint",
    "band_adjoint_left",
    "band_sandwich",
]

BANDWIDTH = 2


class BandedUnitary:
    """Banded matrix of the one-step evolution on sites ``-L..L``.

    ``closure`` names the boundary treatment at the window edges.  The
    band array is read-only after construction.
    """

    def __init__(self, window: int, bands: np.ndarray, closure: str = ""):
        if window < 1:
            raise InvalidWindowError(f"window half-width must be >= 1, got {window}")
        bands = np.array(bands, dtype=np.complex128)
        if bands.ndim != 2 or bands.shape[0] % 2 != 1 or bands.shape[1] != window_size(window):
            raise WindowMismatchError(f"band array shape {bands.shape} does not fit window {window}")
        bands.setflags(write=False)
        self.window = int(window)
        self.bands = bands
        self.width = bands.shape[0] // 2
        self.closure = closure
        self.offsets = tuple(o for o in range(-self.width, self.width + 1) if np.any(bands[self.width + o]))

    @property
    def size(self) -> int:
        return self.bands.shape[1]

    def entry(self, row: int, col: int) -> complex:
        """``U[row, col]`` addressed by flat indices."""
        o = col - row
        a = row + 2 * self.window
        if abs(o) > self.width or not (0 <= a < self.size and 0 <= a + o < self.size):
            return 0j
        return complex(self.bands[self.width + o, a])

    def to_sparse(self) -> sp.csr_matrix:
        n, w = self.size, self.width
        rows, cols, vals = [], [], []
        for o in range(-w, w + 1):
            a = np.arange(max(0, -o), min(n, n - o))
            d = self.bands[w + o, a]
            keep = d != 0
            rows.append(a[keep])
            cols.append(a[keep] + o)
            vals.append(d[keep])
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
        )

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def unitarity_error(self) -> float:
        """``max |U^dagger U - I|`` over the window."""
        u = self.to_sparse()
        d = (u.conj().T @ u - sp.identity(self.size, dtype=np.complex128, format="csr")).tocoo()
        return float(np.abs(d.data).max()) if d.nnz else 0.0

    def restricted(self, lo: int, hi: int) -> np.ndarray:
        """Bands of the compression of ``U`` to array positions ``[lo, hi)``."""
        return self.bands[:, lo:hi]

    def __repr__(self) -> str:
        return f"BandedUnitary(window={self.window}, width={self.width}, closure={self.closure!r})"


def _band_lists(width: int, n: int) -> np.ndarray:
    return np.zeros((2 * width + 1, n), dtype=np.complex128)


def band_left(bands: np.ndarray, x: np.ndarray, offsets=None) -> np.ndarray:
    """``U @ x`` for banded ``U`` and ``x`` of shape ``(m, ...)``."""
    w = bands.shape[0] // 2
    m = x.shape[0]
    y = np.zeros(x.shape, dtype=np.result_type(bands, x))
    pad = (slice(None),) + (None,) * (x.ndim - 1)
    for o in offsets if offsets is not None else range(-w, w + 1):
        if abs(o) >= m:
            continue
        d = bands[w + o]
        if o >= 0:
            y[: m - o] += d[: m - o][pad] * x[o:]
        else:
            y[-o:] += d[-o:][pad] * x[: m + o]
    return y


def band_right_adjoint(bands: np.ndarray, x: np.ndarray, offsets=None) -> np.ndarray:
    """``x @ U^dagger`` for ``x`` of shape ``(k, m)``."""
    w = bands.shape[0] // 2
    m = x.shape[-1]
    y = np.zeros(x.shape, dtype=np.result_type(bands, x))
    for o in offsets if offsets is not None else range(-w, w + 1):
        if abs(o) >= m:
            continue
        d = bands[w + o].conj()
        if o >= 0:
            y[..., : m - o] += x[..., o:] * d[: m - o]
        else:
            y[..., -o:] += x[..., : m + o] * d[-o:]
    return y


def band_adjoint_left(bands: np.ndarray, x: np.ndarray, offsets=None) -> np.ndarray:
    """``U^dagger @ x`` for ``x`` of shape ``(m, ...)``."""
    w = bands.shape[0] // 2
    m = x.shape[0]
    y = np.zeros(x.shape, dtype=np.result_type(bands, x))
    pad = (slice(None),) + (None,) * (x.ndim - 1)
    for o in offsets if offsets is not None else range(-w, w + 1):
        if abs(o) >= m:
            continue
        d = bands[w + o].conj()
        if o >= 0:
            y[o:] += d[: m - o][pad] * x[: m - o]
        else:
            y[: m + o] += d[-o:][pad] * x[-o:]
    return y


def band_sandwich(bands: np.ndarray, x: np.ndarray, offsets=None) -> np.ndarray:
    """``U x U^dagger``."""
    return band_right_adjoint(bands, band_left(bands, x, offsets), offsets)


def _coin_lookup(coins) -> Callable[[int], Coin]:
    if isinstance(coins, Coin):
        return lambda i: coins
    if isinstance(coins, Mapping):
        def get(i: int) -> Coin:
            try:
                return coins[i]
            except KeyError:
                raise IncompleteModelError(f"no coin for site {i}") from None
        return get
    if callable(coins):
        return coins
    raise InvalidConfigError(f"cannot interpret {type(coins).__name__} as a coin sequence")


def build_coined(coins, window: int) -> BandedUnitary:
    """Coined walk ``|i up> -> c11 |i+1 up> + c21 |i-1 down>``,
    ``|i down> -> c12 |i+1 up> + c22 |i-1 down>``.

    ``coins`` is a single :class:`Coin`, a mapping ``site -> Coin`` or a
    callable.  At the edges, amplitude that would leave the window is
    reflected into the spin slot of the same boundary site that no
    interior transition feeds, which keeps ``U`` exactly unitary.  The
    lower reflection carries a factor -1 so that the closure coincides
    with the unimodular cut of :func:`build_cmv` under the
    ``"transition-rules"`` alignment.
    """
    if window < 1:
        raise InvalidWindowError(f"window half-width must be >= 1, got {window}")
    get = _coin_lookup(coins)
    n, w, off = window_size(window), BANDWIDTH, 2 * window
    bands = _band_lists(w, n)

    def put(row: int, col: int, val: complex) -> None:
        if row == 2 * window + 2:
            row = 2 * window + 1
        elif row == -2 * window - 1:
            row, val = -2 * window, -val
        bands[w + col - row, row + off] += val

    for i in range(-window, window + 1):
        c = get(i)
        if not isinstance(c, Coin):
            c = Coin.from_matrix(c)
        up, down = 2 * i, 2 * i + 1
        put(2 * i + 2, up, c.c11)
        put(2 * i - 1, up, c.c21)
        put(2 * i + 2, down, c.c12)
        put(2 * i - 1, down, c.c22)
    return BandedUnitary(window, bands, closure="reflect")


ALIGNMENTS = {"display": 1, "transition-rules": 0}


def alignment_offset(alignment: str) -> int:
    """Flat index minus CMV index for a named alignment."""
    try:
        return ALIGNMENTS[alignment]
    except KeyError:
        raise InvalidConfigError(
            f"unknown alignment {alignment!r}; choose from {', '.join(ALIGNMENTS)}"
        ) from None


def _cmv_rows(alphas: VerblunskySequence, mlo: int, mhi: int):
    """Yield ``(row, col, value)`` of the CMV matrix ``E`` restricted to
    CMV indices ``mlo..mhi``.

    The two coefficients whose blocks straddle the window edges,
    ``alpha_{mlo-1}`` and ``alpha_{mhi}``, are replaced by 1 (``rho = 0``),
    which decouples the window from its complement.
    """
    lo_cut, hi_cut = mlo - 1, mhi

    def a(j: int) -> complex:
        return 1.0 + 0j if j in (lo_cut, hi_cut) else complex(alphas.alpha(j))

    def r(j: int) -> float:
        return 0.0 if j in (lo_cut, hi_cut) else alphas.rho(j)

    def inside(m: int) -> bool:
        return mlo <= m <= mhi

    for k in range(mlo // 2, mhi // 2 + 1):
        e, o = 2 * k, 2 * k + 1
        am, a0, a1 = a(e - 1), a(e), a(e + 1)
        rm, r0, r1 = r(e - 1), r(e), r(e + 1)
        rows = (
            # row 2k:   rho_{2k-1} conj a_{2k}, -a_{2k-1} conj a_{2k}, rho_{2k} conj a_{2k+1}, rho_{2k} rho_{2k+1}
            (e, (rm * a0.conjugate(), -am * a0.conjugate(), r0 * a1.conjugate(), r0 * r1)),
            # row 2k+1: rho_{2k-1} rho_{2k}, -a_{2k-1} rho_{2k}, -a_{2k} conj a_{2k+1}, -a_{2k} rho_{2k+1}
            (o, (rm * r0, -am * r0, -a0 * a1.conjugate(), -a0 * r1)),
        )
        for row, vals in rows:
            if not inside(row):
                continue
            for col, val in zip(range(e - 1, e + 3), vals):
                if val != 0 and inside(col):
                    yield row, col, val


def build_cmv(alphas: VerblunskySequence, window: int, alignment: str = "display") -> BandedUnitary:
    """CMV walk for the doubly-infinite sequence ``alphas`` on sites ``-L..L``.

    ``alignment`` fixes how CMV indices ``m`` sit on flat indices ``f``:

    ``"display"``
        ``m = f - 1``.  The cut between the negative and positive
        subspaces falls between ``m = -1`` and ``m = 0``, the point about
        which the fair rule ``alpha_i = alpha_{-2-i}`` is symmetric.
    ``"transition-rules"``
        ``m = f``.  With odd coefficients zero the matrix coincides entry
        by entry with :func:`build_coined` for ``C_i`` built from
        ``alpha_{2i}``.

    The coefficients needed are those with blocks inside the window; the
    two straddling the edges are closed with modulus one.
    """
    if window < 1:
        raise InvalidWindowError(f"window half-width must be >= 1, got {window}")
    shift = alignment_offset(alignment)
    n, w, off = window_size(window), BANDWIDTH, 2 * window
    mlo, mhi = -off - shift, off + 1 - shift
    bands = _band_lists(w, n)
    for erow, ecol, val in _cmv_rows(alphas, mlo, mhi):
        # U = E^T: amplitude from state `erow` into state `ecol`.
        row, col = ecol + shift, erow + shift
        bands[w + col - row, row + off] += val
    return BandedUnitary(window, bands, closure=f"cmv-unimodular-cut/{alignment}")


def _check(u: BandedUnitary, v: StateVector) -> None:
    if u.window != v.window:
        raise WindowMismatchError(f"operator window {u.window} != state window {v.window}")


def apply(u: BandedUnitary, v: StateVector) -> StateVector:
    _check(u, v)
    return StateVector(v.window, band_left(u.bands, v.amplitudes, u.offsets))


def apply_adjoint(u: BandedUnitary, v: StateVector) -> StateVector:
    _check(u, v)
    return StateVector(v.window, band_adjoint_left(u.bands, v.amplitudes, u.offsets))


def gauge_transform(u: BandedUnitary, phases) -> BandedUnitary:
    """``D U D^dagger`` for diagonal ``D``.

    ``phases`` is an array over the window's array positions or a callable
    on flat indices; every phase must have modulus one.
    """
    n, w = u.size, u.width
    if callable(phases):
        d = np.array([phases(f) for f in range(-2 * u.window, 2 * u.window + 2)], dtype=np.complex128)
    else:
        d = np.asarray(phases, dtype=np.complex128)
    if d.shape != (n,):
        raise WindowMismatchError(f"need {n} phases, got shape {d.shape}")
    if np.abs(np.abs(d) - 1.0).max() > 1e-12:
        raise InvalidConfigError("gauge phases must have modulus one")
    bands = np.array(u.bands)
    for o in range(-w, w + 1):
        a = np.arange(max(0, -o), min(n, n - o))
        bands[w + o, a] *= d[a] * d[a + o].conj()
    return BandedUnitary(u.window, bands, closure=u.closure)
