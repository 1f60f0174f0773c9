"""Monitored occupation-time distributions.

After every step of ``U`` the walker is measured with the projections
``P`` (positive subspace, flat index >= 1) and ``Q = I - P``.  The
probability of ``r`` positive outcomes in ``n`` steps is

    P(N_n = r) = sum over (P_1..P_n) with r P's of ||P_n U ... P_1 U psi||^2.

Three engines evaluate it:

* :func:`brute_force` enumerates all ``2^n`` branches (the oracle);
* :func:`density_recursion` carries the ledger
  ``rho_{k+1,j} = Q U rho_{k,j} U^+ Q + P U rho_{k,j-1} U^+ P``;
* :func:`transform_recursion` propagates one block per phase
  ``rho <- Q U rho U^+ Q + e^{i theta} P U rho U^+ P`` and inverts the
  discrete Fourier transform of the traces.

Blocks with ``k >= 1`` are block diagonal in the ``P``/``Q`` split and are
stored as their two diagonal parts, restricted to the light cone.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .basis import StateVector, cut_position, window_size
from .cmv import BandedUnitary, band_left, band_sandwich
from .errors import EngineGuardError, LightConeError, WindowMismatchError

__all__ = [
    "OccupationDistribution",
    "DensityLedger",
    "brute_force",
    "density_recursion",
    "iter_ledger",
    "transform_recursion",
    "phase_trace",
    "cdf",
    "run_engine",
    "ENGINES",
    "BRUTE_FORCE_MAX_STEPS",
    "BOUNDARY_TOL",
]

ENGINES = ("brute", "density", "transform")
BRUTE_FORCE_MAX_STEPS = 20
BOUNDARY_TOL = 1e-12
NEGATIVE_TOL = 1e-12
SUM_TOL = 1e-10
_MAX_BATCH = 1 << 14


@dataclass(frozen=True, eq=False)
class OccupationDistribution:
    """``probs[r] = P(N_n = r)`` for ``r = 0..n``.

    Values in ``(-1e-12, 0)`` are clamped to 0; the sum before clamping is
    kept in ``diagnostics["pre_clamp_sum"]``.  No renormalization is done.
    """

    n: int
    probs: np.ndarray
    engine: str = ""
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        raw = np.asarray(self.probs, dtype=float)
        if raw.shape != (self.n + 1,):
            raise ValueError(f"need {self.n + 1} probabilities, got shape {raw.shape}")
        lo, hi = float(raw.min()), float(raw.max())
        if lo < -NEGATIVE_TOL or hi > 1 + NEGATIVE_TOL:
            raise ValueError(f"probabilities out of range: min {lo:.3e}, max {hi:.3e}")
        total = math.fsum(raw)
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        diag = dict(self.diagnostics)
        diag.setdefault("pre_clamp_sum", total)
        diag.setdefault("min_pre_clamp", lo)
        diag.setdefault("boundary_mass", 0.0)
        clamped = np.clip(raw, 0.0, 1.0)
        clamped.setflags(write=False)
        object.__setattr__(self, "probs", clamped)
        object.__setattr__(self, "diagnostics", diag)

    @property
    def ratios(self) -> np.ndarray:
        return np.arange(self.n + 1) / self.n if self.n else np.zeros(1)

    def cdf(self) -> np.ndarray:
        return cdf(self)

    def tail_mass(self, lower: int, upper: int) -> float:
        """``P(N_n <= lower or N_n >= upper)``."""
        p = self.probs
        lo = p[: lower + 1].sum() if lower >= 0 else 0.0
        hi = p[upper:].sum() if upper <= self.n else 0.0
        if upper <= lower:
            return float(p.sum())
        return float(lo + hi)

    def symmetry_defect(self) -> float:
        return float(np.abs(self.probs - self.probs[::-1]).max())


def cdf(d: OccupationDistribution) -> np.ndarray:
    """Cumulative ``P(N_n <= r)``; nondecreasing since probabilities are clamped."""
    return np.cumsum(d.probs)


def _check_inputs(u: BandedUnitary, psi: StateVector, n: int) -> None:
    if u.window != psi.window:
        raise WindowMismatchError(f"operator window {u.window} != state window {psi.window}")
    if n < 0 or int(n) != n:
        raise EngineGuardError(f"number of steps must be a non-negative integer, got {n!r}")


def _boundary_positions(size: int) -> np.ndarray:
    # both spin states of the outermost site on each side
    return np.array([0, 1, size - 2, size - 1])


def _initial_range(u: BandedUnitary, psi: StateVector) -> tuple[int, int]:
    nz = np.flatnonzero(psi.amplitudes)
    cut, w, size = cut_position(u.window), u.width, u.size
    if nz.size == 0:
        lo, hi = cut, cut
    else:
        lo, hi = int(nz[0]), int(nz[-1]) + 1
    return max(0, min(lo, cut - w)), min(size, max(hi, cut + w))


def _finish(raw: np.ndarray, n: int, engine: str, **diag) -> OccupationDistribution:
    raw = np.asarray(raw, dtype=float)
    diag = {k: float(v) for k, v in diag.items()}
    diag["pre_clamp_sum"] = math.fsum(raw)
    diag["min_pre_clamp"] = float(raw.min())
    return OccupationDistribution(n, raw, engine, diag)


# --------------------------------------------------------------------------
# brute force


def brute_force(u: BandedUnitary, psi: StateVector, n: int) -> OccupationDistribution:
    """Sum ``||(P_n U) ... (P_1 U) psi||^2`` over all ``2^n`` projection sequences."""
    _check_inputs(u, psi, n)
    if n > BRUTE_FORCE_MAX_STEPS:
        raise EngineGuardError(
            f"brute force needs 2^{n} branches; refusing n > {BRUTE_FORCE_MAX_STEPS}. "
            "Use the density or transform engine."
        )
    size, w, cut = u.size, u.width, cut_position(u.window)
    lo, hi = _initial_range(u, psi)
    probs = np.zeros(n + 1)
    boundary = np.zeros(n + 1)
    edge = _boundary_positions(size)

    def descend(x: np.ndarray, r: np.ndarray, k: int, lo: int, hi: int) -> None:
        # x: amplitudes on [lo, hi) for a batch of branches (columns)
        if k == n:
            probs[:] += np.bincount(r, weights=np.einsum("ab,ab->b", x.conj(), x).real, minlength=n + 1)
            return
        nlo, nhi = max(0, lo - w), min(size, hi + w)
        y = np.zeros((nhi - nlo, x.shape[1]), dtype=np.complex128)
        y[lo - nlo : hi - nlo] = x
        y = band_left(u.restricted(nlo, nhi), y, u.offsets)
        sel = edge[(edge >= nlo) & (edge < nhi)] - nlo
        if sel.size:
            boundary[k + 1] += float((np.abs(y[sel]) ** 2).sum())
        c = min(max(cut - nlo, 0), nhi - nlo)
        yq, yp = y.copy(), y
        yq[c:] = 0.0
        yp[:c] = 0.0
        if 2 * x.shape[1] <= _MAX_BATCH:
            descend(np.concatenate([yq, yp], axis=1), np.concatenate([r, r + 1]), k + 1, nlo, nhi)
        else:
            descend(yq, r, k + 1, nlo, nhi)
            descend(yp, r + 1, k + 1, nlo, nhi)

    x0 = psi.amplitudes[lo:hi, None].copy()
    descend(x0, np.zeros(1, dtype=np.int64), 0, lo, hi)
    if boundary.max() > BOUNDARY_TOL:
        k = int(np.argmax(boundary > BOUNDARY_TOL))
        raise LightConeError(
            f"mass {boundary[k]:.3e} reached the window edge at step {k}; use a window half-width >= n + 2"
        )
    return _finish(probs, n, "brute", boundary_mass=boundary.max())


# --------------------------------------------------------------------------
# light-cone bookkeeping shared by the ledger and transform engines


class _SplitStepper:
    """One monitored step on block-diagonal densities ``rho_P (+) rho_Q``.

    The positive part lives on array positions ``[cut, phi)``, the negative
    part on ``[qlo, cut)``.  ``U`` couples the two halves only through the
    ``w x w`` corners next to the cut, so
    ``P U rho U^+ P = U_PP rho_P U_PP^+ + B_PQ rho_Q[corner] B_PQ^+``.
    """

    def __init__(self, u: BandedUnitary, psi: StateVector):
        self.u = u
        self.size, self.w, self.cut = u.size, u.width, cut_position(u.window)
        self.qlo, self.phi = _initial_range(u, psi)
        c, w = self.cut, self.w
        dense = u.to_sparse()
        self.b_pq = dense[c : c + w, c - w : c].toarray()
        self.b_qp = dense[c - w : c, c : c + w].toarray()
        self.psi = psi.amplitudes[self.qlo : self.phi].copy()
        self.edge = _boundary_positions(self.size)

    def first(self) -> tuple[np.ndarray, np.ndarray]:
        """Positive and negative parts of ``U psi`` on the grown light cone."""
        self._grow()
        full = np.zeros(self.phi - self.qlo, dtype=np.complex128)
        start = self._old[0] - self.qlo
        full[start : start + self.psi.size] = self.psi
        phi_vec = band_left(self.u.restricted(self.qlo, self.phi), full, self.u.offsets)
        k = self.cut - self.qlo
        return phi_vec[k:], phi_vec[:k]

    def _grow(self) -> None:
        self._old = (self.qlo, self.phi)
        self.qlo = max(0, self.qlo - self.w)
        self.phi = min(self.size, self.phi + self.w)

    def grow(self) -> None:
        self._grow()

    def advance(self, rp: np.ndarray, rq: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``(P U rho U^+ P, Q U rho U^+ Q)`` for ``rho = rp (+) rq`` on the previous cone.

        Call :meth:`grow` once per step before advancing the blocks of that step.
        """
        c, w = self.cut, self.w
        oq, op = self._old
        dp, dq = self.phi - c, c - self.qlo
        ap = np.zeros((dp, dp), dtype=np.complex128)
        ap[: op - c, : op - c] = rp
        ap = band_sandwich(self.u.restricted(c, self.phi), ap, self.u.offsets)
        aq = np.zeros((dq, dq), dtype=np.complex128)
        s = oq - self.qlo
        aq[s:, s:] = rq
        aq = band_sandwich(self.u.restricted(self.qlo, c), aq, self.u.offsets)
        ap[:w, :w] += self.b_pq @ rq[-w:, -w:] @ self.b_pq.conj().T
        aq[-w:, -w:] += self.b_qp @ rp[:w, :w] @ self.b_qp.conj().T
        return ap, aq

    def boundary_mass(self, rp: np.ndarray, rq: np.ndarray) -> float:
        mass = 0.0
        for pos in self.edge:
            if self.cut <= pos < self.phi:
                mass += abs(rp[pos - self.cut, pos - self.cut])
            elif self.qlo <= pos < self.cut:
                mass += abs(rq[pos - self.qlo, pos - self.qlo])
        return mass


def _outer(v: np.ndarray) -> np.ndarray:
    return np.outer(v, v.conj())


@dataclass
class DensityLedger:
    """Blocks ``rho_{k,j}``, ``j = 0..k``, after ``k`` monitored steps.

    For ``k >= 1`` each block is stored as its positive part (array
    positions ``[cut, phi)``) and negative part (``[qlo, cut)``); at
    ``k = 0`` the single block is ``|psi><psi|``.
    """

    step: int
    window: int
    qlo: int
    cut: int
    phi: int
    positive: list
    negative: list
    initial: np.ndarray | None = None
    boundary_mass: float = 0.0

    def traces(self) -> np.ndarray:
        if self.step == 0:
            return np.array([np.trace(self.initial).real])
        return np.array([np.trace(p).real + np.trace(q).real for p, q in zip(self.positive, self.negative)])

    def block(self, j: int) -> np.ndarray:
        """Block ``rho_{k,j}`` as a full matrix over the whole window."""
        size = window_size(self.window)
        out = np.zeros((size, size), dtype=np.complex128)
        if self.step == 0:
            out[self.qlo : self.phi, self.qlo : self.phi] = self.initial
            return out
        out[self.cut : self.phi, self.cut : self.phi] = self.positive[j]
        out[self.qlo : self.cut, self.qlo : self.cut] = self.negative[j]
        return out


def iter_ledger(u: BandedUnitary, psi: StateVector, n: int):
    """Yield the :class:`DensityLedger` after each step ``k = 0..n``.

    Raises :class:`LightConeError` as soon as the total mass on the two
    outermost sites exceeds ``BOUNDARY_TOL``.
    """
    _check_inputs(u, psi, n)
    st = _SplitStepper(u, psi)
    yield DensityLedger(0, u.window, st.qlo, st.cut, st.phi, [], [], initial=_outer(st.psi))
    edge = 0.0
    if n == 0:
        return
    fp, fq = st.first()
    pos = [np.zeros((st.phi - st.cut,) * 2, dtype=np.complex128), _outer(fp)]
    neg = [_outer(fq), np.zeros((st.cut - st.qlo,) * 2, dtype=np.complex128)]
    edge = _guard(st, pos, neg, 1)
    yield DensityLedger(1, u.window, st.qlo, st.cut, st.phi, pos, neg, boundary_mass=edge)
    for k in range(2, n + 1):
        st.grow()
        dp, dq = st.phi - st.cut, st.cut - st.qlo
        new_pos = [np.zeros((dp, dp), dtype=np.complex128)]
        new_neg = []
        for rp, rq in zip(pos, neg):
            ap, aq = st.advance(rp, rq)
            new_pos.append(ap)
            new_neg.append(aq)
        new_neg.append(np.zeros((dq, dq), dtype=np.complex128))
        pos, neg = new_pos, new_neg
        edge = max(edge, _guard(st, pos, neg, k))
        yield DensityLedger(k, u.window, st.qlo, st.cut, st.phi, pos, neg, boundary_mass=edge)


def _guard(st: _SplitStepper, pos, neg, k: int) -> float:
    if st.qlo > 1 and st.phi < st.size - 1:
        return 0.0
    mass = sum(st.boundary_mass(p, q) for p, q in zip(pos, neg))
    if mass > BOUNDARY_TOL:
        raise LightConeError(
            f"mass {mass:.3e} reached the window edge at step {k}; use a window half-width >= n + 2"
        )
    return mass


def density_recursion(u: BandedUnitary, psi: StateVector, n: int) -> OccupationDistribution:
    """``P(N_n = r) = trace(rho_{n,r})`` from the density ledger."""
    for ledger in iter_ledger(u, psi, n):
        pass
    return _finish(ledger.traces(), n, "density", boundary_mass=ledger.boundary_mass)


# --------------------------------------------------------------------------
# phase transform


def phase_trace(u: BandedUnitary, psi: StateVector, n: int, theta: float) -> complex:
    """``trace rho(theta)`` after ``n`` steps of the phase-weighted recursion.

    Equals ``sum_r P(N_n = r) e^{i r theta}``.
    """
    _check_inputs(u, psi, n)
    st = _SplitStepper(u, psi)
    if n == 0:
        return complex(np.vdot(st.psi, st.psi))
    lam = complex(math.cos(theta), math.sin(theta))
    fp, fq = st.first()
    rp, rq = lam * _outer(fp), _outer(fq)
    _guard(st, [rp], [rq], 1)
    for k in range(2, n + 1):
        st.grow()
        rp, rq = st.advance(rp, rq)
        rp *= lam
        _guard(st, [rp], [rq], k)
    tp = np.diagonal(rp)
    tq = np.diagonal(rq)
    re = math.fsum(np.concatenate([tp.real, tq.real]))
    im = math.fsum(np.concatenate([tp.imag, tq.imag]))
    return complex(re, im)


def _corner_traces(u: BandedUnitary, psi: StateVector, n: int, thetas: np.ndarray) -> tuple[np.ndarray, float]:
    """Phase traces by propagating only the ``w x w`` corners next to the cut.

    Inside one half the evolution is the compression ``V = U_PP`` (or
    ``U_QQ``); the halves exchange mass only through ``B_PQ`` and
    ``B_QP``.  Unrolling the recursion, the corner of ``rho_P`` after
    ``k`` steps is a convolution of the earlier ``rho_Q`` corners with the
    kernels ``G_j = V^j[corner, corner]``, and its trace uses
    ``H_j = (V^j[:, corner])^+ V^j[:, corner]``.  All kernels cost
    ``O(n L)`` to tabulate; each phase then costs ``O(n^2)``.
    """
    st = _SplitStepper(u, psi)
    c, w, size = st.cut, st.w, st.size
    phases = np.exp(1j * np.outer(thetas, np.arange(n + 1)))  # lam^e
    if n == 0:
        return np.full(thetas.shape, complex(np.vdot(st.psi, st.psi))), 0.0
    fp, fq = st.first()
    vp = np.zeros(size - c, dtype=np.complex128)
    vp[: fp.size] = fp
    vq = np.zeros(c, dtype=np.complex128)
    vq[c - fq.size :] = fq
    bp, bq = u.restricted(c, size), u.restricted(0, c)
    mp = np.zeros((size - c, w), dtype=np.complex128)
    mp[:w, :w] = np.eye(w)
    mq = np.zeros((c, w), dtype=np.complex128)
    mq[-w:, -w:] = np.eye(w)
    W = w * w
    aa_p = np.empty((n, W), dtype=np.complex128)
    aa_q = np.empty((n, W), dtype=np.complex128)
    norm_p = np.empty(n)
    norm_q = np.empty(n)
    kp = np.empty((n, W, W), dtype=np.complex128)
    kq = np.empty((n, W, W), dtype=np.complex128)
    hp = np.empty((n, W), dtype=np.complex128)
    hq = np.empty((n, W), dtype=np.complex128)
    bpq = np.kron(st.b_pq, st.b_pq.conj())
    bqp = np.kron(st.b_qp, st.b_qp.conj())
    boundary = 0.0
    for j in range(n):
        aa_p[j] = np.outer(vp[:w], vp[:w].conj()).ravel()
        aa_q[j] = np.outer(vq[-w:], vq[-w:].conj()).ravel()
        norm_p[j] = np.vdot(vp, vp).real
        norm_q[j] = np.vdot(vq, vq).real
        gp, gq = mp[:w], mq[-w:]
        kp[j] = np.kron(gp, gp.conj()) @ bpq
        kq[j] = np.kron(gq, gq.conj()) @ bqp
        hp[j] = (st.b_pq.conj().T @ (mp.conj().T @ mp) @ st.b_pq).T.ravel()
        hq[j] = (st.b_qp.conj().T @ (mq.conj().T @ mq) @ st.b_qp).T.ravel()
        edge = [vp[-2:], vq[:2], mp[-2:], mq[:2]]
        boundary = max(boundary, float(sum((np.abs(e) ** 2).sum() for e in edge)))
        vp, vq = band_left(bp, vp, u.offsets), band_left(bq, vq, u.offsets)
        mp, mq = band_left(bp, mp, u.offsets), band_left(bq, mq, u.offsets)
    if boundary > BOUNDARY_TOL:
        raise LightConeError(f"propagators reached the window edge (mass {boundary:.3e}); use L >= n + 2")
    m = thetas.size
    cp = np.zeros((m, n + 1, W), dtype=np.complex128)
    cq = np.zeros((m, n + 1, W), dtype=np.complex128)
    kpt = np.ascontiguousarray(kp.transpose(0, 2, 1))
    kqt = np.ascontiguousarray(kq.transpose(0, 2, 1))
    for k in range(1, n + 1):
        cp[:, k] = phases[:, k, None] * aa_p[k - 1]
        cq[:, k] = aa_q[k - 1]
        if k >= 2:
            # u = 1..k-1 pairs with kernel index k-1-u and phase power k-u
            lam = phases[:, k - 1 : 0 : -1]
            src_q = (cq[:, 1:k] * lam[:, :, None]).reshape(m, -1)
            cp[:, k] += src_q @ kpt[k - 2 :: -1].reshape(-1, W)
            src_p = cp[:, 1:k].reshape(m, -1)
            cq[:, k] += src_p @ kqt[k - 2 :: -1].reshape(-1, W)
    lam = phases[:, n - 1 : 0 : -1]
    hp_rev = hp[n - 2 :: -1] if n > 1 else hp[:0]
    hq_rev = hq[n - 2 :: -1] if n > 1 else hq[:0]
    tp = phases[:, n] * norm_p[n - 1] + np.einsum("mu,muj,uj->m", lam, cq[:, 1:n], hp_rev)
    tq = norm_q[n - 1] + np.einsum("muj,uj->m", cp[:, 1:n], hq_rev)
    return tp + tq, boundary


def _inverse_transform(t: np.ndarray) -> tuple[np.ndarray, float]:
    m = t.size
    k = np.arange(m)
    # reduce m*r mod (n+1) before forming the angle to keep it small
    f = np.exp(-2j * np.pi * (np.outer(k, k) % m) / m)
    p = (f @ t) / m
    return p.real, float(np.abs(p.imag).max())


def transform_recursion(
    u: BandedUnitary,
    psi: StateVector,
    n: int,
    *,
    threads: int = 1,
    method: str = "block",
) -> OccupationDistribution:
    """Occupation distribution from ``n + 1`` independent phase runs.

    ``method="block"`` propagates the full phase-weighted density;
    ``method="corner"`` uses the corner convolution of
    :func:`_corner_traces`.  Only phases ``m <= (n+1)/2`` are evaluated,
    the rest follow from ``t(-theta) = conj t(theta)``.
    """
    _check_inputs(u, psi, n)
    m_total = n + 1
    half = m_total // 2 + 1
    thetas = 2.0 * np.pi * np.arange(half) / m_total
    boundary = 0.0
    if method == "block":
        def one(theta: float) -> complex:
            return phase_trace(u, psi, n, float(theta))

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                vals = list(pool.map(one, thetas))
        else:
            vals = [one(t) for t in thetas]
        t_half = np.array(vals, dtype=np.complex128)
    elif method == "corner":
        t_half, boundary = _corner_traces(u, psi, n, thetas)
    else:
        raise EngineGuardError(f"unknown transform method {method!r}")
    t = np.empty(m_total, dtype=np.complex128)
    t[:half] = t_half[: min(half, m_total)]
    for m in range(half, m_total):
        t[m] = t[m_total - m].conjugate()
    p, max_imag = _inverse_transform(t)
    return _finish(p, n, "transform", boundary_mass=boundary, max_imag=max_imag, t0_minus_one=abs(t[0] - 1.0))


def run_engine(engine: str, u: BandedUnitary, psi: StateVector, n: int, *, threads: int = 1,
               method: str = "block") -> OccupationDistribution:
    if engine == "brute":
        return brute_force(u, psi, n)
    if engine == "density":
        return density_recursion(u, psi, n)
    if engine == "transform":
        return transform_recursion(u, psi, n, threads=threads, method=method)
    raise EngineGuardError(f"unknown engine {engine!r}; choose from {', '.join(ENGINES)}")
