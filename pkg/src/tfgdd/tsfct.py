"""Time-reassigned synchrosqueezing of the FCT (TSFCT) and its TFR projection.

Each masked coefficient ``D(t_n, eta_j, gamma_l)`` is moved, within its own
frequency column, to the cell ``(tau_p, u_q)`` nearest its GD/GDD estimate
``(t_hat, r_hat)`` and summed there (complex accumulation).  Output axes are
the input axes; bin indices use round-half-to-even.  Estimates landing
outside the axes are dropped and counted, never clamped.

The squeezed values are a plain sum, without a ``dt * dgamma`` cell weight.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .fct import (
    GammaGrid,
    TFGDDGrid,
    _check_budget,
    _eta_bins,
    _partition,
    fct_slices,
)
from .reassign import DEFAULT_EPSILON_REL, ReassignmentField, _check_rel, reference_arrays
from .signals import SampledSignal
from .windows import GaussianWindow

__all__ = [
    "SqueezedGrid",
    "TFRGrid",
    "TSFCTResult",
    "squeeze",
    "project_tfr",
    "tsfct",
    "column_mass",
]

_TINY = np.finfo(float).tiny * 1e4
_OUT = -1  # estimate outside the output axes
_BAD = -2  # non-finite estimate
# columns scattered per bincount call
_COLUMN_CHUNK = 16


@dataclass(frozen=True, eq=False)
class SqueezedGrid:
    """Squeezed TF-GDD values indexed ``[p, j, q]`` on the source axes.

    ``kept_mass[j]`` is the complex sum of the source coefficients that were
    binned into column ``j``; ``dropped`` counts masked cells whose estimate
    fell outside the axes.
    """

    values: np.ndarray
    t: np.ndarray
    eta: np.ndarray
    bins: np.ndarray
    gamma: GammaGrid
    sigma: float
    dt: float
    d_eta: float
    masked: int
    dropped: int
    epsilon_used: float
    kept_mass: np.ndarray

    @property
    def shape(self):
        return self.values.shape

    @property
    def t0(self) -> float:
        return float(self.t[0])


@dataclass(frozen=True, eq=False)
class TFRGrid:
    """Non-negative time-frequency representation indexed ``[p, j]``."""

    values: np.ndarray
    t: np.ndarray
    eta: np.ndarray
    d_gamma: float


@dataclass(frozen=True, eq=False)
class TSFCTResult:
    """Output of the fused pipeline.

    ``d0`` is the raw m = 0 FCT and ``det_e0_mag`` the ``|det E0|`` plane (both
    indexed ``[n, j, l]``); ``field`` is only kept on request.
    """

    squeezed: SqueezedGrid
    d0: TFGDDGrid
    det_e0_mag: np.ndarray
    epsilon_used: float
    field: ReassignmentField | None = None


def _index_dtype(n_t: int, l_bins: int):
    return np.int16 if max(n_t, l_bins) < np.iinfo(np.int16).max else np.int32


def _bin_indices(t_hat, r_hat, t0, dt, g0, dg, n_t, l_bins, dtype):
    """Nearest-cell indices with ``_OUT``/``_BAD`` sentinels."""
    with np.errstate(invalid="ignore"):
        p = np.rint((t_hat - t0) / dt)
        q = np.rint((r_hat - g0) / dg)
    finite = np.isfinite(p) & np.isfinite(q)
    inside = finite & (p >= 0) & (p < n_t) & (q >= 0) & (q < l_bins)
    pi = np.where(inside, p, np.where(finite, _OUT, _BAD)).astype(dtype)
    qi = np.where(inside, q, np.where(finite, _OUT, _BAD)).astype(dtype)
    return pi, qi


def _scatter(vals, p, q, sel, n_t, l_bins):
    """Scatter-add ``vals[sel]`` into a ``(n_t, jc, l_bins)`` block.

    Inputs are ``(cells..., jc)`` with the column axis last.  ``np.bincount``
    visits elements in memory order, so each column's accumulation order is
    fixed by the cell layout alone and does not depend on how columns are
    grouped into chunks.
    """
    jc = vals.shape[-1]
    col = np.broadcast_to(np.arange(jc), vals.shape)
    flat = (col[sel].astype(np.int64) * n_t + p[sel]) * l_bins + q[sel]
    v = vals[sel]
    size = jc * n_t * l_bins
    re = np.bincount(flat, weights=v.real, minlength=size)
    im = np.bincount(flat, weights=v.imag, minlength=size)
    block = (re + 1j * im).reshape(jc, n_t, l_bins)
    c = col[sel]
    kept = np.bincount(c, weights=v.real, minlength=jc) + 1j * np.bincount(
        c, weights=v.imag, minlength=jc
    )
    return block.transpose(1, 0, 2), kept


def _run_columns(n_cols, threads, fn):
    chunks = [range(a, min(a + _COLUMN_CHUNK, n_cols)) for a in range(0, n_cols, _COLUMN_CHUNK)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, chunks))
    return [fn(c) for c in chunks]


def squeeze(d0: TFGDDGrid, field: ReassignmentField, *, threads: int = 1) -> SqueezedGrid:
    """Bin every masked coefficient at its ``(t_hat, r_hat)`` within its column.

    ``d0`` must be the m = 0 FCT the field was computed from.
    """
    if d0.m != 0:
        raise ValueError("squeeze needs the window-power-0 FCT")
    if (
        field.t_hat.shape != d0.values.shape
        or not np.array_equal(field.t, d0.t)
        or not np.array_equal(field.eta, d0.eta)
        or not np.array_equal(field.gamma, d0.gamma.values)
    ):
        raise ValueError("FCT grid and reassignment field do not share axes")
    n_t, n_j, l_bins = d0.values.shape
    g = d0.gamma
    dtype = _index_dtype(n_t, l_bins)
    out = np.zeros((n_t, n_j, l_bins), dtype=complex)
    kept = np.zeros(n_j, dtype=complex)
    counts = [0, 0]

    def work(cols):
        js = slice(cols.start, cols.stop)
        # (l, n, j) order, matching the streaming path
        vals = d0.values[:, js, :].transpose(2, 0, 1)
        th = field.t_hat[:, js, :].transpose(2, 0, 1)
        rh = field.r_hat[:, js, :].transpose(2, 0, 1)
        mask = field.mask[:, js, :].transpose(2, 0, 1)
        p, q = _bin_indices(th, rh, d0.t0, d0.dt, g.start, g.d_gamma, n_t, l_bins, dtype)
        sel = mask & (p >= 0)
        block, km = _scatter(vals, p, q, sel, n_t, l_bins)
        return js, block, km, int(mask.sum()), int((mask & (p == _OUT)).sum())

    for js, block, km, nm, nd in _run_columns(n_j, threads, work):
        out[:, js, :] = block
        kept[js] = km
        counts[0] += nm
        counts[1] += nd
    return SqueezedGrid(
        values=out, t=d0.t, eta=d0.eta, bins=d0.bins, gamma=g, sigma=d0.sigma, dt=d0.dt,
        d_eta=d0.d_eta, masked=counts[0], dropped=counts[1],
        epsilon_used=field.epsilon_used, kept_mass=kept,
    )


def tsfct(
    signal: SampledSignal,
    window: GaussianWindow,
    ggrid: GammaGrid,
    *,
    epsilon_rel: float = DEFAULT_EPSILON_REL,
    bins=None,
    full_band: bool = False,
    threads: int = 1,
    keep_field: bool = False,
    max_cells: int | None = None,
) -> TSFCTResult:
    """FCT, reference functions and squeezing in one pass over GDD slices.

    Only the m = 0 coefficients, ``|det E0|`` and the integer target cells are
    held for the whole grid; the m = 1, 2 transforms live one slice at a time.
    The mask threshold ``epsilon_rel * max |det E0|`` is applied after the
    first pass, when the global maximum is known.
    """
    _check_rel(epsilon_rel)
    n_t = signal.n
    sel = _eta_bins(n_t, full_band, bins)
    n_j, l_bins = sel.size, ggrid.l_bins
    _check_budget(n_t * n_j * l_bins, max_cells)
    dtype = _index_dtype(n_t, l_bins)
    d0buf = np.empty((l_bins, n_t, n_j), dtype=complex)
    detbuf = np.empty((l_bins, n_t, n_j))
    pbuf = np.empty((l_bins, n_t, n_j), dtype=dtype)
    qbuf = np.empty((l_bins, n_t, n_j), dtype=dtype)
    if keep_field:
        thbuf = np.empty((l_bins, n_t, n_j))
        rhbuf = np.empty((l_bins, n_t, n_j))
    times = signal.times
    gvals = ggrid.values

    def first(chunk):
        for l, res in fct_slices(signal, window, ggrid, (0, 1, 2), bins=sel, slices=chunk):
            th, rh, det = reference_arrays(
                res[0], res[1], res[2], times[:, None], gvals[l], window.sigma
            )
            d0buf[l] = res[0]
            detbuf[l] = det
            pbuf[l], qbuf[l] = _bin_indices(
                th, rh, times[0], signal.dt, ggrid.start, ggrid.d_gamma, n_t, l_bins, dtype
            )
            if keep_field:
                thbuf[l] = th
                rhbuf[l] = rh

    parts = _partition(l_bins, threads)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(first, parts))
    else:
        for c in parts:
            first(c)

    eps = epsilon_rel * float(detbuf.max())
    out = np.zeros((n_t, n_j, l_bins), dtype=complex)
    kept = np.zeros(n_j, dtype=complex)

    def second(cols):
        js = slice(cols.start, cols.stop)
        det = detbuf[:, :, js]
        p, q = pbuf[:, :, js], qbuf[:, :, js]
        mask = (det > eps) & (det > _TINY) & (p != _BAD)
        sel_ = mask & (p >= 0)
        block, km = _scatter(d0buf[:, :, js], p, q, sel_, n_t, l_bins)
        return js, block, km, int(mask.sum()), int((mask & (p == _OUT)).sum())

    masked = dropped = 0
    for js, block, km, nm, nd in _run_columns(n_j, threads, second):
        out[:, js, :] = block
        kept[js] = km
        masked += nm
        dropped += nd

    eta = np.fft.fftfreq(n_t, d=signal.dt)[sel]
    if not full_band and bins is None:
        eta = np.abs(eta)
    d_eta = 1.0 / (n_t * signal.dt)
    d0 = TFGDDGrid(
        values=d0buf.transpose(1, 2, 0), t=times, eta=eta, bins=sel, gamma=ggrid, m=0,
        sigma=window.sigma, dt=signal.dt, d_eta=d_eta,
    )
    squeezed = SqueezedGrid(
        values=out, t=times, eta=eta, bins=sel, gamma=ggrid, sigma=window.sigma, dt=signal.dt,
        d_eta=d_eta, masked=masked, dropped=dropped, epsilon_used=eps, kept_mass=kept,
    )
    field = None
    det_view = detbuf.transpose(1, 2, 0)
    if keep_field:
        mask = (det_view > eps) & (det_view > _TINY)
        th = thbuf.transpose(1, 2, 0)
        rh = rhbuf.transpose(1, 2, 0)
        mask &= np.isfinite(th) & np.isfinite(rh)
        field = ReassignmentField(
            t_hat=np.where(mask, th, np.nan), r_hat=np.where(mask, rh, np.nan),
            det_e0_mag=det_view, mask=mask, epsilon_used=eps, t=times, eta=eta, gamma=gvals,
        )
    return TSFCTResult(squeezed=squeezed, d0=d0, det_e0_mag=det_view, epsilon_used=eps, field=field)


def column_mass(values: np.ndarray) -> np.ndarray:
    """Complex sum of each frequency column of an ``[n, j, l]`` array."""
    return values.sum(axis=(0, 2))


def project_tfr(s: SqueezedGrid) -> TFRGrid:
    """``T(tau_p, eta_j) = sum_q |D(tau_p, eta_j, u_q)|^2 * d_gamma``."""
    n_t, n_j, _ = s.values.shape
    out = np.empty((n_t, n_j))
    for a in range(0, n_j, 64):
        v = s.values[:, a : a + 64, :]
        out[:, a : a + 64] = (v.real**2 + v.imag**2).sum(axis=2)
    return TFRGrid(values=out * s.gamma.d_gamma, t=s.t, eta=s.eta, d_gamma=s.gamma.d_gamma)
