"""Frequency-domain chirplet transform (FCT) on a time x frequency x GDD grid.

For a sampled signal ``x_k = x(t0 + k dt)`` the transform used throughout is

    D^{xi^m g}(t, eta, gamma) = sum_k x_k conj(C(xi^m g)(t - tau_k, gamma)) exp(-i 2 pi eta tau_k)

with ``tau_k = k dt`` measured from the first sample.  At ``eta_j = j / (N dt)``
the exponential becomes ``exp(-i 2 pi jk / N)``, so each (t_n, gamma_l) row is
one length-N FFT.  The sum is not periodised; coefficients whose window
overlaps the record ends are biased (see ``boundary_band``).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import GridTooLarge
from .signals import ModeSpec, SampledSignal
from .windows import GaussianWindow, kernel_C

__all__ = [
    "GammaGrid",
    "TFGDDGrid",
    "fct_grid",
    "fct_grids",
    "fct_point",
    "fct_slices",
    "chirplet_transform_quad",
    "dtft",
    "duality_check",
    "boundary_band",
    "default_r0",
    "MAX_CELLS",
]

# ~1.2 GB of complex128 per grid
MAX_CELLS = 80_000_000


@dataclass(frozen=True)
class GammaGrid:
    """Symmetric GDD axis ``gamma_l = (l - (L-1)/2) * d_gamma`` on ``[-r0, r0]``."""

    r0: float
    l_bins: int

    def __post_init__(self):
        if not self.r0 > 0:
            raise ValueError("r0 must be positive")
        if self.l_bins < 3 or self.l_bins % 2 == 0:
            raise ValueError(f"l_bins must be odd and >= 3, got {self.l_bins}")

    @property
    def d_gamma(self) -> float:
        return 2 * self.r0 / (self.l_bins - 1)

    @property
    def values(self) -> np.ndarray:
        half = (self.l_bins - 1) // 2
        return np.arange(-half, half + 1) * self.d_gamma

    @property
    def start(self) -> float:
        return -((self.l_bins - 1) // 2) * self.d_gamma

    @classmethod
    def for_signal(cls, n: int, r0: float, l_bins: int | None = None) -> "GammaGrid":
        """Default bin count ``L = 2 floor(N/2) + 1``."""
        return cls(r0, l_bins if l_bins is not None else 2 * (n // 2) + 1)


def default_r0(signal: SampledSignal, modes: Sequence[ModeSpec] | None = None) -> float:
    """GDD half-range: 3 max|theta''| over the band when modes are known, else N dt / 8."""
    if modes:
        eta = np.arange(signal.n // 2 + 1) / (signal.n * signal.dt)
        peak = max(float(np.max(np.abs(m.gdd(eta)))) for m in modes)
        if peak > 0:
            return 3 * peak
    return signal.n * signal.dt / 8


def boundary_band(window: GaussianWindow, gamma=0.0):
    """Width (s) of the record-edge band where FCT coefficients are biased.

    Three envelope standard deviations of the time-domain kernel,
    ``3 sqrt(1 + 4 pi^2 sigma^4 gamma^2) / (2 pi sigma)``; the GDD term is the
    broadening of the chirped window.
    """
    s = window.sigma
    spread = np.sqrt(1 + 4 * np.pi**2 * s**4 * np.asarray(gamma, float) ** 2)
    out = 3 * window.time_scale * spread
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class TFGDDGrid:
    """FCT values indexed ``[n, j, l]`` (time, frequency, GDD).

    ``eta`` holds the frequency of each stored column; ``bins`` the DFT index it
    came from.
    """

    values: np.ndarray
    t: np.ndarray
    eta: np.ndarray
    bins: np.ndarray
    gamma: GammaGrid
    m: int
    sigma: float
    dt: float
    d_eta: float

    @property
    def shape(self):
        return self.values.shape

    @property
    def t0(self) -> float:
        return float(self.t[0])


def _eta_bins(n: int, full_band: bool, bins) -> np.ndarray:
    if bins is not None:
        b = np.asarray(bins, dtype=int).ravel()
        if b.size == 0 or b.min() < 0 or b.max() >= n:
            raise ValueError("frequency bin selection out of range")
        return b
    return np.arange(n) if full_band else np.arange(n // 2 + 1)


def fct_slices(
    signal: SampledSignal,
    window: GaussianWindow,
    ggrid: GammaGrid,
    ms: Sequence[int] = (0,),
    *,
    bins=None,
    full_band: bool = False,
    slices: Iterable[int] | None = None,
) -> Iterator[tuple[int, dict[int, np.ndarray]]]:
    """Yield ``(l, {m: D[n, j]})`` one GDD slice at a time.

    This is the memory-light core used by the full-grid and streaming paths.
    """
    n = signal.n
    x = signal.samples
    sel = _eta_bins(n, full_band, bins)
    lags = np.arange(-(n - 1), n) * signal.dt
    # toeplitz index: lag (t_n - tau_k) = (n - k) dt
    idx = np.arange(n)[:, None] - np.arange(n)[None, :] + (n - 1)
    gammas = ggrid.values
    contiguous = sel.size == sel[-1] - sel[0] + 1 and np.all(np.diff(sel) == 1)
    for l in range(ggrid.l_bins) if slices is None else slices:
        out = {}
        for m in ms:
            kern = np.conj(kernel_C(m, lags, gammas[l], window))
            spec = np.fft.fft(kern[idx] * x[None, :], axis=1)
            out[m] = spec[:, sel[0] : sel[-1] + 1] if contiguous else spec[:, sel]
        yield l, out


def _check_budget(cells: int, max_cells: int | None) -> None:
    cap = MAX_CELLS if max_cells is None else max_cells
    if cells > cap:
        raise GridTooLarge(f"grid of {cells} cells exceeds the budget of {cap}")


def fct_grids(
    signal: SampledSignal,
    window: GaussianWindow,
    ggrid: GammaGrid,
    ms: Sequence[int] = (0, 1, 2),
    *,
    bins=None,
    full_band: bool = False,
    threads: int = 1,
    max_cells: int | None = None,
) -> dict[int, TFGDDGrid]:
    """Compute several window powers at once (shared kernel lags and layout)."""
    n = signal.n
    sel = _eta_bins(n, full_band, bins)
    _check_budget(n * sel.size * ggrid.l_bins * len(ms), max_cells)
    bufs = {m: np.empty((ggrid.l_bins, n, sel.size), dtype=complex) for m in ms}

    def work(chunk):
        for l, res in fct_slices(signal, window, ggrid, ms, bins=sel, slices=chunk):
            for m in ms:
                bufs[m][l] = res[m]

    chunks = _partition(ggrid.l_bins, threads)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(work, chunks))
    else:
        for c in chunks:
            work(c)
    eta = np.fft.fftfreq(n, d=signal.dt)[sel]
    if not full_band and bins is None:
        eta = np.abs(eta)  # Nyquist bin reported as +fs/2
    return {
        m: TFGDDGrid(
            values=bufs[m].transpose(1, 2, 0),
            t=signal.times,
            eta=eta,
            bins=sel,
            gamma=ggrid,
            m=m,
            sigma=window.sigma,
            dt=signal.dt,
            d_eta=1.0 / (n * signal.dt),
        )
        for m in ms
    }


def _partition(total: int, parts: int) -> list[range]:
    parts = max(1, min(int(parts), total))
    edges = np.linspace(0, total, parts + 1).round().astype(int)
    return [range(a, b) for a, b in zip(edges[:-1], edges[1:])]


def fct_grid(
    signal: SampledSignal,
    window: GaussianWindow,
    ggrid: GammaGrid,
    m: int = 0,
    *,
    bins=None,
    full_band: bool = False,
    threads: int = 1,
    max_cells: int | None = None,
) -> TFGDDGrid:
    """FCT with window ``xi^m g`` on the full (t_n, eta_j, gamma_l) grid.

    Only the non-negative bins ``j = 0..N//2`` are kept unless ``full_band``;
    ``bins`` selects an explicit subset of DFT indices instead.
    """
    if signal.n < 4:
        raise ValueError("fct_grid needs at least 4 samples")
    return fct_grids(
        signal, window, ggrid, (m,), bins=bins, full_band=full_band,
        threads=threads, max_cells=max_cells,
    )[m]


def fct_point(signal: SampledSignal, t, eta, gamma, window: GaussianWindow, m: int = 0):
    """Direct O(N) summation at arbitrary (t, eta, gamma); broadcasts over inputs.

    ``t`` is absolute time (same clock as ``signal.times``); ``eta`` is used
    exactly, without rounding to a DFT bin.
    """
    t, eta, gamma = np.broadcast_arrays(
        np.asarray(t, float), np.asarray(eta, float), np.asarray(gamma, float)
    )
    shape = t.shape
    t, eta, gamma = t.ravel() - signal.t0, eta.ravel(), gamma.ravel()
    tau = np.arange(signal.n) * signal.dt
    x = signal.samples
    out = np.empty(t.size, dtype=complex)
    step = max(1, 2_000_000 // signal.n)
    for a in range(0, t.size, step):
        b = min(a + step, t.size)
        kern = np.conj(kernel_C(m, t[a:b, None] - tau[None, :], gamma[a:b, None], window))
        phase = np.exp(-2j * np.pi * eta[a:b, None] * tau[None, :])
        out[a:b] = np.sum(x[None, :] * kern * phase, axis=1)
    return out.reshape(shape) if shape else complex(out[0])


def dtft(signal: SampledSignal, xi):
    """``sum_k x_k exp(-i 2 pi xi tau_k)`` with ``tau_k = k dt``."""
    xi = np.asarray(xi, dtype=float)
    tau = np.arange(signal.n) * signal.dt
    flat = xi.ravel()
    out = np.empty(flat.size, dtype=complex)
    step = max(1, 2_000_000 // signal.n)
    for a in range(0, flat.size, step):
        b = min(a + step, flat.size)
        out[a:b] = np.exp(-2j * np.pi * flat[a:b, None] * tau[None, :]) @ signal.samples
    return out.reshape(xi.shape)


def chirplet_transform_quad(
    f, t: float, eta: float, gamma: float, window: GaussianWindow, *, span: float = 8.0,
    panels: int | None = None, order: int = 48,
) -> complex:
    """Time-domain chirplet transform of a callable ``f`` by panel Gauss-Legendre quadrature.

    ``Q_f(t, eta, gamma) = int f(t + tau) g(tau) exp(-i 2 pi eta tau) exp(-i pi gamma tau^2) dtau``
    with ``g`` the Gaussian window, integrated over ``|tau| <= span * sigma``.
    """
    lim = span * window.sigma
    if panels is None:
        osc = abs(eta) * 2 * lim + abs(gamma) * lim**2
        panels = int(max(16, 2 * osc + 64))
    xg, wg = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(-lim, lim, panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    tau = ((a + b) / 2 + (b - a) / 2 * xg).ravel()
    w = ((b - a) / 2 * wg).ravel()
    vals = f(t + tau) * window(tau) * np.exp(-2j * np.pi * eta * tau - 1j * np.pi * gamma * tau**2)
    return complex(np.sum(vals * w))


def duality_check(signal: SampledSignal, window: GaussianWindow, sample_points, *, spectrum=None) -> float:
    """Max ``|D_x(t, eta, gamma) - Q_xhat(eta, -t, -gamma)|`` over the sample points.

    ``D`` comes from ``fct_point``; ``Q`` is the chirplet transform of the
    signal's spectrum computed by quadrature.  ``spectrum`` may supply a
    closed-form spectrum callable; otherwise the DTFT of the samples is used.
    The DTFT phase reference is the first sample, as in ``fct_point``.
    """
    spec = spectrum if spectrum is not None else (lambda xi: dtft(signal, xi))
    worst = 0.0
    t0 = signal.t0
    tau_max = signal.n * signal.dt
    for t, eta, gamma in sample_points:
        d = fct_point(signal, t, eta, gamma, window, 0)
        # phase of the spectrum oscillates at rate ~tau_max in xi
        lim = 8 * window.sigma
        panels = int(max(16, 2 * (tau_max + abs(t - t0)) * 2 * lim + abs(gamma) * lim**2 + 64))
        q = chirplet_transform_quad(spec, eta, -(t - t0), -gamma, window, panels=panels)
        worst = max(worst, abs(d - q))
    return worst
