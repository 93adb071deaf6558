"""Renyi-entropy concentration measure and Gaussian window-width selection."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NumericalFailure
from .fct import GammaGrid, fct_slices
from .signals import SampledSignal
from .windows import GaussianWindow

__all__ = [
    "EntropyConfig",
    "renyi_entropy",
    "renyi_from_sums",
    "fct_entropy",
    "optimize_sigma",
    "EntropyCurve",
]

_GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class EntropyConfig:
    """Renyi order and cell volume ``dt * d_eta * d_gamma``.

    ``cell_volume=None`` takes the volume from the grid being measured.
    """

    order: float = 2.5
    cell_volume: float | None = None

    def __post_init__(self):
        if not self.order > 1:
            raise ValueError(f"Renyi order must exceed 1, got {self.order!r}")
        if self.cell_volume is not None and not self.cell_volume > 0:
            raise ValueError("cell_volume must be positive")


def renyi_from_sums(s_order: float, s_energy: float, order: float, volume: float) -> float:
    """``(1/(1-l)) log2(S_l V / (S_1 V)^l)`` from ``S_l = sum P^{2l}`` and ``S_1 = sum P^2``."""
    if not s_energy > 0:
        raise NumericalFailure("zero-energy grid has no Renyi entropy")
    # log form avoids overflow of (S_1 V)^l
    log2 = math.log2(s_order) + math.log2(volume) - order * (math.log2(s_energy) + math.log2(volume))
    return log2 / (1 - order)


def _grid_volume(grid) -> float:
    return float(grid.dt * grid.d_eta * grid.gamma.d_gamma)


def renyi_entropy(grid, cfg: EntropyConfig = EntropyConfig()) -> float:
    """Renyi entropy of ``|grid values|`` as a Riemann sum with cell volume ``V``.

    ``grid`` is a TFGDDGrid / SqueezedGrid or a bare array (then
    ``cfg.cell_volume`` defaults to 1).
    """
    if isinstance(grid, np.ndarray):
        values, volume = grid, cfg.cell_volume or 1.0
    else:
        values = grid.values
        volume = cfg.cell_volume if cfg.cell_volume is not None else _grid_volume(grid)
    p2 = np.abs(values) ** 2
    peak = float(p2.max()) if p2.size else 0.0
    if not peak > 0:
        raise NumericalFailure("zero-energy grid has no Renyi entropy")
    # scale-free sums; the entropy is invariant to the normalisation
    p2 = p2 / peak
    return renyi_from_sums(float(np.sum(p2**cfg.order)), float(np.sum(p2)), cfg.order, volume)


def fct_entropy(
    signal: SampledSignal,
    window: GaussianWindow,
    ggrid: GammaGrid,
    cfg: EntropyConfig = EntropyConfig(),
) -> float:
    """Entropy of the m = 0 FCT over the non-negative band, one GDD slice at a time."""
    s_ord = np.zeros(ggrid.l_bins)
    s_en = np.zeros(ggrid.l_bins)
    for l, res in fct_slices(signal, window, ggrid, (0,)):
        p2 = res[0].real ** 2 + res[0].imag ** 2
        s_ord[l] = np.sum(p2**cfg.order)
        s_en[l] = np.sum(p2)
    volume = cfg.cell_volume
    if volume is None:
        volume = signal.dt * ggrid.d_gamma / (signal.n * signal.dt)
    return renyi_from_sums(float(s_ord.sum()), float(s_en.sum()), cfg.order, volume)


@dataclass(frozen=True)
class EntropyCurve:
    """Every evaluated ``(sigma, entropy)`` pair, sorted by sigma."""

    sigma: np.ndarray
    entropy: np.ndarray

    def rows(self):
        return list(zip(self.sigma.tolist(), self.entropy.tolist()))


def optimize_sigma(
    signal: SampledSignal,
    ggrid: GammaGrid,
    sigma_range: Sequence[float],
    cfg: EntropyConfig = EntropyConfig(),
    n_coarse: int = 12,
    *,
    refine_steps: int = 12,
    threads: int = 1,
) -> tuple[float, EntropyCurve]:
    """Minimise the FCT entropy over the Gaussian width.

    A log-spaced scan of ``n_coarse`` widths is followed by golden-section
    refinement (in log sigma) on the bracket around the coarse minimiser.
    Unimodality inside that bracket is assumed; the full curve is returned so
    a multimodal profile can be spotted.  The returned width is the argmin of
    the returned curve.
    """
    lo, hi = (float(v) for v in sigma_range)
    if not (0 < lo < hi and math.isfinite(hi)):
        raise ValueError(f"invalid sigma range [{lo}, {hi}]")
    if n_coarse < 8:
        raise ValueError("n_coarse must be at least 8")
    seen: dict[float, float] = {}

    def ent(s: float) -> float:
        if s not in seen:
            seen[s] = fct_entropy(signal, GaussianWindow(s), ggrid, cfg)
        return seen[s]

    coarse = np.geomspace(lo, hi, n_coarse)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            vals = list(pool.map(lambda s: fct_entropy(signal, GaussianWindow(s), ggrid, cfg), coarse))
        for s, v in zip(coarse.tolist(), vals):
            seen[s] = v
    else:
        vals = [ent(s) for s in coarse.tolist()]
    i = int(np.argmin(vals))
    a = math.log(coarse[max(i - 1, 0)])
    b = math.log(coarse[min(i + 1, n_coarse - 1)])
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = ent(math.exp(c)), ent(math.exp(d))
    for _ in range(refine_steps):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = ent(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = ent(math.exp(d))
    sig = np.array(sorted(seen))
    curve = EntropyCurve(sigma=sig, entropy=np.array([seen[s] for s in sig]))
    return float(sig[int(np.argmin(curve.entropy))]), curve
