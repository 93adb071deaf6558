"""Frequency-domain group signal separation (FGSSO).

At each frequency the FCT sampled on the K ridges is modelled as

    D^g(tau_k, eta, gamma_k) = sum_l a_{k,l} xhat_l(eta),
    a_{k,l} = C(g)(tau_l - tau_k, gamma_l - gamma_k),

and the mode spectra follow from one small complex solve per column.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg

from .errors import NumericalFailure
from .fct import boundary_band, fct_point
from .ridges import RidgeSet
from .signals import SampledSignal, Spectrum, inverse_transform
from .windows import GaussianWindow, kernel_C

__all__ = [
    "MixingMatrix",
    "RecoveredModes",
    "assemble_A",
    "mixing_matrix",
    "recover_modes",
    "diagnostics_profile",
    "PINV_RCOND",
]

# smallest/largest singular value below which the pseudo-inverse is used
PINV_RCOND = 1e-10


@dataclass(frozen=True, eq=False)
class MixingMatrix:
    """Mixing matrix ``A`` at one frequency, its (pseudo-)inverse and conditioning."""

    eta: float
    a: np.ndarray
    b: np.ndarray
    inf_norm_inv: float
    cond2: float
    pseudo: bool

    def solve(self, d: np.ndarray) -> np.ndarray:
        return self.b @ d


def mixing_matrix(tau: Sequence[float], gamma: Sequence[float], window: GaussianWindow, eta: float = np.nan) -> MixingMatrix:
    """Build ``A`` from ridge coordinates at one frequency and invert it."""
    tau = np.asarray(tau, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    if tau.shape != gamma.shape or tau.ndim != 1 or tau.size == 0:
        raise ValueError("ridge coordinates must be equal-length 1-D sequences")
    if not (np.all(np.isfinite(tau)) and np.all(np.isfinite(gamma))):
        raise ValueError(f"ridge undefined at eta = {eta}")
    a = kernel_C(0, tau[None, :] - tau[:, None], gamma[None, :] - gamma[:, None], window)
    k = tau.size
    sv = np.linalg.svd(a, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    pseudo = bool(sv[-1] < PINV_RCOND * sv[0])
    if pseudo:
        b = np.linalg.pinv(a, rcond=PINV_RCOND)
    elif k <= 4:
        b = np.linalg.inv(a)
    else:
        b = linalg.lu_solve(linalg.lu_factor(a), np.eye(k))
    return MixingMatrix(
        eta=float(eta), a=a, b=b, inf_norm_inv=float(np.abs(b).sum(axis=1).max()),
        cond2=cond, pseudo=pseudo,
    )


def assemble_A(ridges: RidgeSet, eta: float, window: GaussianWindow) -> MixingMatrix:
    """Mixing matrix at the ridge column nearest ``eta``."""
    j = int(np.argmin(np.abs(ridges.eta - eta)))
    if not np.isclose(ridges.eta[j], eta, rtol=0, atol=0.5 * abs(ridges.eta[1] - ridges.eta[0])):
        raise ValueError(f"eta = {eta} is not on the ridge frequency axis")
    a, b = ridges.common_support()
    if not a <= j < b:
        raise ValueError(f"not all ridges are defined at eta = {eta}")
    return mixing_matrix(ridges.tau[:, j], ridges.gamma[:, j], window, ridges.eta[j])


@dataclass(frozen=True, eq=False)
class RecoveredModes:
    """Recovered mode spectra ``[k, j]`` on ``eta`` and their time-domain signals.

    ``band[j]`` marks the columns that were solved; the rest are zero.
    ``diagnostics[j]`` is ``None`` outside the band.
    """

    eta: np.ndarray
    spectra: np.ndarray
    band: np.ndarray
    time_modes: list
    diagnostics: list

    @property
    def k(self) -> int:
        return self.spectra.shape[0]


def recovery_band(
    signal: SampledSignal, ridges: RidgeSet, window: GaussianWindow, *, boundary_sd: float = 3.0
) -> np.ndarray:
    """Columns in the common ridge support whose ridge points all avoid the record-edge band.

    The band is ``boundary_sd`` time-domain standard deviations of the analysis
    window, ``boundary_sd / (2 pi sigma)`` seconds, from either end of the record.
    """
    a, b = ridges.common_support()
    band = np.zeros(ridges.eta.size, dtype=bool)
    band[a:b] = True
    width = boundary_band(window) * boundary_sd / 3.0
    lo = signal.t0 + width
    hi = signal.t0 + (signal.n - 1) * signal.dt - width
    with np.errstate(invalid="ignore"):
        inside = np.all((ridges.tau >= lo) & (ridges.tau <= hi), axis=0)
    return band & inside


def recover_modes(
    signal: SampledSignal,
    ridges: RidgeSet,
    analysis_window: GaussianWindow,
    recovery_window: GaussianWindow | None = None,
    *,
    boundary_sd: float = 3.0,
) -> RecoveredModes:
    """Solve ``A x = d`` per frequency on the recovery band.

    ``d_k = D^g(tau_k, eta, gamma_k)`` is evaluated at the exact (off-grid)
    ridge coordinates with the recovery window, which also builds ``A``.
    Columns outside the band are zero; time modes come from the inverse FFT
    with negative-frequency bins zero.
    """
    if ridges.k < 1:
        raise ValueError("no ridges to recover from")
    win = recovery_window if recovery_window is not None else analysis_window
    band = recovery_band(signal, ridges, analysis_window, boundary_sd=boundary_sd)
    cols = np.flatnonzero(band)
    n_j = ridges.eta.size
    spectra = np.zeros((ridges.k, n_j), dtype=complex)
    diags: list = [None] * n_j
    if cols.size:
        t = ridges.tau[:, cols]
        g = ridges.gamma[:, cols]
        e = np.broadcast_to(ridges.eta[cols], t.shape)
        d = fct_point(signal, t, e, g, win, 0)
        singular = 0
        for i, j in enumerate(cols):
            mm = mixing_matrix(t[:, i], g[:, i], win, ridges.eta[j])
            diags[j] = mm
            spectra[:, j] = mm.solve(d[:, i])
            singular += mm.pseudo
        if singular == cols.size:
            raise NumericalFailure("mixing matrix is singular at every frequency")
    time_modes = []
    n = signal.n
    for k in range(ridges.k):
        full = np.zeros(n, dtype=complex)
        full[:n_j] = spectra[k]
        time_modes.append(inverse_transform(Spectrum(full, 1.0 / (n * signal.dt)), t0=signal.t0))
    return RecoveredModes(eta=ridges.eta, spectra=spectra, band=band, time_modes=time_modes, diagnostics=diags)


def diagnostics_profile(per_eta: Sequence[MixingMatrix | None]) -> dict[str, np.ndarray]:
    """``eta``, ``inf_norm_inv``, ``cond2`` and ``pseudo`` curves over the solved columns."""
    mats = [m for m in per_eta if m is not None]
    return {
        "eta": np.array([m.eta for m in mats]),
        "inf_norm_inv": np.array([m.inf_norm_inv for m in mats]),
        "cond2": np.array([m.cond2 for m in mats]),
        "pseudo": np.array([m.pseudo for m in mats], dtype=bool),
    }
