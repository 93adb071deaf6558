"""Error-bound quantities for the GD/GDD estimators and for mode recovery.

Everything here is evaluated for a known synthetic mode set: the class
parameters (amplitude-slope bound eps1, third-phase-derivative bound eps2,
separations delta1/delta2), the linearisation remainders ``Pi``, the residual
bounds ``Lambda``, the modulus envelopes ``gamma_m``, the estimator error
bounds and the recovery budget ``Omega0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .signals import ModeSpec
from .windows import GaussianWindow, moment_I, upsilon

__all__ = [
    "ClassParams",
    "measure_class_params",
    "dense_sup",
    "lemma_quantities",
    "theorem1_rhs",
    "omega0",
    "recovery_bounds",
    "eps0_from_det",
    "BoundRow",
    "SAMPLES",
]

SAMPLES = 2048


@dataclass(frozen=True)
class ClassParams:
    """Signal-class constants; ``eps0`` is the inverse ``|det E0|`` floor (set per region)."""

    eps1: float
    eps2: float
    delta1: float
    delta2: float
    eps0: float = math.nan

    def __post_init__(self):
        for name in ("eps1", "eps2"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative")
        for name in ("delta1", "delta2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def with_eps0(self, eps0: float) -> "ClassParams":
        return replace(self, eps0=float(eps0))


def dense_sup(f, lo: float, hi: float, n: int = SAMPLES) -> float:
    """``sup |f|`` on ``[lo, hi]`` by ``n``-point sampling plus a parabolic step at the sampled max."""
    x = np.linspace(lo, hi, n)
    v = np.abs(f(x))
    i = int(np.argmax(v))
    best = float(v[i])
    if 0 < i < n - 1:
        den = v[i - 1] - 2 * v[i] + v[i + 1]
        if den < 0:
            h = x[1] - x[0]
            xs = x[i] + 0.5 * h * (v[i - 1] - v[i + 1]) / den
            best = max(best, float(np.abs(f(np.array([xs])))[0]))
    return best


def _separations(modes: Sequence[ModeSpec], eta: np.ndarray):
    """Half GD and half GDD gaps, pairwise, as ``(pairs, n_eta)`` arrays."""
    s1, s2 = [], []
    for a in range(len(modes)):
        for b in range(a + 1, len(modes)):
            s1.append(0.5 * np.abs(modes[a].gd(eta) - modes[b].gd(eta)))
            s2.append(0.5 * np.abs(modes[a].gdd(eta) - modes[b].gdd(eta)))
    return np.array(s1), np.array(s2)


def measure_class_params(
    modes: Sequence[ModeSpec],
    band: Sequence[float],
    *,
    delta1: float | None = None,
    delta2: float | None = None,
    n: int = SAMPLES,
) -> ClassParams:
    """Measure eps1, eps2 and the separations over ``band``.

    ``delta1``/``delta2`` not given are chosen as the largest pair at a common
    fraction ``c`` of their scales ``S1 = max half GD gap`` and ``S2 = max
    half GDD gap``: ``c`` is the smallest over frequency of
    ``max(gap1/S1, gap2/S2)``, so at every frequency and for every pair one of
    the two separation inequalities holds.  With a single mode the separation
    condition is vacuous and the defaults are infinite.
    """
    lo, hi = (float(v) for v in band)
    if not hi > lo:
        raise ValueError("band must satisfy lo < hi")
    eta = np.linspace(lo, hi, n)
    for m in modes:
        if np.any(m.amplitude(eta) <= 0):
            raise ValueError(f"mode {m.name or ''} has a non-positive amplitude in the band")
    eps1 = max(dense_sup(m.amp_derivative, lo, hi, n) for m in modes)
    eps2 = max(dense_sup(m.phase_third, lo, hi, n) for m in modes)
    d1, d2 = math.inf, math.inf
    if len(modes) > 1 and (delta1 is None or delta2 is None):
        s1, s2 = _separations(modes, eta)
        big1, big2 = float(s1.max()), float(s2.max())
        if delta1 is not None:
            # largest delta2 such that each point not GD-separated is GDD-separated
            weak = s1 <= delta1
            d2 = float(s2[weak].min()) if weak.any() else big2
        elif delta2 is not None:
            weak = s2 <= delta2
            d1 = float(s1[weak].min()) if weak.any() else big1
        else:
            u = np.maximum(s1 / big1 if big1 > 0 else 0.0, s2 / big2 if big2 > 0 else 0.0)
            c = float(u.min())
            d1, d2 = c * big1, c * big2
        shrink = 1 - 1e-9  # the separation inequalities are strict
        d1, d2 = d1 * shrink, d2 * shrink
    d1 = delta1 if delta1 is not None else d1
    d2 = delta2 if delta2 is not None else d2
    if not (d1 > 0 and d2 > 0):
        raise ValueError("modes are not separated in GD or GDD anywhere in the band")
    return ClassParams(eps1=eps1, eps2=eps2, delta1=d1, delta2=d2)


def lemma_quantities(
    params: ClassParams,
    modes: Sequence[ModeSpec],
    window: GaussianWindow,
    eta,
    k: int,
    *,
    verbatim_upsilon: bool = False,
) -> dict:
    """``Pi_{m,l}`` (m <= 3), ``Pi_m``, ``gamma_m`` (m <= 2), ``Lambda_{m,k}`` (m <= 1) and ``M``.

    Vectorised over ``eta``.  ``Pi_l`` has shape ``(4, K, ...)``; the others are
    indexed by ``m`` first.
    """
    eta = np.asarray(eta, dtype=float)
    kk = len(modes)
    if not 0 <= k < kk:
        raise ValueError("mode index out of range")
    e1, e2 = params.eps1, params.eps2
    im = [moment_I(m, window) for m in range(7)]
    amp = np.array([m.amplitude(eta) for m in modes])  # (K, ...)
    big_m = amp.sum(axis=0)
    ups = [upsilon(m, window, params.delta1, params.delta2, verbatim=verbatim_upsilon) for m in range(3)]
    pi_l = np.array([[e1 * im[m + 1] + e2 * math.pi / 3 * amp[l] * im[m + 3] for l in range(kk)] for m in range(4)])
    pi = pi_l.sum(axis=1)
    others = [l for l in range(kk) if l != k]
    gam = np.array([
        amp[k] * im[m] + sum(amp[l] * ups[m] for l in others) + pi[m] for m in range(3)
    ])
    gd_k, gdd_k = modes[k].gd(eta), modes[k].gdd(eta)
    lam = []
    for m in range(2):
        base = e1 * kk * im[m] + e1 * e2 * math.pi * kk * im[m + 3] + e2 * math.pi * big_m * im[m + 2]
        sep = sum(
            2 * math.pi * (
                np.abs(gd_k - modes[l].gd(eta)) * (amp[l] * ups[m] + pi_l[m, l])
                + np.abs(gdd_k - modes[l].gdd(eta)) * (amp[l] * ups[m + 1] + pi_l[m + 1, l])
            )
            for l in others
        )
        lam.append(base + sep)
    return {"Pi_l": pi_l, "Pi": pi, "gamma": gam, "Lambda": np.array(lam), "M": big_m}


def theorem1_rhs(params: ClassParams, lemma_out: dict):
    """``(bound_t, bound_r)`` with ``eps0 / (2 pi)`` times the Lambda-gamma products."""
    if not params.eps0 > 0:
        raise ValueError("eps0 must be measured (positive) before evaluating the bound")
    lam, gam = lemma_out["Lambda"], lemma_out["gamma"]
    c = params.eps0 / (2 * math.pi)
    return c * (lam[0] * gam[2] + lam[1] * gam[1]), c * (lam[0] * gam[1] + lam[1] * gam[0])


def eps0_from_det(det_values) -> float:
    """``1 / min |det E0|`` over the given cells."""
    det_values = np.asarray(det_values, dtype=float)
    if det_values.size == 0:
        raise ValueError("empty evaluation region")
    return 1.0 / float(det_values.min())


def omega0(
    params: ClassParams,
    modes: Sequence[ModeSpec],
    tau,
    gamma,
    window: GaussianWindow,
    eta,
):
    """Recovery budget ``Omega0(eta)`` for ridges ``tau``/``gamma`` of shape ``(K, ...)``."""
    eta = np.asarray(eta, dtype=float)
    tau = np.asarray(tau, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    kk = len(modes)
    i1, i2, i3 = (moment_I(m, window) for m in (1, 2, 3))
    amp = np.array([m.amplitude(eta) for m in modes])
    out = params.eps1 * kk * i1 + params.eps2 * math.pi / 3 * amp.sum(axis=0) * i3
    for l, m in enumerate(modes):
        out = out + amp[l] * (
            2 * math.pi * np.abs(tau[l] - m.gd(eta)) * i1 + math.pi * np.abs(gamma[l] - m.gdd(eta)) * i2
        )
    return out


def recovery_bounds(omega, inverse: np.ndarray) -> np.ndarray:
    """``Omega0 * sum_l |(A^-1)_{k,l}|`` per mode ``k``.

    The recovery error is ``A^-1 r`` with every ``|r_l| <= Omega0``, so mode
    ``k`` picks up row ``k`` of the inverse.
    """
    return np.asarray(omega) * np.abs(inverse).sum(axis=1)


@dataclass(frozen=True)
class BoundRow:
    """One line of the bound report."""

    eta_hz: float
    mode: int
    bound_t: float
    bound_r: float
    omega0: float
    recovery_bound: float
    measured_t_err: float
    measured_r_err: float
    measured_recovery_err: float

    FIELDS = (
        "eta_hz", "mode", "bound_t", "bound_r", "omega0", "recovery_bound",
        "measured_t_err", "measured_r_err", "measured_recovery_err",
    )

    def astuple(self):
        return tuple(getattr(self, f) for f in self.FIELDS)
