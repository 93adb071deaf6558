"""Gaussian analysis window and its chirp-modulated kernels.

Everything downstream (the discrete FCT, the FGSSO mixing matrix and the
error-bound evaluation) is built from

    C(xi^m g)(t, gamma) = int xi^m g(xi) exp(-i 2 pi xi t) exp(-i pi gamma xi^2) dxi

with ``g`` the unit-mass Gaussian of width ``sigma`` (Hz).  For the Gaussian
these integrals have closed forms; the quadrature versions below are kept as
independent oracles.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import hermite_e
from scipy import integrate, special

__all__ = [
    "GaussianWindow",
    "kernel_C",
    "kernel_C_quad",
    "moment_I",
    "moment_I_quad",
    "upsilon",
    "upsilon_branches",
    "derivative_window_reduction",
    "MAX_MOMENT",
]

MAX_MOMENT = 8


@dataclass(frozen=True)
class GaussianWindow:
    """Unit-mass Gaussian ``g(xi) = exp(-xi^2 / (2 sigma^2)) / (sigma sqrt(2 pi))``.

    ``sigma`` is a frequency-domain width in Hz.  The time-domain envelope of
    the corresponding kernel is ``exp(-2 pi^2 sigma^2 t^2)``, i.e. a standard
    deviation of ``1 / (2 pi sigma)`` seconds.
    """

    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma!r}")

    def __call__(self, xi):
        s = self.sigma
        return np.exp(-0.5 * (np.asarray(xi) / s) ** 2) / (s * math.sqrt(2 * math.pi))

    def derivative(self, xi):
        xi = np.asarray(xi)
        return -(xi / self.sigma**2) * self(xi)

    @property
    def time_scale(self) -> float:
        """Standard deviation (s) of the time-domain envelope at gamma = 0."""
        return 1.0 / (2 * math.pi * self.sigma)

    def scaled(self, factor: float) -> "GaussianWindow":
        return GaussianWindow(self.sigma * factor)


def _as_sigma(window) -> float:
    return window.sigma if isinstance(window, GaussianWindow) else float(window)


def kernel_C(m, t, gamma, window):
    """Closed form of ``C(xi^m g_sigma)(t, gamma)``.

    Vectorised over ``t`` and ``gamma`` (broadcast).  ``m`` = 0, 1, 2 use the
    textbook expressions; higher powers come from the Hermite form of the
    moments of a complex-variance Gaussian, which agrees with them for m <= 2.

    The square root of ``z = 1 + i 2 pi sigma^2 gamma`` is the principal
    branch; ``Re z = 1`` so the branch cut is never approached.
    """
    if m < 0 or int(m) != m:
        raise ValueError(f"window power must be a non-negative integer, got {m!r}")
    m = int(m)
    sigma = _as_sigma(window)
    t = np.asarray(t, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    z = 1.0 + 2j * np.pi * sigma**2 * gamma
    rz = np.sqrt(z)
    env = np.exp(-2 * np.pi**2 * sigma**2 * t**2 / z)
    if m == 0:
        return env / rz
    if m == 1:
        return -2j * np.pi * sigma**2 * t * env / (z * rz)
    if m == 2:
        return sigma**2 * (1.0 / (z * rz) - (2 * np.pi * sigma * t) ** 2 / (z * z * rz)) * env
    # E[xi^m exp(i w xi)] for xi ~ N(0, s2) with complex s2 = sigma^2 / z and
    # w = -2 pi t equals (i s)^m He_m(s w) exp(-s2 w^2 / 2).  Expanding He_m
    # keeps only even powers of s, so no second square root is needed.
    s2 = sigma**2 / z
    w = -2 * np.pi * t
    coef = hermite_e.herme2poly([0] * m + [1])
    acc = np.zeros(np.broadcast(t, gamma).shape, dtype=complex)
    for p, c in enumerate(coef):
        if c == 0:
            continue
        # term c * (s w)^p scaled by s^m: s^(m+p) w^p, m+p even
        acc = acc + c * s2 ** ((m + p) // 2) * w**p
    return (1j) ** m * acc * env / rz


def kernel_C_quad(m, t, gamma, window, *, span=8.0, epsabs=1e-13):
    """Adaptive-quadrature evaluation of ``C(xi^m g)(t, gamma)`` (scalar).

    Integrates over ``[-span sigma, span sigma]``; the Gaussian tail beyond 8
    sigma is below 1e-14 of the mass.
    """
    sigma = _as_sigma(window)
    g = GaussianWindow(sigma)
    lim = span * sigma

    def phase(xi):
        return -2 * np.pi * xi * t - np.pi * gamma * xi**2

    def re(xi):
        return xi**m * g(xi) * math.cos(phase(xi))

    def im(xi):
        return xi**m * g(xi) * math.sin(phase(xi))

    # oscillation count sets the subdivision budget
    opts = dict(epsabs=epsabs, epsrel=1e-12, limit=2000)
    with warnings.catch_warnings():
        # roundoff-limited tolerance reports are expected at this epsabs
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        r = integrate.quad(re, -lim, lim, **opts)[0]
        i = integrate.quad(im, -lim, lim, **opts)[0]
    return complex(r, i)


def moment_I(m: int, window) -> float:
    """``I_m = int |xi^m g_sigma(xi)| dxi`` in closed form (``m <= 8``)."""
    if int(m) != m or m < 0 or m > MAX_MOMENT:
        raise ValueError(f"moment order must be an integer in [0, {MAX_MOMENT}], got {m!r}")
    sigma = _as_sigma(window)
    return sigma**m / math.sqrt(2 * math.pi) * 2 ** ((m + 1) / 2) * special.gamma((m + 1) / 2)


def moment_I_quad(m: int, window) -> float:
    sigma = _as_sigma(window)
    g = GaussianWindow(sigma)
    val, _ = integrate.quad(lambda x: abs(x) ** m * g(x), -np.inf, np.inf, epsabs=0, epsrel=1e-13)
    return val


def upsilon_branches(
    m: int, window, delta1: float, delta2: float, *, verbatim: bool = False
) -> tuple[float, float]:
    """The two branches of the control function ``Upsilon_m``.

    The first branch controls the kernel where ``|t| >= delta1``, the second
    where ``|gamma| >= delta2``.

    ``|C(xi^2 g)|`` carries a factor ``sigma^2`` (its value at the origin is
    ``sigma^2``), which the uncorrected m = 2 expression omits.  By default the
    m = 2 branches are multiplied by ``sigma^2`` so that they are genuine
    bounds; ``verbatim=True`` returns the uncorrected expression.
    """
    if m not in (0, 1, 2):
        raise ValueError(f"Upsilon is defined for m in {{0, 1, 2}}, got {m!r}")
    if not delta1 > 0:
        raise ValueError("delta1 must be positive")
    if delta2 < 0:
        raise ValueError("delta2 must be non-negative")
    sigma = _as_sigma(window)
    s = 1.0 + 4 * np.pi**2 * sigma**4 * delta2**2
    psd = np.pi * sigma * delta1
    if m == 0:
        return 1.0 / (2**0.25 * math.sqrt(psd)), s**-0.25
    if m == 1:
        return 2**0.25 * math.sqrt(sigma) / math.sqrt(np.pi * delta1), math.sqrt(2) * sigma * s**-0.25
    scale = 1.0 if verbatim else sigma**2
    return (
        scale * (1.0 / (2**0.75 * psd**1.5) + 2 * s**-0.25),
        scale * (s**-0.75 + 2 * s**-0.25),
    )


def upsilon(m: int, window, delta1: float, delta2: float, *, verbatim: bool = False) -> float:
    """Control function ``Upsilon_m(sigma, delta1, delta2)``.

    Meant to dominate ``|C(xi^m g)(t, gamma)|`` off the box
    ``{|t| < delta1, |gamma| < delta2}``.  It does not depend on the mode
    index or on frequency for the Gaussian window.
    """
    return max(upsilon_branches(m, window, delta1, delta2, verbatim=verbatim))


def derivative_window_reduction(window) -> float:
    """Coefficient ``c`` with ``g'(xi) = c * xi * g(xi)``, i.e. ``-1/sigma^2``.

    Hence ``D^{g'} = c D^{xi g}`` and ``D^{xi g'} = c D^{xi^2 g}``.
    """
    return -1.0 / _as_sigma(window) ** 2
