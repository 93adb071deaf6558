"""Oracle comparisons behind the ``verify`` command and the acceptance suite.

Each check returns a small dict of measured errors; tolerances are applied
by the caller.
"""
from __future__ import annotations

import time

import numpy as np

from .fct import GammaGrid, boundary_band, fct_grid, fct_grids, fct_point
from .reassign import high_order_reference, reference_functions
from .signals import LinearFDChirpSpec, ModeSpec, inverse_transform, synth_spectrum
from .windows import GaussianWindow, kernel_C, kernel_C_quad

__all__ = [
    "kernel_oracle",
    "fft_vs_direct",
    "linear_chirp_exactness",
    "chirp_signal",
    "cubic_phase_mode",
    "high_order_gain",
    "SUITES",
    "run_suite",
]


def kernel_oracle(n: int = 300, seed: int = 0) -> dict:
    """Closed-form kernels against adaptive quadrature at ``n`` random ``(m, t, gamma, sigma)``."""
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(n):
        m = int(rng.integers(0, 3))
        sigma = float(rng.uniform(5.0, 50.0))
        t = float(rng.uniform(-0.05, 0.05))
        gamma = float(rng.uniform(-3e-3, 3e-3))
        w = GaussianWindow(sigma)
        worst = max(worst, abs(kernel_C(m, t, gamma, w) - kernel_C_quad(m, t, gamma, w)))
    return {"max_abs_error": worst, "points": n, "seconds": time.perf_counter() - start}


def chirp_signal(n: int = 512, d_eta: float = 2.0, q: float = 2.44e-4, c: float = 0.1, r: float = 0.0006):
    """Single linear chirp with a Gaussian amplitude centred at mid-band."""
    centre = 0.5 * n * d_eta / 2
    mode = LinearFDChirpSpec(p=-centre * q, q=q, c=c, r=r).mode()
    return inverse_transform(synth_spectrum([mode], n, d_eta)), mode


def fft_vs_direct(n: int = 256, l_bins: int = 65, sigma: float = 15.0, m: int = 0) -> dict:
    """Full-grid FFT evaluation against direct summation, relative to the grid maximum."""
    sig, mode = chirp_signal(n, 512.0 / n)
    ggrid = GammaGrid.for_signal(n, 3 * abs(float(mode.gdd(0.0))), l_bins)
    w = GaussianWindow(sigma)
    grid = fct_grid(sig, w, ggrid, m)
    t = grid.t[:, None, None]
    eta = grid.eta[None, :, None]
    gam = ggrid.values[None, None, :]
    direct = fct_point(sig, t, eta, gam, w, m)
    err = float(np.max(np.abs(grid.values - direct)))
    return {"max_abs_error": err, "relative_error": err / float(np.max(np.abs(direct))), "cells": direct.size}


def linear_chirp_exactness(sigma: float = 25.0, l_bins: int = 129, epsilon_rel: float = 1e-3) -> dict:
    """GD/GDD estimate errors on masked interior cells for a single linear chirp.

    Interior: frequency more than ``3 sigma`` from both band ends and time
    outside the chirp-broadened boundary band at the cell's GDD.
    """
    sig, mode = chirp_signal()
    r = float(mode.gdd(0.0))
    ggrid = GammaGrid.for_signal(sig.n, 4 * r, l_bins)
    w = GaussianWindow(sigma)
    g = fct_grids(sig, w, ggrid)
    f = reference_functions(g[0], g[1], g[2], w, epsilon_rel)
    band = boundary_band(w, ggrid.values)
    end = sig.t0 + (sig.n - 1) * sig.dt
    in_t = (f.t[:, None] - sig.t0 > band[None, :]) & (end - f.t[:, None] > band[None, :])
    in_eta = (f.eta > 3 * sigma) & (f.eta < sig.n * g[0].d_eta / 2 - 3 * sigma)
    sel = f.mask & in_eta[None, :, None] & in_t[:, None, :]
    te = np.abs(f.t_hat - mode.gd(f.eta)[None, :, None])[sel]
    re = np.abs(f.r_hat - r)[sel]
    return {
        "cells": int(sel.sum()),
        "max_t_error_cells": float(te.max() / sig.dt),
        "max_r_error_cells": float(re.max() / ggrid.d_gamma),
    }


def cubic_phase_mode(a3: float = 1e-7, a1: float = 0.2, width: float = 2e-5, centre: float = 256.0) -> ModeSpec:
    """``B = exp(-width (eta - centre)^2)``, ``theta = a3 eta^3 + a1 eta``."""
    return ModeSpec(
        amplitude=lambda e: np.exp(-width * (e - centre) ** 2),
        phase=lambda e: a3 * e**3 + a1 * e,
        phase_d1=lambda e: 3 * a3 * e**2 + a1,
        phase_d2=lambda e: 6 * a3 * e,
        amplitude_d1=lambda e: -2 * width * (e - centre) * np.exp(-width * (e - centre) ** 2),
        phase_d3=lambda e: 6 * a3 + 0.0 * e,
        name="cubic-phase",
    )


def high_order_gain(sigma: float = 25.0, l_bins: int = 129, bins=None) -> dict:
    """Second-order reduction check and mean GD error of orders 2 and 3 on a cubic-phase mode."""
    mode = cubic_phase_mode()
    sig = inverse_transform(synth_spectrum([mode], 512, 2.0))
    eta = np.arange(257) * 2.0
    ggrid = GammaGrid.for_signal(sig.n, 3 * float(np.max(np.abs(mode.gdd(eta)))), l_bins)
    w = GaussianWindow(sigma)
    bins = np.arange(40, 218, 4) if bins is None else bins
    g = fct_grids(sig, w, ggrid, ms=range(5), bins=bins)
    f2 = high_order_reference(g, 2, w)
    f3 = high_order_reference(g, 3, w)
    ref = reference_functions(g[0], g[1], g[2], w)
    both = f2.mask & ref.mask
    scale_t = float(np.max(np.abs(ref.t_hat[both])))
    scale_r = float(np.max(np.abs(ref.r_hat[both])))
    red = max(
        float(np.max(np.abs(f2.t_hat[both] - ref.t_hat[both]))) / scale_t,
        float(np.max(np.abs(f2.r_hat[both] - ref.r_hat[both]))) / scale_r,
    )
    gd = mode.gd(f2.eta)[None, :, None]
    sel = f2.mask & f3.mask
    return {
        "order2_reduction_rel_error": red,
        "cells": int(sel.sum()),
        "mean_gd_error_order2": float(np.abs(f2.t_hat - gd)[sel].mean()),
        "mean_gd_error_order3": float(np.abs(f3.t_hat - gd)[sel].mean()),
    }


SUITES = {
    "kernels": kernel_oracle,
    "fft": fft_vs_direct,
    "exactness": linear_chirp_exactness,
    "high-order": high_order_gain,
}


def run_suite(name: str) -> dict:
    """Run one named suite, or all of them for ``"all"``."""
    if name == "all":
        return {k: fn() for k, fn in SUITES.items()}
    if name not in SUITES:
        raise ValueError(f"unknown verify suite {name!r}; choose from {sorted(SUITES)} or 'all'")
    return {name: SUITES[name]()}
