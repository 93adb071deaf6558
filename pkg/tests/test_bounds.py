import math

import numpy as np
import pytest

from tfgdd.bounds import (
    BoundRow,
    ClassParams,
    dense_sup,
    eps0_from_det,
    lemma_quantities,
    measure_class_params,
    omega0,
    recovery_bounds,
    theorem1_rhs,
)
from tfgdd.fct import fct_point
from tfgdd.signals import LinearFDChirpSpec, inverse_transform, paper_x_modes, paper_y_modes, synth_spectrum
from tfgdd.windows import GaussianWindow, kernel_C, moment_I

BAND = (100.0, 412.0)


def test_dense_sup():
    assert dense_sup(np.sin, 0, 3) == pytest.approx(1.0, abs=1e-12)
    assert dense_sup(lambda x: x**2, -1, 2) == pytest.approx(4.0)


def test_eps2_values():
    assert measure_class_params(paper_y_modes(), BAND).eps2 == pytest.approx(math.pi**2 / 327680, rel=1e-9)
    assert measure_class_params(paper_x_modes(), BAND).eps2 == 0.0


def test_eps1_matches_gaussian_slope():
    # max |d/deta exp(-a (eta-256)^2)| = sqrt(2a) exp(-1/2)
    p = measure_class_params(paper_x_modes()[1:], (0.0, 512.0))
    assert p.eps1 == pytest.approx(math.sqrt(2 * 3e-5) * math.exp(-0.5), rel=1e-6)


def test_separation_defaults_hold_pointwise():
    modes = paper_y_modes()
    p = measure_class_params(modes, BAND)
    eta = np.linspace(*BAND, 999)
    gd = 0.5 * np.abs(modes[0].gd(eta) - modes[1].gd(eta))
    gdd = 0.5 * np.abs(modes[0].gdd(eta) - modes[1].gdd(eta))
    assert np.all((gd > p.delta1) | (gdd > p.delta2))
    assert measure_class_params(modes[:1], BAND).delta1 == math.inf


def test_class_param_validation():
    with pytest.raises(ValueError):
        ClassParams(-1.0, 0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        ClassParams(0.0, 0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        measure_class_params(paper_x_modes(), (5.0, 5.0))
    with pytest.raises(ValueError):
        theorem1_rhs(ClassParams(0.1, 0.0, 1.0, 1.0), {})


def test_lemma_remainder_below_pi():
    mode = paper_y_modes()[0]
    sig = inverse_transform(synth_spectrum([mode], 512, 2.0))
    w = GaussianWindow(15.78)
    p = measure_class_params([mode], (0.0, 512.0))
    rng = np.random.default_rng(0)
    for m in range(4):
        for _ in range(20):
            eta = rng.uniform(120, 390)
            t = mode.gd(eta) + rng.uniform(-0.02, 0.02)
            g = mode.gdd(eta) + rng.uniform(-5e-4, 5e-4)
            d = fct_point(sig, t, eta, g, w, m)
            lin = mode(eta) * kernel_C(m, mode.gd(eta) - t, mode.gdd(eta) - g, w)
            pi = lemma_quantities(p, [mode], w, np.array([eta]), 0)["Pi_l"][m, 0, 0]
            assert abs(d - lin) <= pi


def test_single_mode_lambda_has_no_separation_term():
    mode = paper_x_modes()[0]
    w = GaussianWindow(20.0)
    p = measure_class_params([mode], BAND)
    eta = np.linspace(*BAND, 7)
    q = lemma_quantities(p, [mode], w, eta, 0)
    i = [moment_I(m, w) for m in range(5)]
    for m in range(2):
        expect = p.eps1 * i[m] + p.eps1 * p.eps2 * math.pi * i[m + 3] + p.eps2 * math.pi * mode.amplitude(eta) * i[m + 2]
        assert np.allclose(q["Lambda"][m], expect)
    assert np.allclose(q["gamma"][0], mode.amplitude(eta) * i[0] + q["Pi"][0])


def test_theorem1_zero_for_exact_class():
    # constant amplitude and quadratic phase: eps1 = eps2 = 0
    mode = LinearFDChirpSpec(c=0.1, r=3e-4).mode()
    p = ClassParams(0.0, 0.0, math.inf, math.inf).with_eps0(5.0)
    q = lemma_quantities(p, [mode], GaussianWindow(20.0), np.linspace(*BAND, 5), 0)
    bt, br = theorem1_rhs(p, q)
    assert not np.any(bt) and not np.any(br)


def test_bounds_monotone_in_class_constants():
    modes = paper_y_modes()
    w = GaussianWindow(15.78)
    eta = np.linspace(*BAND, 9)
    base = measure_class_params(modes, BAND).with_eps0(2.0)
    prev = None
    for scale in (1.0, 2.0, 4.0):
        p = ClassParams(base.eps1 * scale, base.eps2 * scale, base.delta1, base.delta2, 2.0)
        bt, br = theorem1_rhs(p, lemma_quantities(p, modes, w, eta, 0))
        if prev is not None:
            assert np.all(bt > prev[0]) and np.all(br > prev[1])
        prev = (bt, br)
    bt2, _ = theorem1_rhs(base.with_eps0(4.0), lemma_quantities(base, modes, w, eta, 0))
    bt1, _ = theorem1_rhs(base, lemma_quantities(base, modes, w, eta, 0))
    assert np.allclose(bt2, 2 * bt1)


def test_omega0_zero_and_linear_in_ridge_error():
    mode = LinearFDChirpSpec(c=0.1, r=3e-4).mode()
    w = GaussianWindow(20.0)
    eta = np.linspace(*BAND, 11)
    p = ClassParams(0.0, 0.0, math.inf, math.inf)
    tau = mode.gd(eta)[None]
    gam = (mode.gdd(eta) + 0 * eta)[None]
    assert not np.any(omega0(p, [mode], tau, gam, w, eta))
    o1 = omega0(p, [mode], tau + 1e-3, gam + 1e-5, w, eta)
    o2 = omega0(p, [mode], tau + 2e-3, gam + 2e-5, w, eta)
    assert np.allclose(o2, 2 * o1) and np.all(o1 > 0)


def test_recovery_bound_row_sums():
    inv = np.array([[1.0, -0.5j], [0.25, 2.0]])
    assert np.allclose(recovery_bounds(0.1, inv), [0.15, 0.225])


def test_eps0_and_row():
    assert eps0_from_det([4.0, 2.0, 8.0]) == 0.5
    with pytest.raises(ValueError):
        eps0_from_det([])
    row = BoundRow(100.0, 0, 1.0, 2.0, 3.0, 4.0, 0.5, 0.6, 0.7)
    assert row.astuple() == (100.0, 0, 1.0, 2.0, 3.0, 4.0, 0.5, 0.6, 0.7)
    assert len(BoundRow.FIELDS) == 9
