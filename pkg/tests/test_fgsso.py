import itertools

import numpy as np
import pytest

from tfgdd.errors import NumericalFailure
from tfgdd.fct import fct_point
from tfgdd.fgsso import assemble_A, diagnostics_profile, mixing_matrix, recover_modes
from tfgdd.ridges import RidgeSet
from tfgdd.signals import SampledSignal, inverse_transform, paper_x_modes, synth_spectrum
from tfgdd.windows import GaussianWindow, kernel_C, kernel_C_quad

ETA = np.arange(257) * 2.0
INNER = (ETA > 75) & (ETA < 437)


def truth_ridges(modes, eta=ETA, dt=1 / 1024):
    k, j = len(modes), eta.size
    return RidgeSet(
        eta=eta,
        tau=np.array([m.gd(eta) for m in modes]),
        gamma=np.array([m.gdd(eta) + 0 * eta for m in modes]),
        amplitude=np.array([m.amplitude(eta) for m in modes]),
        support=np.tile([0, j], (k, 1)),
        cells=np.zeros((k, j, 2), int),
        extrapolated=np.zeros((k, j), bool),
        low_confidence=np.zeros(k, bool),
        noise_floor=0.0,
        dt=dt,
        d_gamma=1e-5,
    )


def test_single_ridge_is_scalar():
    w = GaussianWindow(20.0)
    mm = mixing_matrix([0.3], [1e-4], w)
    assert mm.a.shape == (1, 1)
    assert mm.a[0, 0] == pytest.approx(kernel_C(0, 0.0, 0.0, w))
    assert mm.solve(np.array([2.0 + 1j]))[0] == pytest.approx((2.0 + 1j) / mm.a[0, 0])
    assert mm.cond2 == pytest.approx(1.0)


def test_equal_gdd_gives_real_hermitian_matrix():
    w = GaussianWindow(17.1)
    mm = mixing_matrix([0.2, 0.23, 0.3], [5e-4] * 3, w)
    assert np.allclose(mm.a, mm.a.conj().T)
    assert np.max(np.abs(mm.a.imag)) < 1e-14


def test_entries_match_quadrature():
    w = GaussianWindow(17.1)
    mm = mixing_matrix([0.25, 0.26], [0.0, 5e-4], w)
    assert mm.a[0, 1] == pytest.approx(kernel_C_quad(0, 0.01, 5e-4, w), abs=1e-10)
    assert mm.a[1, 0] == pytest.approx(kernel_C_quad(0, -0.01, -5e-4, w), abs=1e-10)


def test_duplicate_ridge_uses_pseudo_inverse():
    w = GaussianWindow(15.0)
    mm = mixing_matrix([0.2, 0.2], [1e-4, 1e-4], w)
    assert mm.pseudo and mm.cond2 > 1e10
    x = mm.solve(mm.a @ np.array([1.0, 1.0]))
    assert np.allclose(mm.a @ x, mm.a @ np.array([1.0, 1.0]))


def test_well_separated_is_well_conditioned():
    w = GaussianWindow(25.0)
    mm = mixing_matrix([0.1, 0.5], [0.0, 1e-3], w)
    assert not mm.pseudo and mm.cond2 < 1 + 1e-5
    assert np.allclose(mm.b @ mm.a, np.eye(2), atol=1e-12)


def test_large_k_uses_lu():
    w = GaussianWindow(25.0)
    tau = np.linspace(0.1, 0.5, 6)
    mm = mixing_matrix(tau, np.zeros(6), w)
    assert np.allclose(mm.b @ mm.a, np.eye(6), atol=1e-10)


def test_inverse_norm_shrinks_with_separation():
    w = GaussianWindow(20.0)
    norms = [mixing_matrix([0.25, 0.25 + d], [0.0, 0.0], w).inf_norm_inv for d in (0.002, 0.005, 0.01, 0.02, 0.04)]
    assert np.all(np.diff(norms) < 0)


@pytest.mark.parametrize("perm", list(itertools.permutations(range(3))))
def test_label_equivariance(perm):
    w = GaussianWindow(20.0)
    tau = np.array([0.2, 0.215, 0.24])
    gam = np.array([0.0, 3e-4, -2e-4])
    d = np.array([1.0, 0.5j, -0.3])
    x = mixing_matrix(tau, gam, w).solve(d)
    p = list(perm)
    assert np.allclose(mixing_matrix(tau[p], gam[p], w).solve(d[p]), x[p])


def test_assemble_a_on_ridge_axis():
    modes = paper_x_modes()
    r = truth_ridges(modes)
    w = GaussianWindow(25.0)
    mm = assemble_A(r, 100.0, w)
    assert mm.eta == 100.0
    assert np.allclose(mm.a, mixing_matrix(r.tau[:, 50], r.gamma[:, 50], w).a)
    with pytest.raises(ValueError):
        assemble_A(r, 1000.0, w)


@pytest.mark.parametrize("k", [0, 1])
def test_single_mode_recovery(k):
    mode = paper_x_modes()[k]
    sig = inverse_transform(synth_spectrum([mode], 512, 2.0))
    rec = recover_modes(sig, truth_ridges([mode]), GaussianWindow(25.0))
    truth = mode(ETA)
    err = np.linalg.norm((rec.spectra[0] - truth)[INNER]) / np.linalg.norm(truth[INNER])
    assert err < 0.02
    assert rec.time_modes[0].n == 512


def test_two_mode_recovery_and_consistency():
    modes = paper_x_modes()
    sig = inverse_transform(synth_spectrum(modes, 512, 2.0))
    w = GaussianWindow(25.0)
    rec = recover_modes(sig, truth_ridges(modes), w)
    for k, m in enumerate(modes):
        truth = m(ETA)
        assert np.linalg.norm((rec.spectra[k] - truth)[INNER]) / np.linalg.norm(truth[INNER]) < 0.05
    j = 120
    mm = rec.diagnostics[j]
    r = truth_ridges(modes)
    d = fct_point(sig, r.tau[:, j], ETA[j], r.gamma[:, j], w)
    assert np.allclose(mm.a @ rec.spectra[:, j], d)
    prof = diagnostics_profile(rec.diagnostics)
    assert prof["eta"].size == rec.band.sum()
    assert not prof["pseudo"].any()


def test_band_excludes_record_edges():
    modes = paper_x_modes()
    sig = inverse_transform(synth_spectrum(modes, 512, 2.0))
    r = truth_ridges(modes)
    r.tau[0, :10] = 0.001  # ridge point inside the edge band
    rec = recover_modes(sig, r, GaussianWindow(25.0))
    assert not rec.band[:10].any() and rec.band[10:].all()
    assert not rec.spectra[:, :10].any()


def test_all_singular_raises():
    sig = SampledSignal(np.ones(64, complex), 1 / 128)
    eta = np.arange(33) * 2.0
    rs = RidgeSet(
        eta=eta, tau=np.full((2, 33), 0.25), gamma=np.zeros((2, 33)), amplitude=np.ones((2, 33)),
        support=np.array([[0, 33], [0, 33]]), cells=np.zeros((2, 33, 2), int),
        extrapolated=np.zeros((2, 33), bool), low_confidence=np.zeros(2, bool), noise_floor=0.0,
        dt=1 / 128, d_gamma=1e-5,
    )
    with pytest.raises(NumericalFailure):
        recover_modes(sig, rs, GaussianWindow(5.0))


def test_bad_inputs():
    w = GaussianWindow(10.0)
    with pytest.raises(ValueError):
        mixing_matrix([0.1, np.nan], [0.0, 0.0], w)
    with pytest.raises(ValueError):
        mixing_matrix([0.1], [0.0, 0.0], w)
