import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from tfgdd.windows import (
    GaussianWindow,
    derivative_window_reduction,
    kernel_C,
    kernel_C_quad,
    moment_I,
    moment_I_quad,
    upsilon,
    upsilon_branches,
)


@pytest.mark.parametrize("sigma", [1.0, 17.1, 25.0])
def test_kernel_at_origin(sigma):
    w = GaussianWindow(sigma)
    assert kernel_C(0, 0.0, 0.0, w) == pytest.approx(1.0, abs=1e-12)
    assert abs(kernel_C(1, 0.0, 0.0, w)) < 1e-12
    assert kernel_C(2, 0.0, 0.0, w) == pytest.approx(sigma**2, rel=1e-12)


def test_kernel_matches_quadrature_example():
    w = GaussianWindow(25.0)
    assert abs(kernel_C(0, 0.01, 0.001, w) - kernel_C_quad(0, 0.01, 0.001, w)) < 1e-8


@settings(max_examples=40, deadline=None)
@given(
    st.integers(0, 4),
    st.floats(-0.04, 0.04),
    st.floats(-2e-3, 2e-3),
    st.floats(5.0, 40.0),
)
def test_kernel_against_quadrature(m, t, gamma, sigma):
    w = GaussianWindow(sigma)
    ref = kernel_C_quad(m, t, gamma, w)
    assert abs(kernel_C(m, t, gamma, w) - ref) < 1e-8 * max(1.0, sigma**m)


@settings(max_examples=100, deadline=None)
@given(st.floats(-0.05, 0.05), st.floats(-3e-3, 3e-3))
def test_kernel_modulus(t, gamma):
    sigma = 20.0
    s = 1 + 4 * np.pi**2 * sigma**4 * gamma**2
    expect = s**-0.25 * np.exp(-2 * np.pi**2 * sigma**2 * t**2 / s)
    assert abs(kernel_C(0, t, gamma, GaussianWindow(sigma))) == pytest.approx(expect, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("m", [0, 1, 2])
def test_kernel_reflection(m):
    # time reversal conjugates the chirp; the odd moment flips sign under xi -> -xi
    w = GaussianWindow(12.0)
    t, g = 0.013, 7e-4
    scale = max(1, 12.0**m)
    lhs = kernel_C_quad(m, -t, g, w)
    assert abs(lhs - np.conj(kernel_C_quad(m, t, -g, w))) < 1e-10 * scale
    assert abs(lhs - (-1) ** m * kernel_C_quad(m, t, g, w)) < 1e-10 * scale
    assert abs(kernel_C(m, -t, g, w) - np.conj(kernel_C(m, t, -g, w))) < 1e-12 * scale
    assert abs(kernel_C(m, -t, g, w) - (-1) ** m * kernel_C(m, t, g, w)) < 1e-12 * scale


def test_kernel_broadcasts():
    w = GaussianWindow(10.0)
    t = np.linspace(-0.02, 0.02, 5)[:, None]
    g = np.linspace(-1e-3, 1e-3, 3)[None, :]
    out = kernel_C(1, t, g, w)
    assert out.shape == (5, 3)
    assert out[2, 1] == pytest.approx(kernel_C(1, 0.0, 0.0, w))


@pytest.mark.parametrize("m", range(6))
def test_moments(m):
    w = GaussianWindow(3.7)
    assert moment_I(m, w) == pytest.approx(moment_I_quad(m, w), rel=1e-9)


def test_moment_values():
    assert moment_I(0, GaussianWindow(9.0)) == pytest.approx(1.0)
    assert moment_I(2, GaussianWindow(9.0)) == pytest.approx(81.0)
    assert moment_I(1, GaussianWindow(1.0)) == pytest.approx(0.7978845608, abs=1e-10)
    with pytest.raises(ValueError):
        moment_I(9, GaussianWindow(1.0))


def test_upsilon_examples():
    w = GaussianWindow(1.0)
    assert upsilon(0, w, 1.0, 0.0) == pytest.approx(max(1 / (2**0.25 * math.sqrt(math.pi)), 1.0))
    first, second = upsilon_branches(1, w, 0.3, 1e6)
    assert first == pytest.approx(2**0.25 / math.sqrt(math.pi * 0.3))
    assert second < 1e-2
    with pytest.raises(ValueError):
        upsilon(0, w, 0.0, 1.0)


@pytest.mark.parametrize("m", [0, 1, 2])
def test_upsilon_dominates_kernel_off_box(m):
    sigma, d1, d2 = 25.0, 0.05, 5e-4
    w = GaussianWindow(sigma)
    t = np.linspace(-0.5, 0.5, 801)
    g = np.linspace(-0.005, 0.005, 801)
    tt, gg = np.meshgrid(t, g, indexing="ij")
    mag = np.abs(kernel_C(m, tt, gg, w))
    b1, b2 = upsilon_branches(m, w, d1, d2)
    assert mag[np.abs(tt) >= d1].max() <= b1
    assert mag[np.abs(gg) >= d2].max() <= b2


def test_upsilon_verbatim_m2_is_not_a_bound():
    w = GaussianWindow(25.0)
    tt, gg = np.meshgrid(np.linspace(-0.5, 0.5, 201), np.linspace(-5e-3, 5e-3, 201), indexing="ij")
    off = (np.abs(tt) >= 0.02) | (np.abs(gg) >= 0.002)
    sup = np.abs(kernel_C(2, tt, gg, w))[off].max()
    assert upsilon(2, w, 0.02, 0.002, verbatim=True) < sup <= upsilon(2, w, 0.02, 0.002)


def test_derivative_reduction():
    assert derivative_window_reduction(GaussianWindow(1.0)) == -1.0
    assert derivative_window_reduction(GaussianWindow(25.0)) == pytest.approx(-0.0016)
    w = GaussianWindow(4.0)
    phi = lambda x: np.exp(2j * np.pi * x * 0.01)
    lhs = integrate.quad(lambda x: (w.derivative(x) * phi(x)).real, -40, 40, epsabs=1e-13)[0]
    rhs = integrate.quad(lambda x: (-x / 16 * w(x) * phi(x)).real, -40, 40, epsabs=1e-13)[0]
    assert lhs == pytest.approx(rhs, abs=1e-9)


def test_window_validation():
    with pytest.raises(ValueError):
        GaussianWindow(0.0)
    assert GaussianWindow(9.0).scaled(1 / 3).sigma == pytest.approx(3.0)
