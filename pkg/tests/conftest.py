"""Shared fixtures: small benchmark grids for unit tests."""
from __future__ import annotations

import numpy as np
import pytest

from tfgdd.fct import GammaGrid, default_r0, fct_grids
from tfgdd.reassign import reference_functions
from tfgdd.signals import LinearFDChirpSpec, builtin_signal, inverse_transform, synth_spectrum
from tfgdd.windows import GaussianWindow


def chirp(n=256, d_eta=2.0, q=4.9e-4, c=0.1, r=0.0006):
    """Single linear chirp with a Gaussian amplitude centred mid-band."""
    centre = n * d_eta / 4
    mode = LinearFDChirpSpec(p=-centre * q, q=q, c=c, r=r).mode()
    return inverse_transform(synth_spectrum([mode], n, d_eta)), mode


@pytest.fixture(scope="session")
def small_x():
    """paper-x on a 256-sample record (0..256 Hz band, 2 Hz bins)."""
    return builtin_signal("paper-x", 256, 1 / 512)


@pytest.fixture(scope="session")
def small_chirp():
    return chirp()


@pytest.fixture(scope="session")
def small_x_grids(small_x):
    sig, modes = small_x
    w = GaussianWindow(15.0)
    gg = GammaGrid.for_signal(sig.n, default_r0(sig, modes), 65)
    g = fct_grids(sig, w, gg)
    return sig, modes, w, gg, g


@pytest.fixture(scope="session")
def small_x_field(small_x_grids):
    sig, modes, w, gg, g = small_x_grids
    return reference_functions(g[0], g[1], g[2], w)


_ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Record one PASS/FAIL line per criterion; printed in the terminal summary."""

    def record(number: int, title: str, ok: bool, detail: str) -> None:
        _ACCEPTANCE.append(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
