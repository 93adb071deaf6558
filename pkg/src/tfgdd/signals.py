"""Sampled signals, spectra, builtin benchmark signals and audio/CSV ingestion.

Conventions
-----------
The forward transform is the unnormalised DFT, ``X_j = sum_k x_k exp(-i 2 pi jk/N)``,
and spectra are stored in standard DFT bin order.  With this convention the
discrete FCT needs no extra scale factor: synthesising ``X_j = xhat(eta_j)``
and inverse transforming gives a time signal whose FCT approximates the
continuous FCT of ``xhat``.

A frequency-domain mode is ``B(eta) exp(-i 2 pi theta(eta))``; its group delay
(GD) is ``theta'`` and its group delay dispersion (GDD) is ``theta''``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import signal as sps
from scipy.io import wavfile

from .errors import UnsupportedFormat

__all__ = [
    "SampledSignal",
    "Spectrum",
    "ModeSpec",
    "LinearFDChirpSpec",
    "synth_spectrum",
    "paper_x_modes",
    "paper_y_modes",
    "synth_paper_x",
    "synth_paper_y",
    "builtin_signal",
    "forward_transform",
    "inverse_transform",
    "load_audio",
    "load_csv",
    "save_csv",
    "decimate",
    "slice_time",
    "DEFAULT_N",
    "DEFAULT_DT",
]

# 512 samples at 1024 Hz: eta in [0, 512] Hz with 2 Hz bins, t in [0, 0.5) s
DEFAULT_N = 512
DEFAULT_DT = 1.0 / 1024


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SampledSignal:
    """Uniformly sampled complex time series ``x(t0 + n dt)``."""

    samples: np.ndarray
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        x = np.asarray(self.samples)
        if x.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if x.size < 2:
            raise ValueError("a signal needs at least two samples")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        object.__setattr__(self, "samples", _frozen(x.astype(complex)))

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def fs(self) -> float:
        return 1.0 / self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.n) * self.dt

    @property
    def duration(self) -> float:
        return self.n * self.dt

    def __add__(self, other: "SampledSignal") -> "SampledSignal":
        if other.n != self.n or other.dt != self.dt:
            raise ValueError("signals must share length and sampling step")
        return SampledSignal(self.samples + other.samples, self.dt, self.t0)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """DFT bins in standard order (non-negative frequencies first)."""

    bins: np.ndarray
    d_eta: float

    def __post_init__(self):
        b = np.asarray(self.bins)
        if b.ndim != 1 or b.size < 2:
            raise ValueError("bins must be a 1-D sequence of length >= 2")
        if not self.d_eta > 0:
            raise ValueError("d_eta must be positive")
        object.__setattr__(self, "bins", _frozen(b.astype(complex)))

    @property
    def n(self) -> int:
        return self.bins.size

    @property
    def frequencies(self) -> np.ndarray:
        return np.fft.fftfreq(self.n, d=1.0 / (self.n * self.d_eta))

    @property
    def dt(self) -> float:
        return 1.0 / (self.n * self.d_eta)

    def __add__(self, other: "Spectrum") -> "Spectrum":
        if other.n != self.n or other.d_eta != self.d_eta:
            raise ValueError("spectra must share grid")
        return Spectrum(self.bins + other.bins, self.d_eta)


def _num_derivative(f: Callable, h: float = 1e-3) -> Callable:
    def d(eta):
        eta = np.asarray(eta, dtype=float)
        return (f(eta + h) - f(eta - h)) / (2 * h)

    return d


@dataclass(frozen=True)
class ModeSpec:
    """One frequency-domain mode ``B(eta) exp(-i 2 pi theta(eta))``.

    ``amplitude_d1`` and ``phase_d3`` are optional; when missing they are
    obtained by central differences (only the bound evaluation needs them).
    """

    amplitude: Callable
    phase: Callable
    phase_d1: Callable
    phase_d2: Callable
    amplitude_d1: Callable | None = None
    phase_d3: Callable | None = None
    name: str = ""

    def __call__(self, eta):
        eta = np.asarray(eta, dtype=float)
        return self.amplitude(eta) * np.exp(-2j * np.pi * self.phase(eta))

    def gd(self, eta):
        return self.phase_d1(np.asarray(eta, dtype=float))

    def gdd(self, eta):
        return self.phase_d2(np.asarray(eta, dtype=float))

    def amp_derivative(self, eta):
        f = self.amplitude_d1 or _num_derivative(self.amplitude)
        return f(np.asarray(eta, dtype=float))

    def phase_third(self, eta):
        f = self.phase_d3 or _num_derivative(self.phase_d2)
        return f(np.asarray(eta, dtype=float))


@dataclass(frozen=True)
class LinearFDChirpSpec:
    """``xhat(eta) = exp(-(p eta + q eta^2/2)) exp(-i 2 pi (c eta + r eta^2/2))``.

    GD is ``c + r eta`` (s) and GDD is ``r`` (s/Hz).
    """

    p: float = 0.0
    q: float = 0.0
    c: float = 0.0
    r: float = 0.0

    def evaluate(self, eta):
        eta = np.asarray(eta, dtype=float)
        return np.exp(-(self.p * eta + 0.5 * self.q * eta**2)) * np.exp(
            -2j * np.pi * (self.c * eta + 0.5 * self.r * eta**2)
        )

    def mode(self) -> ModeSpec:
        p, q, c, r = self.p, self.q, self.c, self.r

        def amp(e):
            return np.exp(-(p * e + 0.5 * q * e**2))

        return ModeSpec(
            amplitude=amp,
            phase=lambda e: c * e + 0.5 * r * e**2,
            phase_d1=lambda e: c + r * e,
            phase_d2=lambda e: r + 0.0 * e,
            amplitude_d1=lambda e: -(p + q * e) * amp(e),
            phase_d3=lambda e: 0.0 * e,
            name=f"linear-chirp(c={c}, r={r})",
        )


def _gaussian_amp(a: float, center: float = 256.0):
    def amp(e):
        return np.exp(-a * (e - center) ** 2)

    def amp_d1(e):
        return -2 * a * (e - center) * np.exp(-a * (e - center) ** 2)

    return amp, amp_d1


def _quadratic_mode(a: float, c2: float, c1: float, name: str) -> ModeSpec:
    # theta(eta) = c2 eta^2 + c1 eta
    amp, amp_d1 = _gaussian_amp(a)
    return ModeSpec(
        amplitude=amp,
        phase=lambda e: c2 * e**2 + c1 * e,
        phase_d1=lambda e: 2 * c2 * e + c1,
        phase_d2=lambda e: 2 * c2 + 0.0 * e,
        amplitude_d1=amp_d1,
        phase_d3=lambda e: 0.0 * e,
        name=name,
    )


def paper_x_modes(literal: bool = False) -> list[ModeSpec]:
    """The two quadratic-phase modes of the crossing-GD benchmark.

    By default the second mode uses ``theta_2 = -0.0002 eta^2 + 0.356 eta`` so the
    GD curves cross at (0.2536 s, 256 Hz).  ``literal=True`` gives the
    ``+0.0002`` coefficient, whose curves do not cross in the band.
    """
    m1 = _quadratic_mode(0.00002, 0.0003, 0.1, "x1")
    m2 = _quadratic_mode(0.00003, 0.0002 if literal else -0.0002, 0.356, "x2")
    return [m1, m2]


def paper_y_modes(literal: bool = False) -> list[ModeSpec]:
    """Sinusoidal-GD modes: GDs cross at 0.25 s (eta = 128, 384 Hz) with opposite GDDs.

    The second phase is ``(51.2/pi) sin(pi eta/256) + 0.25 eta``, the
    antiderivative of its GD ``0.2 cos(pi eta/256) + 0.25``.  ``literal=True``
    uses the ``cos`` form of that phase instead, with derivatives
    taken from it, so the GD curves no longer cross at 0.25 s.
    """
    k = np.pi / 256
    a = 51.2 / np.pi
    amp1, amp1_d1 = _gaussian_amp(0.00032)
    amp2, amp2_d1 = _gaussian_amp(0.00025)
    y1 = ModeSpec(
        amplitude=amp1,
        phase=lambda e: -a * np.sin(k * e) + 0.25 * e,
        phase_d1=lambda e: -0.2 * np.cos(k * e) + 0.25,
        phase_d2=lambda e: (np.pi / 1280) * np.sin(k * e),
        amplitude_d1=amp1_d1,
        phase_d3=lambda e: (np.pi**2 / 327680) * np.cos(k * e),
        name="y1",
    )
    if literal:
        y2 = ModeSpec(
            amplitude=amp2,
            phase=lambda e: a * np.cos(k * e) + 0.25 * e,
            phase_d1=lambda e: -0.2 * np.sin(k * e) + 0.25,
            phase_d2=lambda e: -(np.pi / 1280) * np.cos(k * e),
            amplitude_d1=amp2_d1,
            phase_d3=lambda e: (np.pi**2 / 327680) * np.sin(k * e),
            name="y2",
        )
    else:
        y2 = ModeSpec(
            amplitude=amp2,
            phase=lambda e: a * np.sin(k * e) + 0.25 * e,
            phase_d1=lambda e: 0.2 * np.cos(k * e) + 0.25,
            phase_d2=lambda e: -(np.pi / 1280) * np.sin(k * e),
            amplitude_d1=amp2_d1,
            phase_d3=lambda e: -(np.pi**2 / 327680) * np.cos(k * e),
            name="y2",
        )
    return [y1, y2]


def synth_spectrum(
    modes: Sequence[ModeSpec], n_bins: int, d_eta: float, *, analytic: bool = True
) -> Spectrum:
    """Sample ``sum_k B_k(eta) exp(-i 2 pi theta_k(eta))`` on the DFT grid.

    With ``analytic=True`` (default) only bins ``0..n_bins//2`` (eta = j d_eta)
    are filled and the negative-frequency bins are zero.
    """
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    eta = np.fft.fftfreq(n_bins, d=1.0 / (n_bins * d_eta))
    sel = np.arange(n_bins) <= n_bins // 2 if analytic else np.ones(n_bins, bool)
    if analytic:
        eta = np.where(sel, np.arange(n_bins) * d_eta, eta)
    bins = np.zeros(n_bins, dtype=complex)
    for mode in modes:
        amp = np.asarray(mode.amplitude(eta[sel]), dtype=float)
        if np.any(~(amp > 0)):
            raise ValueError(f"mode {mode.name or mode!r} has non-positive amplitude on the grid")
        bins[sel] += amp * np.exp(-2j * np.pi * mode.phase(eta[sel]))
    return Spectrum(bins, d_eta)


def synth_paper_x(
    n_bins: int = DEFAULT_N, d_eta: float = 2.0, *, literal: bool = False
) -> Spectrum:
    return synth_spectrum(paper_x_modes(literal), n_bins, d_eta)


def synth_paper_y(
    n_bins: int = DEFAULT_N, d_eta: float = 2.0, *, literal: bool = False
) -> Spectrum:
    return synth_spectrum(paper_y_modes(literal), n_bins, d_eta)


def builtin_signal(name: str, n: int = DEFAULT_N, dt: float = DEFAULT_DT):
    """Return ``(signal, modes)`` for a builtin benchmark.

    Names: ``paper-x``, ``paper-x-literal``, ``paper-y``, ``paper-y-literal``.
    """
    d_eta = 1.0 / (n * dt)
    if name == "paper-x":
        modes = paper_x_modes()
    elif name == "paper-x-literal":
        modes = paper_x_modes(literal=True)
    elif name == "paper-y":
        modes = paper_y_modes()
    elif name == "paper-y-literal":
        modes = paper_y_modes(literal=True)
    else:
        raise ValueError(f"unknown builtin signal {name!r}")
    return inverse_transform(synth_spectrum(modes, n, d_eta)), modes


def forward_transform(signal: SampledSignal) -> Spectrum:
    return Spectrum(np.fft.fft(signal.samples), 1.0 / (signal.n * signal.dt))


def inverse_transform(spectrum: Spectrum, t0: float = 0.0, n: int | None = None) -> SampledSignal:
    if n is not None and n != spectrum.n:
        raise ValueError(f"length mismatch: spectrum has {spectrum.n} bins, expected {n}")
    return SampledSignal(np.fft.ifft(spectrum.bins), spectrum.dt, t0)


def load_audio(path, channel: int = 0) -> SampledSignal:
    """Read one channel of a PCM16 or IEEE-float WAV file.

    PCM16 is scaled to [-1, 1).  Other encodings raise ``UnsupportedFormat``.
    """
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        raise UnsupportedFormat(f"{path}: {exc}") from exc
    if data.dtype == np.int16:
        data = data.astype(float) / 32768.0
    elif data.dtype in (np.float32, np.float64):
        data = data.astype(float)
    else:
        raise UnsupportedFormat(f"{path}: unsupported WAV sample type {data.dtype}")
    if data.ndim == 2:
        if not 0 <= channel < data.shape[1]:
            raise ValueError(f"channel {channel} out of range (file has {data.shape[1]})")
        data = data[:, channel]
    elif channel != 0:
        raise ValueError("mono file: only channel 0 exists")
    return SampledSignal(data, 1.0 / rate)


def load_csv(path) -> SampledSignal:
    """Read ``t,value`` or ``t,re,im`` rows; a header line is optional."""
    rows = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or not "".join(row).strip():
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                if i == 0 and not rows:
                    continue  # header
                raise UnsupportedFormat(f"{path}: non-numeric row {i + 1}")
    if not rows:
        raise UnsupportedFormat(f"{path}: no samples")
    a = np.asarray(rows)
    if a.ndim != 2 or a.shape[1] not in (2, 3):
        raise UnsupportedFormat(f"{path}: expected 2 or 3 columns")
    t = a[:, 0]
    x = a[:, 1] if a.shape[1] == 2 else a[:, 1] + 1j * a[:, 2]
    if t.size < 2:
        raise UnsupportedFormat(f"{path}: need at least two samples")
    steps = np.diff(t)
    dt = float(np.mean(steps))
    if not dt > 0 or np.max(np.abs(steps - dt)) > 1e-6 * dt + 1e-12:
        raise UnsupportedFormat(f"{path}: time column is not uniformly sampled")
    return SampledSignal(x, dt, float(t[0]))


def save_csv(signal: SampledSignal, path, *, complex_columns: bool = True) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if complex_columns:
            w.writerow(["t", "re", "im"])
            for t, v in zip(signal.times, signal.samples):
                w.writerow([repr(float(t)), repr(float(v.real)), repr(float(v.imag))])
        else:
            w.writerow(["t", "value"])
            for t, v in zip(signal.times, signal.samples):
                w.writerow([repr(float(t)), repr(float(v.real))])


def decimate(signal: SampledSignal, factor: int) -> SampledSignal:
    """Anti-aliased integer decimation.

    Linear-phase windowed-sinc low-pass of order ``8 * factor`` with cutoff at
    ``0.45 / factor`` of the input Nyquist, applied with its group delay
    removed, then every ``factor``-th sample is kept.
    """
    if int(factor) != factor or factor < 1:
        raise ValueError(f"decimation factor must be a positive integer, got {factor!r}")
    factor = int(factor)
    if factor == 1:
        return signal
    taps = sps.firwin(8 * factor + 1, 0.45 / factor)
    y = np.convolve(signal.samples, taps, mode="same")
    return SampledSignal(y[::factor], signal.dt * factor, signal.t0)


def slice_time(signal: SampledSignal, t_start: float, t_end: float) -> SampledSignal:
    """Samples with ``t_start <= t < t_end``."""
    if not t_end > t_start:
        raise ValueError("empty time slice")
    end = signal.t0 + signal.duration
    tol = 1e-9 * signal.dt
    if t_start < signal.t0 - tol or t_end > end + tol:
        raise ValueError(
            f"slice [{t_start}, {t_end}) outside signal extent [{signal.t0}, {end})"
        )
    i0 = max(0, math.ceil((t_start - signal.t0) / signal.dt - 1e-9))
    i1 = min(signal.n, math.ceil((t_end - signal.t0) / signal.dt - 1e-9))
    if i1 - i0 < 2:
        raise ValueError("slice holds fewer than two samples")
    return SampledSignal(signal.samples[i0:i1], signal.dt, signal.t0 + i0 * signal.dt)
