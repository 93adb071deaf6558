"""File formats: the ``TFGD`` binary grid container and the CSV/WAV exports.

Container layout (little-endian)::

    b"TFGD"  u16 version=1
    u32 N_t  u32 N_eta  u32 N_gamma
    u8 dtype (0=complex64, 1=complex128, 2=float32, 3=float64)
    u8 flags_m  (bits 0-5: window power m; 0x80: squeezed; 0x40: field export)
    f64 sigma  f64 t_start  f64 dt  f64 eta_start  f64 d_eta  f64 gamma_start  f64 d_gamma
    payload, n fastest: offset = ((j * N_gamma) + l) * N_t + n

``N_gamma = 0`` marks a 2-D (time x frequency) representation stored as
``offset = j * N_t + n``.  A field export holds three float64 planes
(``t_hat``, ``r_hat``, ``|det E0|``) followed by a u8 mask plane.
Squeezed grids store plain sums (no cell-volume weight).
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path
from types import SimpleNamespace
from typing import Sequence

import numpy as np
from scipy.io import wavfile

from .errors import UnsupportedFormat

__all__ = [
    "GridHeader",
    "write_grid",
    "read_grid",
    "write_field",
    "write_tfr",
    "write_rows_csv",
    "write_tfr_csv",
    "write_wav",
    "FLAG_SQUEEZED",
    "FLAG_FIELD",
]

MAGIC = b"TFGD"
VERSION = 1
_HEADER = struct.Struct("<4sHIIIBB7d")
FLAG_SQUEEZED = 0x80
FLAG_FIELD = 0x40
_M_MASK = 0x3F
_DTYPES = {0: np.dtype("<c8"), 1: np.dtype("<c16"), 2: np.dtype("<f4"), 3: np.dtype("<f8")}
_CODES = {v: k for k, v in _DTYPES.items()}


@dataclass(frozen=True)
class GridHeader:
    n_t: int
    n_eta: int
    n_gamma: int
    dtype: int
    flags_m: int
    sigma: float
    t_start: float
    dt: float
    eta_start: float
    d_eta: float
    gamma_start: float
    d_gamma: float

    @property
    def m(self) -> int:
        return self.flags_m & _M_MASK

    @property
    def squeezed(self) -> bool:
        return bool(self.flags_m & FLAG_SQUEEZED)

    @property
    def field(self) -> bool:
        return bool(self.flags_m & FLAG_FIELD)

    @property
    def is_2d(self) -> bool:
        return self.n_gamma == 0

    def pack(self) -> bytes:
        return _HEADER.pack(
            MAGIC, VERSION, self.n_t, self.n_eta, self.n_gamma, self.dtype, self.flags_m,
            self.sigma, self.t_start, self.dt, self.eta_start, self.d_eta,
            self.gamma_start, self.d_gamma,
        )


def _uniform_eta(eta: np.ndarray, d_eta: float):
    """Order columns by frequency and check uniform spacing."""
    order = np.argsort(eta, kind="stable")
    e = eta[order]
    if e.size > 1 and not np.allclose(np.diff(e), d_eta, rtol=1e-9, atol=0):
        raise ValueError("frequency axis is not uniform; cannot store in the grid container")
    return order, float(e[0])


def _header_for(grid, n_gamma: int, dtype: np.dtype, flags_m: int, gamma=None) -> tuple[GridHeader, np.ndarray]:
    order, eta0 = _uniform_eta(np.asarray(grid.eta), grid.d_eta)
    g = gamma if gamma is not None else getattr(grid, "gamma", None)
    header = GridHeader(
        n_t=len(grid.t), n_eta=len(grid.eta), n_gamma=n_gamma, dtype=_CODES[dtype],
        flags_m=flags_m, sigma=float(getattr(grid, "sigma", 0.0)), t_start=float(grid.t[0]),
        dt=float(grid.dt), eta_start=eta0, d_eta=float(grid.d_eta),
        gamma_start=float(g.start) if g is not None else 0.0,
        d_gamma=float(g.d_gamma) if g is not None else float(getattr(grid, "d_gamma", 0.0)),
    )
    return header, order


def _write_payload(fh, values: np.ndarray, order: np.ndarray, dtype: np.dtype) -> None:
    """Stream ``[n, j, l]`` (or ``[n, j]``) values in the n-fastest layout, one column at a time."""
    for j in order:
        col = values[:, j]
        fh.write(np.ascontiguousarray(col.T, dtype=dtype).tobytes())


def write_grid(path, grid, *, squeezed: bool | None = None, dtype=np.complex128) -> None:
    """Write a TFGDDGrid or SqueezedGrid."""
    dt = np.dtype(dtype).newbyteorder("<")
    if dt not in (_DTYPES[0], _DTYPES[1]):
        raise ValueError("grid payloads are complex64 or complex128")
    is_sq = squeezed if squeezed is not None else not hasattr(grid, "m")
    m = int(getattr(grid, "m", 0))
    if not 0 <= m <= _M_MASK:
        raise ValueError("window power does not fit the header")
    header, order = _header_for(grid, grid.values.shape[2], dt, m | (FLAG_SQUEEZED if is_sq else 0))
    with open(path, "wb") as fh:
        fh.write(header.pack())
        _write_payload(fh, grid.values, order, dt)


def write_field(path, field, sigma: float, dt: float, d_eta: float, gamma) -> None:
    """Write a ReassignmentField: t_hat, r_hat, |det E0| planes and a mask plane."""
    ax = SimpleNamespace(t=field.t, eta=field.eta, dt=dt, d_eta=d_eta, sigma=sigma)
    f64 = _DTYPES[3]
    header, order = _header_for(ax, field.t_hat.shape[2], f64, FLAG_FIELD, gamma=gamma)
    with open(path, "wb") as fh:
        fh.write(header.pack())
        for plane in (field.t_hat, field.r_hat, field.det_e0_mag):
            _write_payload(fh, plane, order, f64)
        _write_payload(fh, field.mask, order, np.dtype("u1"))


def write_tfr(path, tfr, sigma: float = 0.0) -> None:
    """Write a TFRGrid as a 2-D container (``N_gamma = 0``, float64)."""
    ax = SimpleNamespace(
        t=tfr.t, eta=tfr.eta, sigma=sigma, d_gamma=tfr.d_gamma,
        dt=float(tfr.t[1] - tfr.t[0]) if len(tfr.t) > 1 else 1.0,
        d_eta=float(abs(tfr.eta[1] - tfr.eta[0])) if len(tfr.eta) > 1 else 1.0,
    )
    header, order = _header_for(ax, 0, _DTYPES[3], 0)
    with open(path, "wb") as fh:
        fh.write(header.pack())
        _write_payload(fh, tfr.values, order, _DTYPES[3])


@dataclass(frozen=True, eq=False)
class ContainerData:
    """Decoded container: header, axes and arrays indexed ``[n, j, (l)]``."""

    header: GridHeader
    t: np.ndarray
    eta: np.ndarray
    gamma: np.ndarray | None
    values: np.ndarray | None = None
    t_hat: np.ndarray | None = None
    r_hat: np.ndarray | None = None
    det_e0_mag: np.ndarray | None = None
    mask: np.ndarray | None = None


def read_grid(path) -> ContainerData:
    """Read any container written by this module."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise UnsupportedFormat(f"{path}: truncated header")
    fields = _HEADER.unpack_from(raw)
    if fields[0] != MAGIC:
        raise UnsupportedFormat(f"{path}: bad magic {fields[0]!r}")
    if fields[1] != VERSION:
        raise UnsupportedFormat(f"{path}: unsupported version {fields[1]}")
    h = GridHeader(*fields[2:])
    if h.dtype not in _DTYPES:
        raise UnsupportedFormat(f"{path}: unknown dtype code {h.dtype}")
    dt = _DTYPES[h.dtype]
    cells = h.n_t * h.n_eta * (h.n_gamma or 1)
    shape = (h.n_eta, h.n_t) if h.is_2d else (h.n_eta, h.n_gamma, h.n_t)
    perm = (1, 0) if h.is_2d else (2, 0, 1)
    body = memoryview(raw)[_HEADER.size :]

    def plane(offset: int, dtype):
        size = cells * dtype.itemsize
        if len(body) < offset + size:
            raise UnsupportedFormat(f"{path}: truncated payload")
        arr = np.frombuffer(body[offset : offset + size], dtype=dtype).reshape(shape)
        return arr.transpose(perm).astype(dtype.newbyteorder("="), copy=True), offset + size

    t = h.t_start + np.arange(h.n_t) * h.dt
    eta = h.eta_start + np.arange(h.n_eta) * h.d_eta
    gamma = None if h.is_2d else h.gamma_start + np.arange(h.n_gamma) * h.d_gamma
    if h.field:
        th, off = plane(0, dt)
        rh, off = plane(off, dt)
        det, off = plane(off, dt)
        mask, off = plane(off, np.dtype("u1"))
        return ContainerData(h, t, eta, gamma, t_hat=th, r_hat=rh, det_e0_mag=det, mask=mask.astype(bool))
    values, _ = plane(0, dt)
    return ContainerData(h, t, eta, gamma, values=values)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_rows_csv(path, header: Sequence[str], rows) -> None:
    """CSV with a header line; floats in shortest round-trip form."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_tfr_csv(path, tfr) -> None:
    """TFR matrix: first row ``tau_s`` then the frequencies; one row per time."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tau_s"] + [_fmt(e) for e in tfr.eta])
        for p, t in enumerate(tfr.t):
            w.writerow([_fmt(t)] + [_fmt(v) for v in tfr.values[p]])


def write_wav(path, signal) -> None:
    """Real part, peak-normalised, float32 WAV."""
    x = np.real(signal.samples)
    peak = float(np.max(np.abs(x))) if x.size else 0.0
    data = (x / peak if peak > 0 else x).astype(np.float32)
    rate = int(round(1.0 / signal.dt))
    wavfile.write(path, rate, data)

