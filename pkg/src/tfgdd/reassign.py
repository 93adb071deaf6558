"""GD and GDD reference functions (reassignment operators) for the FCT.

With the Gaussian window, ``D^{g'} = -D^{xi g} / sigma^2`` and
``D^{xi g'} = -D^{xi^2 g} / sigma^2``, so the operators only need the three FCTs
with windows ``g``, ``xi g`` and ``xi^2 g``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .fct import TFGDDGrid
from .signals import ModeSpec
from .windows import GaussianWindow, derivative_window_reduction

__all__ = [
    "ReassignmentField",
    "reference_functions",
    "reference_arrays",
    "cramer_reference",
    "high_order_reference",
    "ZkResiduals",
    "theorem1_residuals",
    "DEFAULT_EPSILON_REL",
]

DEFAULT_EPSILON_REL = 1e-3
_TINY = np.finfo(float).tiny * 1e4


@dataclass(frozen=True, eq=False)
class ReassignmentField:
    """Per-cell GD/GDD estimates on the grid of the source FCT.

    Cells outside the selection mask carry NaN in ``t_hat`` and ``r_hat``.
    """

    t_hat: np.ndarray
    r_hat: np.ndarray
    det_e0_mag: np.ndarray
    mask: np.ndarray
    epsilon_used: float
    t: np.ndarray
    eta: np.ndarray
    gamma: np.ndarray


def _check_rel(epsilon_rel: float) -> None:
    if not 0 < epsilon_rel < 1:
        raise ValueError(f"epsilon_rel must lie in (0, 1), got {epsilon_rel!r}")


def reference_arrays(d0, d1, d2, t, gamma, sigma: float):
    """Element-wise GD/GDD estimates and ``|det E0|`` from raw FCT arrays.

    ``t`` and ``gamma`` must broadcast against the arrays.  Returns
    ``(t_hat, r_hat, det_abs)`` without masking.
    """
    c = -1.0 / sigma**2
    dgp = c * d1  # D^{g'}
    dxgp = c * d2  # D^{xi g'}
    det = d2 * d0 - d1 * d1
    with np.errstate(divide="ignore", invalid="ignore"):
        t_hat = t + np.imag((d2 * dgp - d1 * dxgp - d1 * d0) / det) / (2 * np.pi)
        r_hat = gamma + np.imag((d0 * dxgp - d1 * dgp + d0 * d0) / det) / (2 * np.pi)
    return t_hat, r_hat, np.abs(det)


def _same_axes(*grids: TFGDDGrid) -> None:
    ref = grids[0]
    for g in grids[1:]:
        if (
            g.values.shape != ref.values.shape
            or g.gamma != ref.gamma
            or g.sigma != ref.sigma
            or not np.array_equal(g.bins, ref.bins)
            or not np.array_equal(g.t, ref.t)
        ):
            raise ValueError("FCT grids do not share axes / window")


def _finish(t_hat, r_hat, det_abs, epsilon_rel, grid: TFGDDGrid) -> ReassignmentField:
    eps = epsilon_rel * float(np.max(det_abs)) if det_abs.size else 0.0
    mask = (det_abs > eps) & (det_abs > _TINY) & np.isfinite(t_hat) & np.isfinite(r_hat)
    t_hat = np.where(mask, t_hat, np.nan)
    r_hat = np.where(mask, r_hat, np.nan)
    return ReassignmentField(
        t_hat=t_hat, r_hat=r_hat, det_e0_mag=det_abs, mask=mask, epsilon_used=eps,
        t=grid.t, eta=grid.eta, gamma=grid.gamma.values,
    )


def reference_functions(
    d0: TFGDDGrid,
    d1: TFGDDGrid,
    d2: TFGDDGrid,
    window: GaussianWindow,
    epsilon_rel: float = DEFAULT_EPSILON_REL,
) -> ReassignmentField:
    """Second-order GD/GDD reference functions with the ``|det E0|`` mask.

    The threshold is ``epsilon_rel * max |det E0|`` over the grid.
    """
    _check_rel(epsilon_rel)
    _same_axes(d0, d1, d2)
    if (d0.m, d1.m, d2.m) != (0, 1, 2):
        raise ValueError("expected window powers 0, 1, 2")
    if d0.sigma != window.sigma:
        raise ValueError("window does not match the FCT grids")
    t = d0.t[:, None, None]
    gamma = d0.gamma.values[None, None, :]
    t_hat, r_hat, det_abs = reference_arrays(d0.values, d1.values, d2.values, t, gamma, window.sigma)
    return _finish(t_hat, r_hat, det_abs, epsilon_rel, d0)


def cramer_reference(d0, d1, d2, t, gamma, sigma: float):
    """GD/GDD via Cramer's rule on ``E1``/``E2`` with explicit eta-derivatives.

    ``dD^g/deta = -i2pi t D^g - i2pi gamma D^{xi g} - D^{g'}`` and
    ``dD^{xi g}/deta = -i2pi t D^{xi g} - i2pi gamma D^{xi^2 g} - D^{xi g'} - D^g``.
    Independent arrangement of the same algebra, used as a cross-check.
    """
    c = -1.0 / sigma**2
    tw = 2j * np.pi
    dd0 = -tw * t * d0 - tw * gamma * d1 - c * d1
    dd1 = -tw * t * d1 - tw * gamma * d2 - c * d2 - d0
    det0 = d0 * d2 - d1 * d1
    det1 = dd0 * d2 - d1 * dd1
    det2 = d0 * dd1 - dd0 * d1
    with np.errstate(divide="ignore", invalid="ignore"):
        return -np.imag(det1 / det0) / (2 * np.pi), -np.imag(det2 / det0) / (2 * np.pi)


def _high_order_arrays(dm: Mapping[int, np.ndarray], order: int, t, gamma, sigma: float):
    c = -1.0 / sigma**2
    n = order
    shape = np.broadcast(dm[0], t, gamma).shape
    zero = np.zeros(shape, dtype=complex)

    def col(fn):
        return [np.broadcast_to(fn(i), shape) for i in range(n)]

    hankel = [[np.broadcast_to(dm[i + j], shape) for j in range(n)] for i in range(n)]
    deriv = col(lambda i: c * dm[i + 1])  # D^{xi^i g'}
    count = col(lambda i: zero if i == 0 else i * dm[i - 1])

    def det_with(column_idx, column):
        rows = [
            [column[i] if j == column_idx else hankel[i][j] for j in range(n)] for i in range(n)
        ]
        mat = np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)
        return np.linalg.det(mat)

    det0 = det_with(-1, None)
    num_t = det_with(0, deriv) + det_with(0, count)
    num_r = det_with(1, deriv) + det_with(1, count)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_hat = t + np.imag(num_t / det0) / (2 * np.pi)
        r_hat = gamma + np.imag(num_r / det0) / (2 * np.pi)
    return t_hat, r_hat, np.abs(det0)


def high_order_reference(
    grids: Mapping[int, TFGDDGrid] | Sequence[TFGDDGrid],
    order: int,
    window: GaussianWindow,
    epsilon_rel: float = DEFAULT_EPSILON_REL,
) -> ReassignmentField:
    """N-th order GD/GDD reference functions from FCTs with windows ``xi^m g``, m <= 2N-2.

    Derivative-window FCTs are reduced with ``xi^i g' = -xi^{i+1} g / sigma^2``.
    Exact for spectra ``exp(-d(eta)) exp(-i 2 pi theta(eta))`` with polynomial
    ``d`` and ``theta`` of degree N.
    """
    if order < 2:
        raise ValueError("order must be >= 2")
    if order > 4:
        raise ValueError("orders above 4 are not supported (conditioning)")
    if not isinstance(grids, Mapping):
        grids = {g.m: g for g in grids}
    need = range(2 * order - 1)
    missing = [m for m in need if m not in grids]
    if missing:
        raise ValueError(f"missing FCT grids for window powers {missing}")
    _check_rel(epsilon_rel)
    _same_axes(*(grids[m] for m in need))
    ref = grids[0]
    t = ref.t[:, None, None]
    gamma = ref.gamma.values[None, None, :]
    t_hat, r_hat, det_abs = _high_order_arrays(
        {m: grids[m].values for m in need}, order, t, gamma, window.sigma
    )
    return _finish(t_hat, r_hat, det_abs, epsilon_rel, ref)


@dataclass(frozen=True)
class ZkResiduals:
    """Estimator errors on the cells of ``Z_k`` that pass the mask."""

    mode: int
    index: tuple  # (n, j, l) index arrays
    t_err: np.ndarray
    r_err: np.ndarray

    @property
    def empty(self) -> bool:
        return self.t_err.size == 0


def theorem1_residuals(
    field: ReassignmentField,
    truth: Sequence[ModeSpec],
    delta1: float,
    delta2: float,
    *,
    columns=None,
) -> list[ZkResiduals]:
    """``|t_hat - theta_k'|`` and ``|r_hat - theta_k''|`` on ``Z_k`` intersected with the mask.

    ``Z_k = {|t - theta_k'(eta)| < delta1 and |gamma - theta_k''(eta)| < delta2}``.
    ``columns`` optionally restricts to a subset of frequency columns.
    """
    out = []
    cols = np.arange(field.eta.size) if columns is None else np.asarray(columns)
    for k, mode in enumerate(truth):
        gd = mode.gd(field.eta)
        gdd = mode.gdd(field.eta)
        in_t = np.abs(field.t[:, None] - gd[None, :]) < delta1  # (n, j)
        in_g = np.abs(field.gamma[None, :] - gdd[:, None]) < delta2  # (j, l)
        zk = in_t[:, :, None] & in_g[None, :, :] & field.mask
        keep = np.zeros(field.eta.size, bool)
        keep[cols] = True
        zk &= keep[None, :, None]
        n, j, l = np.nonzero(zk)
        out.append(
            ZkResiduals(
                mode=k,
                index=(n, j, l),
                t_err=np.abs(field.t_hat[n, j, l] - gd[j]),
                r_err=np.abs(field.r_hat[n, j, l] - gdd[j]),
            )
        )
    return out
