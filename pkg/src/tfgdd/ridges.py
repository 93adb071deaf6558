"""Ridge extraction on the squeezed TF-GDD grid by penalised dynamic programming.

Each ridge is a path through one ``(tau_p, u_q)`` cell per frequency column.
A state's own GDD predicts where its GD lands in the next column,
``p + rint(u_q * d_eta / dt)``; the jump limits and the quadratic penalty act
on the deviation from that prediction.  On fine GDD axes the path search runs
on blocks of ``pool`` adjacent GDD cells (max-pooled), and the GDD cell is then
chosen inside the selected block.  Ridges are peeled one at a time, clearing a
neighbourhood of each found path before the next pass.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tsfct import SqueezedGrid

__all__ = ["RidgeSet", "extract_ridges", "noise_floor", "default_pool", "DEFAULT_EDGE_SD"]

# frequency-edge columns within this many window widths sigma are extrapolated
DEFAULT_EDGE_SD = 3.0
# the path search sees at most about this many GDD blocks
_POOL_TARGET = 128


def default_pool(n_gamma: int) -> int:
    """GDD cells per search block: 1 up to 129 cells, then ``(L - 1) // 128``."""
    return max(1, (int(n_gamma) - 1) // _POOL_TARGET)


@dataclass(frozen=True, eq=False)
class RidgeSet:
    """K ridge curves on the frequency axis ``eta``.

    Arrays are ``(K, J)``; columns outside ``support[k] = (start, stop)`` hold
    NaN.  ``cells`` are the integer ``(p, q)`` grid cells before sub-cell
    refinement; ``extrapolated`` marks frequency-edge columns filled by linear
    extrapolation.
    """

    eta: np.ndarray
    tau: np.ndarray
    gamma: np.ndarray
    amplitude: np.ndarray
    support: np.ndarray
    cells: np.ndarray
    extrapolated: np.ndarray
    low_confidence: np.ndarray
    noise_floor: float
    dt: float
    d_gamma: float

    @property
    def k(self) -> int:
        return self.tau.shape[0]

    def common_support(self) -> tuple[int, int]:
        start = int(self.support[:, 0].max())
        stop = int(self.support[:, 1].min())
        return start, max(start, stop)

    def total_amplitude(self) -> np.ndarray:
        return np.nansum(self.amplitude, axis=1)

    def rows(self):
        """``(ridge_id, eta_hz, tau_s, gamma_s_per_hz, amplitude)`` for CSV export."""
        out = []
        for k in range(self.k):
            a, b = self.support[k]
            for j in range(a, b):
                out.append((k, self.eta[j], self.tau[k, j], self.gamma[k, j], self.amplitude[k, j]))
        return out

    def permuted(self, order) -> "RidgeSet":
        order = np.asarray(order)
        return RidgeSet(
            eta=self.eta, tau=self.tau[order], gamma=self.gamma[order],
            amplitude=self.amplitude[order], support=self.support[order],
            cells=self.cells[order], extrapolated=self.extrapolated[order],
            low_confidence=self.low_confidence[order], noise_floor=self.noise_floor,
            dt=self.dt, d_gamma=self.d_gamma,
        )


def noise_floor(values: np.ndarray) -> float:
    """Median modulus of the nonzero cells."""
    mag = np.abs(values)
    nz = mag[mag > 0]
    return float(np.median(nz)) if nz.size else 0.0


def _shift_rows(a: np.ndarray, shifts: np.ndarray, fill: float) -> np.ndarray:
    """``out[p, q] = a[p - shifts[q], q]`` with ``fill`` outside."""
    n = a.shape[0]
    src = np.arange(n)[:, None] - shifts[None, :]
    ok = (src >= 0) & (src < n)
    out = np.full_like(a, fill)
    cols = np.broadcast_to(np.arange(a.shape[1]), a.shape)
    out[ok] = a[src[ok], cols[ok]]
    return out


def _shift2(a: np.ndarray, dp: int, dq: int, fill: float) -> np.ndarray:
    """``out[p, q] = a[p - dp, q - dq]`` with ``fill`` outside."""
    n, m = a.shape
    out = np.full_like(a, fill)
    ps, pd = (slice(0, n - dp), slice(dp, n)) if dp >= 0 else (slice(-dp, n), slice(0, n + dp))
    qs, qd = (slice(0, m - dq), slice(dq, m)) if dq >= 0 else (slice(-dq, m), slice(0, m + dq))
    out[pd, qd] = a[ps, qs]
    return out


def _dp_path(energy: np.ndarray, steps: np.ndarray, jump_t: int, jump_g: int, weight: float):
    """Best path through columns ``energy[:, j, :]``; returns ``(p[j], q[j])``."""
    n_t, n_j, n_l = energy.shape
    moves = [(dp, dq) for dp in range(-jump_t, jump_t + 1) for dq in range(-jump_g, jump_g + 1)]
    back = np.zeros((n_j, n_t, n_l), dtype=np.int8)
    score = energy[:, 0, :].copy()
    for j in range(1, n_j):
        col = energy[:, j, :]
        scale = weight * float(col.max())
        adv = _shift_rows(score, steps, -np.inf)
        best = np.full((n_t, n_l), -np.inf)
        arg = np.zeros((n_t, n_l), dtype=np.int8)
        for i, (dp, dq) in enumerate(moves):
            cand = _shift2(adv, dp, dq, -np.inf) - scale * (dp * dp + dq * dq)
            better = cand > best  # strict: earlier move wins ties
            best[better] = cand[better]
            arg[better] = i
        score = best + col
        back[j] = arg
    p = np.empty(n_j, dtype=int)
    q = np.empty(n_j, dtype=int)
    flat = int(np.argmax(score))
    p[-1], q[-1] = divmod(flat, n_l)
    for j in range(n_j - 1, 0, -1):
        dp, dq = moves[back[j, p[j], q[j]]]
        q[j - 1] = q[j] - dq
        p[j - 1] = p[j] - dp - steps[q[j - 1]]
    return p, q


def _pool_max(work: np.ndarray, pool: int) -> np.ndarray:
    if pool == 1:
        return work
    n_t, n_j, n_l = work.shape
    nb = -(-n_l // pool)
    pad = nb * pool - n_l
    w = np.pad(work, ((0, 0), (0, 0), (0, pad))) if pad else work
    return w.reshape(n_t, n_j, nb, pool).max(axis=3)


def _parabolic(a: float, b: float, c: float) -> float:
    den = a - 2 * b + c
    if not den < 0:
        return 0.0
    return float(np.clip(0.5 * (a - c) / den, -0.5, 0.5))


def _refine(mag: np.ndarray, p: int, q: int) -> tuple[float, float]:
    n_t, n_l = mag.shape
    dp = _parabolic(mag[p - 1, q], mag[p, q], mag[p + 1, q]) if 0 < p < n_t - 1 else 0.0
    dq = _parabolic(mag[p, q - 1], mag[p, q], mag[p, q + 1]) if 0 < q < n_l - 1 else 0.0
    return dp, dq


def _support_run(ok: np.ndarray) -> tuple[int, int]:
    """Longest run of True as ``(start, stop)``; earliest wins ties; ``(0, 0)`` if none."""
    best = (0, 0)
    start = None
    for i, v in enumerate(np.append(ok, False)):
        if v and start is None:
            start = i
        elif not v and start is not None:
            if i - start > best[1] - best[0]:
                best = (start, i)
            start = None
    return best


def _extrapolate(x: np.ndarray, y: np.ndarray, lo: int, hi: int, n_fit: int):
    """Fill ``y`` outside ``[lo, hi)`` by straight lines fitted to the nearest interior points."""
    out = y.copy()
    if lo > 0:
        sl = slice(lo, min(lo + n_fit, hi))
        c = np.polyfit(x[sl], y[sl], 1) if sl.stop - sl.start >= 2 else (0.0, y[lo])
        out[:lo] = np.polyval(c, x[:lo])
    if hi < y.size:
        sl = slice(max(hi - n_fit, lo), hi)
        c = np.polyfit(x[sl], y[sl], 1) if sl.stop - sl.start >= 2 else (0.0, y[hi - 1])
        out[hi:] = np.polyval(c, x[hi:])
    return out


def extract_ridges(
    s: SqueezedGrid,
    k_modes: int,
    jump_t: int = 2,
    jump_g: int = 2,
    clear_radius: int = 2,
    *,
    penalty: float = 0.5,
    edge_sd: float = DEFAULT_EDGE_SD,
    n_fit: int = 8,
    pool: int | None = None,
) -> RidgeSet:
    """Peel ``k_modes`` ridges from the squeezed grid.

    Columns within ``edge_sd * sigma`` Hz of either end of the frequency axis
    are not tracked: the window there reaches past the analysed band.  Their
    ridge coordinates are linearly extrapolated from the nearest ``n_fit``
    tracked columns.  A ridge's support is the longest run of tracked
    columns whose amplitude reaches the noise floor (median nonzero ``|D|``),
    widened to the array ends when the run touches the edge columns; values
    outside it are NaN.  Ridges whose median tracked amplitude falls below
    the floor are flagged ``low_confidence``.  Output is
    ordered by descending total amplitude.

    ``jump_g`` and ``clear_radius`` along GDD count search blocks of ``pool``
    cells (default :func:`default_pool`).
    """
    if int(k_modes) != k_modes or k_modes < 1:
        raise ValueError(f"k_modes must be a positive integer, got {k_modes!r}")
    if min(jump_t, jump_g, clear_radius) < 0 or max(jump_t, jump_g) > 5:
        raise ValueError("jump limits must lie in [0, 5] cells and clear_radius >= 0")
    n_t, n_j, n_l = s.values.shape
    if not np.any(s.values):
        raise ValueError("squeezed grid is identically zero")
    eta = s.eta
    edge_cols = int(np.ceil(edge_sd * s.sigma / s.d_eta)) if edge_sd > 0 else 0
    if n_j - 2 * edge_cols < max(3, n_fit):
        edge_cols = 0
    lo, hi = edge_cols, n_j - edge_cols
    pool = default_pool(n_l) if pool is None else int(pool)
    if pool < 1:
        raise ValueError("pool must be a positive integer")
    n_b = -(-n_l // pool)
    centres = s.gamma.start + (np.arange(n_b) * pool + 0.5 * (min(pool, n_l) - 1)) * s.gamma.d_gamma
    steps = np.rint(centres * s.d_eta / s.dt).astype(int)
    floor = noise_floor(s.values)

    v = s.values[:, lo:hi, :]
    work = v.real**2 + v.imag**2
    del v
    found = []
    for _ in range(int(k_modes)):
        p, qb = _dp_path(_pool_max(work, pool), steps, jump_t, jump_g, penalty)
        jj = np.arange(hi - lo)
        q = np.empty_like(qb)
        for j in jj:
            q0 = qb[j] * pool
            q[j] = q0 + int(np.argmax(work[p[j], j, q0 : q0 + pool]))
        amp = np.sqrt(work[p, jj, q])
        ref = [_refine(np.sqrt(work[:, j, :]), p[j], q[j]) for j in jj]
        found.append((p, q, amp, np.array(ref)))
        for j in jj:
            a0, a1 = max(p[j] - clear_radius, 0), p[j] + clear_radius + 1
            b0, b1 = max(q[j] - clear_radius * pool, 0), q[j] + clear_radius * pool + 1
            work[a0:a1, j, b0:b1] = 0.0

    k = len(found)
    tau = np.full((k, n_j), np.nan)
    gam = np.full((k, n_j), np.nan)
    amp_all = np.full((k, n_j), np.nan)
    cells = np.full((k, n_j, 2), -1, dtype=int)
    extra = np.zeros((k, n_j), dtype=bool)
    extra[:, :lo] = True
    extra[:, hi:] = True
    for i, (p, q, amp, ref) in enumerate(found):
        tau[i, lo:hi] = s.t[0] + (p + ref[:, 0]) * s.dt
        gam[i, lo:hi] = s.gamma.start + (q + ref[:, 1]) * s.gamma.d_gamma
        amp_all[i, lo:hi] = amp
        cells[i, lo:hi, 0] = p
        cells[i, lo:hi, 1] = q
        tau[i] = _extrapolate(eta, tau[i], lo, hi, n_fit)
        gam[i] = _extrapolate(eta, gam[i], lo, hi, n_fit)
        for j in np.r_[0:lo, hi:n_j]:
            pp = int(np.rint((tau[i, j] - s.t[0]) / s.dt))
            qq = int(np.rint((gam[i, j] - s.gamma.start) / s.gamma.d_gamma))
            inside = 0 <= pp < n_t and 0 <= qq < n_l
            cells[i, j] = (pp, qq) if inside else (-1, -1)
            amp_all[i, j] = abs(s.values[pp, j, qq]) if inside else 0.0

    support = np.empty((k, 2), dtype=int)
    for i in range(k):
        a, b = _support_run(amp_all[i, lo:hi] >= floor)
        if b > a:
            a, b = a + lo, b + lo
            # runs reaching the tracked edge carry on into the extrapolated columns
            a = 0 if a == lo else a
            b = n_j if b == hi else b
        support[i] = a, b
        for arr in (tau, gam, amp_all):
            arr[i, :a] = np.nan
            arr[i, b:] = np.nan
        cells[i, :a] = -1
        cells[i, b:] = -1
    low = np.array([np.median(found[i][2]) < floor for i in range(k)])
    total = np.nansum(amp_all, axis=1)
    order = sorted(range(k), key=lambda i: (-total[i], support[i, 0], i))
    return RidgeSet(
        eta=eta, tau=tau, gamma=gam, amplitude=amp_all, support=support, cells=cells,
        extrapolated=extra, low_confidence=low, noise_floor=floor, dt=s.dt,
        d_gamma=s.gamma.d_gamma,
    ).permuted(order)
