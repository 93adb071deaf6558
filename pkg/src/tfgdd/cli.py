"""Command-line front end: ``tfgdd <command> [options]``.

Every command writes its data files plus ``manifest_<command>.json`` into
``--out``.  Exit codes: 0 success, 2 configuration error, 3 I/O error,
4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .bounds import (
    BoundRow,
    lemma_quantities,
    measure_class_params,
    omega0,
    recovery_bounds,
    theorem1_rhs,
)
from .errors import GridTooLarge, NumericalFailure, UnsupportedFormat
from .fct import GammaGrid, boundary_band, default_r0, fct_grid, fct_grids
from .fgsso import diagnostics_profile, recover_modes
from .io import read_grid, write_grid, write_rows_csv, write_tfr_csv, write_wav
from .reassign import DEFAULT_EPSILON_REL, high_order_reference, reference_functions, theorem1_residuals
from .ridges import extract_ridges
from .signals import (
    SampledSignal,
    builtin_signal,
    decimate,
    load_audio,
    load_csv,
    save_csv,
    slice_time,
)
from .tsfct import SqueezedGrid, project_tfr, squeeze, tsfct
from .verify import run_suite
from .window_opt import EntropyConfig, optimize_sigma
from .windows import GaussianWindow

__all__ = ["main", "build_parser", "RunConfig", "EXIT_OK", "EXIT_CONFIG", "EXIT_IO", "EXIT_NUMERICAL"]

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL = 0, 2, 3, 4
BUILTINS = ("paper-x", "paper-x-literal", "paper-y", "paper-y-literal")
COMMANDS = ("synth", "fct", "squeeze", "entropy", "ridges", "recover", "bounds", "verify")


class ConfigError(ValueError):
    """Inconsistent or missing options."""


@dataclass
class RunConfig:
    command: str
    signal: str | None = None
    input: str | None = None
    channel: int = 0
    decimate: int = 1
    slice: str | None = None
    sigma: float | None = None
    sigma_auto: str | None = None
    gamma_max: float | None = None
    gamma_bins: int | None = None
    epsilon_rel: float = DEFAULT_EPSILON_REL
    modes: int = 2
    order: int = 2
    recover_sigma_scale: float = 1.0
    boundary_trim: float = 3.0
    grid: str | None = None
    suite: str = "all"
    out: str = "."
    threads: int = 1
    extras: dict = field(default_factory=dict)

    @classmethod
    def from_namespace(cls, ns: argparse.Namespace) -> "RunConfig":
        keys = {f for f in cls.__dataclass_fields__ if f != "extras"}
        return cls(**{k: getattr(ns, k) for k in keys if hasattr(ns, k)})

    def echo(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "extras"}
        return d


def _parse_range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError as exc:
        raise ConfigError(f"expected lo:hi, got {text!r}") from exc
    if not 0 < lo < hi:
        raise ConfigError(f"range must satisfy 0 < lo < hi, got {text!r}")
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--signal", choices=BUILTINS, help="builtin benchmark signal")
    src.add_argument("--input", help="WAV or CSV signal file")
    common.add_argument("--channel", type=int, default=0, help="WAV channel (default 0)")
    common.add_argument("--decimate", type=int, default=1, help="integer decimation factor")
    common.add_argument("--slice", help="time slice start:end in seconds")
    win = common.add_mutually_exclusive_group()
    win.add_argument("--sigma", type=float, help="Gaussian window width (Hz)")
    win.add_argument("--sigma-auto", help="entropy-optimal width searched in lo:hi")
    common.add_argument("--gamma-max", type=float, help="GDD half-range R0 (s/Hz)")
    common.add_argument("--gamma-bins", type=int, help="odd GDD bin count L (default 2*floor(N/2)+1)")
    common.add_argument("--epsilon-rel", type=float, default=DEFAULT_EPSILON_REL,
                        help="mask threshold relative to max |det E0|")
    common.add_argument("--modes", type=int, default=2, help="number of ridges K")
    common.add_argument("--order", type=int, default=2, help="GD/GDD estimator order N (2..4)")
    common.add_argument("--recover-sigma-scale", type=float, default=1.0,
                        help="recovery window width as a fraction of sigma")
    common.add_argument("--boundary-trim", type=float, default=3.0,
                        help="record-edge band in window time-scale units")
    common.add_argument("--grid", help="squeezed grid container to reuse (ridges, recover)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--threads", type=int, default=1, help="worker threads")
    common.add_argument("--from-manifest", help="rerun with the config stored in a run manifest")

    p = argparse.ArgumentParser(prog="tfgdd", description="TF-GDD chirplet analysis toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "synth": "write a builtin signal as CSV and WAV",
        "fct": "write the m=0 FCT grid container",
        "squeeze": "write the squeezed grid container and the TFR CSV",
        "entropy": "write the Renyi entropy curve over sigma",
        "ridges": "write the ridge CSV",
        "recover": "write recovered modes and mixing diagnostics",
        "bounds": "write the bound report for a builtin signal",
        "verify": "run oracle comparisons and write a JSON report",
    }
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common], help=helps[name])
        if name == "verify":
            sp.add_argument("--suite", default="all", help="kernels, fft, exactness, high-order or all")
    return p


# ---------------------------------------------------------------- helpers


def _load_signal(cfg: RunConfig):
    if cfg.signal:
        sig, modes = builtin_signal(cfg.signal)
    elif cfg.input:
        path = Path(cfg.input)
        if not path.exists():
            raise FileNotFoundError(f"input not found: {path}")
        suffix = path.suffix.lower()
        if suffix == ".wav":
            sig = load_audio(path, cfg.channel)
        elif suffix in (".csv", ".txt"):
            sig = load_csv(path)
        else:
            raise UnsupportedFormat(f"{path}: expected a .wav or .csv file")
        modes = None
    else:
        raise ConfigError("one of --signal or --input is required")
    if cfg.decimate != 1:
        sig = decimate(sig, cfg.decimate)
    if cfg.slice:
        a, b = (float(v) for v in cfg.slice.split(":"))
        sig = slice_time(sig, a, b)
    if not np.any(sig.samples):
        raise NumericalFailure("input signal is identically zero")
    return sig, modes


def _gamma_grid(cfg: RunConfig, sig: SampledSignal, modes) -> GammaGrid:
    r0 = cfg.gamma_max if cfg.gamma_max is not None else default_r0(sig, modes)
    return GammaGrid.for_signal(sig.n, r0, cfg.gamma_bins)


def _sigma(cfg: RunConfig, sig, ggrid, manifest: dict) -> float:
    if cfg.sigma is not None:
        if not cfg.sigma > 0:
            raise ConfigError("--sigma must be positive")
        return cfg.sigma
    if cfg.sigma_auto:
        lo, hi = _parse_range(cfg.sigma_auto)
        best, curve = optimize_sigma(sig, ggrid, (lo, hi), EntropyConfig(), threads=cfg.threads)
        manifest["entropy_curve"] = curve.rows()
        return best
    raise ConfigError("one of --sigma or --sigma-auto is required")


def _validate(cfg: RunConfig) -> None:
    if cfg.threads < 1:
        raise ConfigError("--threads must be >= 1")
    if cfg.gamma_bins is not None and (cfg.gamma_bins < 3 or cfg.gamma_bins % 2 == 0):
        raise ConfigError("--gamma-bins must be odd and >= 3")
    if cfg.gamma_max is not None and not cfg.gamma_max > 0:
        raise ConfigError("--gamma-max must be positive")
    if not 0 < cfg.epsilon_rel < 1:
        raise ConfigError("--epsilon-rel must lie in (0, 1)")
    if cfg.modes < 1:
        raise ConfigError("--modes must be >= 1")
    if not 2 <= cfg.order <= 4:
        raise ConfigError("--order must be 2, 3 or 4")
    if not cfg.recover_sigma_scale > 0:
        raise ConfigError("--recover-sigma-scale must be positive")
    if not cfg.boundary_trim >= 0:
        raise ConfigError("--boundary-trim must be non-negative")


def _squeezed(cfg: RunConfig, sig, modes, manifest: dict) -> SqueezedGrid:
    if cfg.grid:
        return _squeezed_from_file(cfg.grid)
    ggrid = _gamma_grid(cfg, sig, modes)
    sigma = _sigma(cfg, sig, ggrid, manifest)
    w = GaussianWindow(sigma)
    manifest.update(sigma=sigma, r0=ggrid.r0, gamma_bins=ggrid.l_bins, d_gamma=ggrid.d_gamma)
    if cfg.order == 2:
        s = tsfct(sig, w, ggrid, epsilon_rel=cfg.epsilon_rel, threads=cfg.threads).squeezed
    else:
        g = fct_grids(sig, w, ggrid, ms=range(2 * cfg.order - 1), threads=cfg.threads)
        f = high_order_reference(g, cfg.order, w, cfg.epsilon_rel)
        s = squeeze(g[0], f, threads=cfg.threads)
    manifest.update(
        masked_cells=s.masked, dropped_cells=s.dropped, epsilon_used=s.epsilon_used,
        boundary_band_s=boundary_band(w) * cfg.boundary_trim / 3.0,
    )
    return s


def _squeezed_from_file(path) -> SqueezedGrid:
    c = read_grid(path)
    h = c.header
    if not h.squeezed or h.is_2d or c.values is None:
        raise UnsupportedFormat(f"{path}: not a squeezed TF-GDD grid")
    ggrid = GammaGrid(-h.gamma_start, h.n_gamma)
    return SqueezedGrid(
        values=c.values, t=c.t, eta=c.eta, bins=np.rint(c.eta / h.d_eta).astype(int), gamma=ggrid,
        sigma=h.sigma, dt=h.dt, d_eta=h.d_eta, masked=-1, dropped=-1, epsilon_used=math.nan,
        kept_mass=c.values.sum(axis=(0, 2)),
    )


def _ridges(cfg, sig, modes, manifest):
    s = _squeezed(cfg, sig, modes, manifest)
    t0 = time.perf_counter()
    rs = extract_ridges(s, cfg.modes)
    manifest["timings"]["ridges_s"] = time.perf_counter() - t0
    manifest.update(
        sigma=s.sigma, noise_floor=rs.noise_floor, ridge_support=rs.support.tolist(),
        low_confidence=rs.low_confidence.tolist(),
    )
    return s, rs


def _match_ridges(rs, modes):
    """Ridge order that pairs ridge ``i`` with mode ``i`` (smallest mean GD distance)."""
    from itertools import permutations

    if len(modes) != rs.k:
        raise ConfigError("--modes must equal the number of modes in the builtin signal")
    a, b = rs.common_support()
    if b <= a:
        raise NumericalFailure("ridges share no common support")
    eta = rs.eta[a:b]
    cost = np.array([[np.nanmean(np.abs(rs.tau[i, a:b] - m.gd(eta))) for m in modes] for i in range(rs.k)])
    best = min(permutations(range(rs.k)), key=lambda p: sum(cost[p[k], k] for k in range(rs.k)))
    return rs.permuted(list(best))


def _interior(band: np.ndarray, frac: float = 0.1) -> np.ndarray:
    cols = np.flatnonzero(band)
    if cols.size == 0:
        return cols
    lo, hi = cols.min(), cols.max() + 1
    cut = int(round(frac * (hi - lo)))
    return cols[(cols >= lo + cut) & (cols < hi - cut)]


# ---------------------------------------------------------------- commands


def cmd_synth(cfg, out: Path, manifest: dict) -> list[str]:
    if not cfg.signal:
        raise ConfigError("synth needs --signal")
    sig, _ = _load_signal(cfg)
    save_csv(sig, out / "signal.csv")
    write_wav(out / "signal.wav", sig)
    manifest.update(samples=sig.n, dt=sig.dt)
    return ["signal.csv", "signal.wav"]


def cmd_fct(cfg, out: Path, manifest: dict) -> list[str]:
    sig, modes = _load_signal(cfg)
    ggrid = _gamma_grid(cfg, sig, modes)
    sigma = _sigma(cfg, sig, ggrid, manifest)
    w = GaussianWindow(sigma)
    grid = fct_grid(sig, w, ggrid, 0, threads=cfg.threads)
    write_grid(out / "fct.tfgd", grid)
    manifest.update(sigma=sigma, r0=ggrid.r0, gamma_bins=ggrid.l_bins,
                    boundary_band_s=boundary_band(w) * cfg.boundary_trim / 3.0)
    return ["fct.tfgd"]


def cmd_squeeze(cfg, out: Path, manifest: dict) -> list[str]:
    sig, modes = _load_signal(cfg)
    s = _squeezed(cfg, sig, modes, manifest)
    write_grid(out / "squeezed.tfgd", s, squeezed=True)
    write_tfr_csv(out / "tfr.csv", project_tfr(s))
    return ["squeezed.tfgd", "tfr.csv"]


def cmd_entropy(cfg, out: Path, manifest: dict) -> list[str]:
    if not cfg.sigma_auto:
        raise ConfigError("entropy needs --sigma-auto lo:hi")
    sig, modes = _load_signal(cfg)
    ggrid = _gamma_grid(cfg, sig, modes)
    sigma = _sigma(cfg, sig, ggrid, manifest)
    rows = sorted(manifest.pop("entropy_curve"))
    write_rows_csv(out / "entropy.csv", ("sigma_hz", "entropy"), rows)
    manifest.update(sigma_opt=sigma, r0=ggrid.r0, gamma_bins=ggrid.l_bins)
    return ["entropy.csv"]


def cmd_ridges(cfg, out: Path, manifest: dict) -> list[str]:
    sig, modes = (None, None) if cfg.grid else _load_signal(cfg)
    _, rs = _ridges(cfg, sig, modes, manifest)
    write_rows_csv(out / "ridges.csv", ("ridge_id", "eta_hz", "tau_s", "gamma_s_per_hz", "amplitude"), rs.rows())
    return ["ridges.csv"]


def cmd_recover(cfg, out: Path, manifest: dict) -> list[str]:
    sig, modes = _load_signal(cfg)
    s, rs = _ridges(cfg, sig, modes, manifest)
    w = GaussianWindow(s.sigma)
    rec = recover_modes(sig, rs, w, w.scaled(cfg.recover_sigma_scale), boundary_sd=cfg.boundary_trim)
    files = []
    for k, tm in enumerate(rec.time_modes):
        name = f"mode_{k}.csv"
        save_csv(tm, out / name)
        write_wav(out / f"mode_{k}.wav", tm)
        files += [name, f"mode_{k}.wav"]
    spec_rows = [
        (k, rec.eta[j], rec.spectra[k, j].real, rec.spectra[k, j].imag)
        for k in range(rec.k) for j in range(rec.eta.size)
    ]
    write_rows_csv(out / "spectra.csv", ("mode", "eta_hz", "re", "im"), spec_rows)
    prof = diagnostics_profile(rec.diagnostics)
    write_rows_csv(
        out / "diagnostics.csv", ("eta_hz", "inf_norm_inv", "cond2", "pseudo"),
        zip(prof["eta"], prof["inf_norm_inv"], prof["cond2"], prof["pseudo"]),
    )
    manifest.update(recovery_sigma=w.sigma * cfg.recover_sigma_scale, solved_columns=int(rec.band.sum()),
                    pseudo_columns=int(prof["pseudo"].sum()))
    return files + ["spectra.csv", "diagnostics.csv"]


def cmd_bounds(cfg, out: Path, manifest: dict) -> list[str]:
    if not cfg.signal:
        raise ConfigError("bounds needs a builtin --signal (ground truth is required)")
    sig, modes = _load_signal(cfg)
    s, rs = _ridges(cfg, sig, modes, manifest)
    rs = _match_ridges(rs, modes)
    w = GaussianWindow(s.sigma)
    wr = w.scaled(cfg.recover_sigma_scale)
    rec = recover_modes(sig, rs, w, wr, boundary_sd=cfg.boundary_trim)
    cols = _interior(rec.band)[::4]
    if cols.size == 0:
        raise NumericalFailure("empty recovery band")
    eta = rec.eta[cols]
    params = measure_class_params(modes, (eta[0], eta[-1]))
    g = fct_grids(sig, w, s.gamma, bins=s.bins[cols], threads=cfg.threads)
    field_ = reference_functions(g[0], g[1], g[2], w, cfg.epsilon_rel)
    res = theorem1_residuals(field_, modes, params.delta1, params.delta2)
    rows = []
    for k, r in enumerate(res):
        for i, j in enumerate(cols):
            sel = r.index[1] == i
            if not sel.any():
                continue
            n, jj, l = (ix[sel] for ix in r.index)
            p = params.with_eps0(1.0 / float(field_.det_e0_mag[n, jj, l].min()))
            bt, br = theorem1_rhs(p, lemma_quantities(p, modes, w, eta[i], k))
            om = omega0(params, modes, rs.tau[:, j], rs.gamma[:, j], wr, eta[i])
            rb = recovery_bounds(om, rec.diagnostics[j].b)
            rows.append(BoundRow(
                eta_hz=eta[i], mode=k, bound_t=float(bt), bound_r=float(br), omega0=float(om),
                recovery_bound=float(rb[k]), measured_t_err=float(r.t_err[sel].max()),
                measured_r_err=float(r.r_err[sel].max()),
                measured_recovery_err=float(abs(rec.spectra[k, j] - modes[k](eta[i]))),
            ).astuple())
    rows.sort(key=lambda row: (row[1], row[0]))
    write_rows_csv(out / "bounds.csv", BoundRow.FIELDS, rows)
    manifest.update(class_params=dict(eps1=params.eps1, eps2=params.eps2, delta1=params.delta1,
                                      delta2=params.delta2), bound_rows=len(rows))
    return ["bounds.csv"]


def cmd_verify(cfg, out: Path, manifest: dict) -> list[str]:
    report = run_suite(cfg.suite)
    (out / "verify.json").write_text(json.dumps(report, indent=2, sort_keys=True, default=float) + "\n")
    return ["verify.json"]


_HANDLERS = {
    "synth": cmd_synth, "fct": cmd_fct, "squeeze": cmd_squeeze, "entropy": cmd_entropy,
    "ridges": cmd_ridges, "recover": cmd_recover, "bounds": cmd_bounds, "verify": cmd_verify,
}


def _config_from(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_namespace(ns)
    if ns.from_manifest:
        data = json.loads(Path(ns.from_manifest).read_text())["config"]
        keep_out = cfg.out
        cfg = RunConfig(**{k: v for k, v in data.items() if k in RunConfig.__dataclass_fields__})
        if keep_out != ".":
            cfg.out = keep_out
    return cfg


def run(cfg: RunConfig) -> dict:
    """Execute one command; returns the manifest (also written to disk)."""
    _validate(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest: dict = {"config": cfg.echo(), "timings": {}}
    start = time.perf_counter()
    files = _HANDLERS[cfg.command](cfg, out, manifest)
    manifest["timings"]["total_s"] = time.perf_counter() - start
    manifest["outputs"] = files
    manifest["versions"] = {
        "tfgdd": __version__, "python": platform.python_version(),
        "numpy": np.__version__, "scipy": scipy.__version__,
    }
    (out / f"manifest_{cfg.command}.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n"
    )
    return manifest


def _json_default(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not serialisable: {type(v)}")


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = _config_from(ns)
        run(cfg)
    except (UnsupportedFormat, OSError) as exc:
        print(f"tfgdd: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericalFailure as exc:
        print(f"tfgdd: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, GridTooLarge, ValueError, KeyError) as exc:
        print(f"tfgdd: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
