"""Renyi-entropy window selection on the paper-y benchmark.

Scans the Gaussian width on a reduced GDD grid and prints the entropy curve.

    python demos/window_selection.py
"""
from tfgdd.fct import GammaGrid, default_r0
from tfgdd.signals import builtin_signal
from tfgdd.window_opt import optimize_sigma


def main():
    sig, modes = builtin_signal("paper-y")
    gg = GammaGrid.for_signal(sig.n, default_r0(sig, modes), 129)
    best, curve = optimize_sigma(sig, gg, (5.0, 80.0), n_coarse=10, refine_steps=8)
    for s, e in curve.rows():
        mark = "  <- minimum" if s == best else ""
        print(f"sigma {s:7.2f} Hz  entropy {e:8.4f}{mark}")


if __name__ == "__main__":
    main()
