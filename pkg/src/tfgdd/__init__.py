"""Chirplet analysis on a time x frequency x group-delay-dispersion grid.

Frequency-domain chirplet transform (FCT), its time-reassigned synchrosqueezed
form (TSFCT), entropy-based window selection, 3-D ridge extraction, per-frequency
mode recovery and evaluation of the associated error bounds.
"""
__version__ = "0.1.0"

from .errors import GridTooLarge, NumericalFailure, UnsupportedFormat
from .signals import (
    LinearFDChirpSpec,
    ModeSpec,
    SampledSignal,
    Spectrum,
    builtin_signal,
    forward_transform,
    inverse_transform,
    synth_spectrum,
)
from .windows import GaussianWindow, kernel_C, moment_I, upsilon
from .fct import GammaGrid, TFGDDGrid, fct_grid, fct_grids, fct_point, default_r0
from .reassign import ReassignmentField, high_order_reference, reference_functions
from .tsfct import SqueezedGrid, TFRGrid, project_tfr, squeeze, tsfct
from .window_opt import EntropyConfig, optimize_sigma, renyi_entropy
from .ridges import RidgeSet, extract_ridges
from .fgsso import MixingMatrix, RecoveredModes, mixing_matrix, recover_modes
from .bounds import ClassParams, measure_class_params, omega0, recovery_bounds, theorem1_rhs

__all__ = [
    "__version__",
    "GridTooLarge", "NumericalFailure", "UnsupportedFormat",
    "LinearFDChirpSpec", "ModeSpec", "SampledSignal", "Spectrum", "builtin_signal",
    "forward_transform", "inverse_transform", "synth_spectrum",
    "GaussianWindow", "kernel_C", "moment_I", "upsilon",
    "GammaGrid", "TFGDDGrid", "fct_grid", "fct_grids", "fct_point", "default_r0",
    "ReassignmentField", "high_order_reference", "reference_functions",
    "SqueezedGrid", "TFRGrid", "project_tfr", "squeeze", "tsfct",
    "EntropyConfig", "optimize_sigma", "renyi_entropy",
    "RidgeSet", "extract_ridges",
    "MixingMatrix", "RecoveredModes", "mixing_matrix", "recover_modes",
    "ClassParams", "measure_class_params", "omega0", "recovery_bounds", "theorem1_rhs",
]
