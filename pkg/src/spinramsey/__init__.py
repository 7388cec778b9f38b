"""Ramsey interferometry over the five Zeeman sublevels of a spin-2 gas.

Exact spin-2 rotation algebra, a closed-form fringe model with a general
pulse-sequence engine, and a least-squares fit and phase-sensitivity
pipeline for fringe scans.  Frequencies are in kHz and times in
microseconds everywhere.
"""

__version__ = "0.1.0"

from .fitting import (
    FitConfig,
    FitResult,
    HarmonicSpectrum,
    SensitivityReport,
    fit_fringe,
    harmonic_spectrum,
    neighbor_average,
    sensitivity,
)
from .kernels import BACKEND
from .model import (
    DetuningModel,
    FringeScan,
    LarmorParams,
    accumulated_phase,
    detuning_envelope,
    fringe_closed_form,
    larmor_frequency,
    rabi_populations,
    with_population_noise,
)
from .rotation import (
    Generators,
    SpinState,
    apply,
    make_generators,
    matrix_exp,
    populations,
    tilted_rotation,
    wigner_D,
    wigner_small_d,
)
from .sequence import (
    DelaySpec,
    PulseSpec,
    SequenceSpec,
    ensemble_average,
    fringe_scan,
    populations_vs_phase,
    ramsey_sequence,
    sequence_evolve,
    spin_echo_sequence,
)

__all__ = [
    "__version__",
    "BACKEND",
    "Generators",
    "SpinState",
    "apply",
    "make_generators",
    "matrix_exp",
    "populations",
    "tilted_rotation",
    "wigner_D",
    "wigner_small_d",
    "DetuningModel",
    "FringeScan",
    "LarmorParams",
    "accumulated_phase",
    "detuning_envelope",
    "fringe_closed_form",
    "larmor_frequency",
    "rabi_populations",
    "with_population_noise",
    "DelaySpec",
    "PulseSpec",
    "SequenceSpec",
    "ensemble_average",
    "fringe_scan",
    "populations_vs_phase",
    "ramsey_sequence",
    "sequence_evolve",
    "spin_echo_sequence",
    "FitConfig",
    "FitResult",
    "HarmonicSpectrum",
    "SensitivityReport",
    "fit_fringe",
    "harmonic_spectrum",
    "neighbor_average",
    "sensitivity",
]
