"""Closed-form model of the five-level Ramsey interferometer.

Units convention used on every interface in this package: frequencies in
kHz, times in microseconds, angles and phases in radians, magnetic field
in gauss.  The phase accumulated across a delay is

    Phi = 2*pi*(f + f0)*T * 1e-3 + phi        ("sum" convention, default)

with a "difference" variant using f - f0 available wherever the phase is
formed; both give the same fringe spacing 1/T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .rotation import LEVELS, level_index

__all__ = [
    "MU_B_OVER_H_KHZ_PER_GAUSS",
    "PHASE_CONVENTIONS",
    "LarmorParams",
    "DetuningModel",
    "FringeScan",
    "larmor_frequency",
    "detuning_envelope",
    "rabi_populations",
    "accumulated_phase",
    "fringe_closed_form",
    "with_population_noise",
]

# Bohr magneton over Planck constant, in kHz per gauss (CODATA 2018)
MU_B_OVER_H_KHZ_PER_GAUSS = 1399.62449361

PHASE_CONVENTIONS = ("sum", "difference")

# row-sum slack for population tables
_SIMULATED_SUM_TOL = 1e-10
_MEASURED_SUM_TOL = 2e-2


def phase_sign(convention: str) -> float:
    if convention not in PHASE_CONVENTIONS:
        raise ValueError(f"unknown phase convention {convention!r}; expected one of {PHASE_CONVENTIONS}")
    return 1.0 if convention == "sum" else -1.0


@dataclass(frozen=True)
class LarmorParams:
    """g-factor and bias field determining the precession frequency."""

    g_factor: float
    field_gauss: float

    def __post_init__(self):
        if not math.isfinite(self.g_factor) or not math.isfinite(self.field_gauss):
            raise ValueError("g_factor and field_gauss must be finite")
        if self.field_gauss < 0.0:
            raise ValueError("field_gauss must be non-negative")


def larmor_frequency(params: LarmorParams) -> float:
    """Precession frequency g_F * mu_B * B / h, in kHz."""
    return params.g_factor * MU_B_OVER_H_KHZ_PER_GAUSS * params.field_gauss


@dataclass(frozen=True)
class DetuningModel:
    """Sinc response of the pulse rotation angle to RF detuning.

    ``f0_khz`` is the resonant frequency, ``delta_khz`` the width: the
    envelope is 1 on resonance and first crosses zero at |f - f0| = delta.
    """

    f0_khz: float
    delta_khz: float

    def __post_init__(self):
        if not math.isfinite(self.f0_khz) or not math.isfinite(self.delta_khz):
            raise ValueError("f0_khz and delta_khz must be finite")
        if self.delta_khz <= 0.0:
            raise ValueError("delta_khz must be positive")

    def envelope(self, f):
        return detuning_envelope(f, self)


def detuning_envelope(f, model: DetuningModel):
    """Envelope eta(f) = delta*sin(pi*(f-f0)/delta) / (pi*(f-f0)).

    The removable singularity at f = f0 evaluates to 1.  Scalar in,
    scalar out; arrays are mapped elementwise.
    """
    arr = np.atleast_1d(np.asarray(f, dtype=float))
    out = kernels.envelope(arr, model.f0_khz, model.delta_khz)
    return float(out[0]) if np.isscalar(f) or np.ndim(f) == 0 else out


def rabi_populations(omega_rad_per_s: float, t_s):
    """Populations after a resonant pulse of angular frequency omega and width t.

    SI units (rad/s and seconds); the rotation angle is beta = omega * t.
    ``t_s`` may be a scalar or an array of pulse widths; the result has one
    row of five populations per width.
    """
    t = np.asarray(t_s, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("pulse width must be non-negative")
    beta = np.atleast_1d(omega_rad_per_s * t)
    out = kernels.rabi_components(beta)
    return out[0] if t.ndim == 0 else out


def accumulated_phase(f, f0: float, t_us: float, phi: float = 0.0, convention: str = "sum"):
    """Phase accumulated across a delay of t_us at drive frequency f (kHz)."""
    sign = phase_sign(convention)
    return 2.0 * np.pi * (np.asarray(f, dtype=float) + sign * f0) * (t_us * 1e-3) + phi


def fringe_closed_form(f, f0: float, t_us: float, delta: float, phi: float = 0.0,
                       convention: str = "sum"):
    """Closed-form fringe populations for the two-pulse sequence on |+2>.

    Evaluates all five sublevel populations for nominal pi/2 pulses with
    detuning envelope (f0, delta), delay t_us and phase offset phi.  Equals
    the step-by-step sequence evolution of pulse-delay-pulse on |+2>.
    Scalar ``f`` gives a shape (5,) vector, an array gives (n, 5).
    """
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    if t_us < 0.0:
        raise ValueError("t_us must be non-negative")
    sign = phase_sign(convention)
    arr = np.atleast_1d(np.asarray(f, dtype=float))
    out = kernels.fringe_components(arr, f0, t_us, delta, phi, sign)
    return out[0] if np.ndim(f) == 0 else out


@dataclass(frozen=True)
class FringeScan:
    """Populations of all five sublevels on a frequency grid.

    ``populations`` has one row per frequency, columns ordered m_F = +2..-2;
    ``stddev`` (same shape) holds an optional replicate spread.  Row sums
    must be 1, with slack 2e-2 for measured data and 1e-10 for simulated.
    """

    f_khz: np.ndarray
    populations: np.ndarray
    stddev: np.ndarray | None = None
    source: str = "simulated"
    f0_khz: float | None = None
    t_us: float | None = None
    delta_khz: float | None = None

    def __post_init__(self):
        f = np.array(self.f_khz, dtype=float).reshape(-1)
        p = np.array(self.populations, dtype=float)
        if p.shape != (f.size, len(LEVELS)):
            raise ValueError(f"populations shape {p.shape} does not match {(f.size, len(LEVELS))}")
        if f.size == 0:
            raise ValueError("scan must contain at least one frequency")
        if not np.all(np.isfinite(f)) or not np.all(np.isfinite(p)):
            raise ValueError("scan values must be finite")
        if np.any(np.diff(f) <= 0.0):
            raise ValueError("frequency grid must be strictly increasing")
        if np.any(p < -1e-12) or np.any(p > 1.0 + 1e-9):
            raise ValueError("populations must lie in [0, 1]")
        tol = _MEASURED_SUM_TOL if self.source == "measured" else _SIMULATED_SUM_TOL
        sums = p.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > tol):
            worst = float(np.max(np.abs(sums - 1.0)))
            raise ValueError(f"population rows must sum to 1 within {tol} (worst deviation {worst:.3g})")
        s = self.stddev
        if s is not None:
            s = np.array(s, dtype=float)
            if s.shape != p.shape:
                raise ValueError("stddev shape must match populations")
            if np.any(s < 0.0) or not np.all(np.isfinite(s)):
                raise ValueError("stddev must be finite and non-negative")
            s.flags.writeable = False
        for a in (f, p):
            a.flags.writeable = False
        object.__setattr__(self, "f_khz", f)
        object.__setattr__(self, "populations", p)
        object.__setattr__(self, "stddev", s)

    def __len__(self) -> int:
        return self.f_khz.size

    def component(self, level: str | int) -> np.ndarray:
        """Population column of one sublevel."""
        return self.populations[:, level_index(level)]


def with_population_noise(scan: FringeScan, sigma: float, seed: int) -> FringeScan:
    """Add gaussian noise of scale sigma to every population, clip at zero
    and renormalize each row, mimicking noisy relative-population readout."""
    if sigma < 0.0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0.0:
        return scan
    rng = np.random.default_rng(seed)
    noisy = scan.populations + rng.normal(0.0, sigma, scan.populations.shape)
    noisy = np.clip(noisy, 0.0, None)
    noisy /= noisy.sum(axis=1, keepdims=True)
    return FringeScan(
        scan.f_khz, noisy, stddev=scan.stddev, source="measured",
        f0_khz=scan.f0_khz, t_us=scan.t_us, delta_khz=scan.delta_khz,
    )
