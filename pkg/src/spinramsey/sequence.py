"""Pulse-sequence engine: declarative pulse/delay steps evolved step by step.

This is the general (and slower) route through the model; the closed-form
fringe in :mod:`spinramsey.model` must agree with it for the standard
two-pulse sequence on |+2>, which the test suite enforces.  It also covers
what the closed form cannot: arbitrary initial states, extra pulses such
as a spin echo, and ensemble averaging over resonance-frequency spread.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import DetuningModel, FringeScan, phase_sign
from .rotation import M_VALUES, SpinState, populations, small_d_batch, tilted_rotation

__all__ = [
    "PulseSpec",
    "DelaySpec",
    "SequenceSpec",
    "ramsey_sequence",
    "spin_echo_sequence",
    "sequence_evolve",
    "fringe_scan",
    "populations_vs_phase",
    "ensemble_average",
]


@dataclass(frozen=True)
class PulseSpec:
    """One RF pulse: nominal rotation angle, optionally scaled by detuning.

    With both ``f_khz`` and ``detuning`` set, the effective angle is
    ``angle * eta(f)``; otherwise the pulse is ideal and rotates by exactly
    ``angle``.  ``axis_phase`` is the azimuth of the rotation axis about
    the field axis.
    """

    angle: float
    f_khz: float | None = None
    detuning: DetuningModel | None = None
    axis_phase: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.angle) or not math.isfinite(self.axis_phase):
            raise ValueError("pulse angle and axis_phase must be finite")
        if self.f_khz is not None and not math.isfinite(self.f_khz):
            raise ValueError("pulse frequency must be finite")


@dataclass(frozen=True)
class DelaySpec:
    """Free-precession interval of ``t_us`` microseconds plus a free phase."""

    t_us: float
    phi: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.t_us) or self.t_us < 0.0:
            raise ValueError("delay duration must be finite and non-negative")
        if not math.isfinite(self.phi):
            raise ValueError("delay phase must be finite")


@dataclass(frozen=True)
class SequenceSpec:
    """Ordered pulse/delay steps with an initial state and phase context.

    ``f_khz`` and ``f0_khz`` fix the base frequency entering every delay
    phase (2*pi*(f +/- f0)*T); when either is None the delays contribute
    only their free phase (plus any offsets applied during evaluation).
    """

    steps: tuple
    initial_state: SpinState
    f_khz: float | None = None
    f0_khz: float | None = None
    convention: str = "sum"

    def __post_init__(self):
        steps = tuple(self.steps)
        if not steps:
            raise ValueError("sequence must contain at least one step")
        for i, step in enumerate(steps):
            if not isinstance(step, (PulseSpec, DelaySpec)):
                raise ValueError(f"step {i} is not a PulseSpec or DelaySpec: {step!r}")
        phase_sign(self.convention)
        object.__setattr__(self, "steps", steps)

    def n_delays(self) -> int:
        return sum(isinstance(s, DelaySpec) for s in self.steps)


def ramsey_sequence(f_khz: float, f0_khz: float, t_us: float, delta_khz: float,
                    phi: float = 0.0, initial: SpinState | None = None,
                    convention: str = "sum") -> SequenceSpec:
    """Standard two-pulse sequence: pi/2, delay of t_us, pi/2."""
    detuning = DetuningModel(f0_khz, delta_khz)
    pulse = PulseSpec(np.pi / 2.0, f_khz=f_khz, detuning=detuning)
    return SequenceSpec(
        steps=(pulse, DelaySpec(t_us, phi), pulse),
        initial_state=initial if initial is not None else SpinState.from_level("+2"),
        f_khz=f_khz,
        f0_khz=f0_khz,
        convention=convention,
    )


def spin_echo_sequence(f_khz: float, f0_khz: float, t_us: float,
                       delta_khz: float | None = None, phi: float = 0.0,
                       initial: SpinState | None = None,
                       convention: str = "sum") -> SequenceSpec:
    """Echo sequence pi/2, delay, pi, delay, pi/2 with equal half-delays.

    With ``delta_khz`` set the pulses respond to detuning; by default they
    are ideal, which isolates the delay-phase refocusing that the echo
    provides against static resonance offsets.
    """
    detuning = DetuningModel(f0_khz, delta_khz) if delta_khz is not None else None
    f_for_pulse = f_khz if detuning is not None else None
    half = PulseSpec(np.pi / 2.0, f_khz=f_for_pulse, detuning=detuning)
    flip = PulseSpec(np.pi, f_khz=f_for_pulse, detuning=detuning)
    return SequenceSpec(
        steps=(half, DelaySpec(t_us, phi), flip, DelaySpec(t_us, phi), half),
        initial_state=initial if initial is not None else SpinState.from_level("+2"),
        f_khz=f_khz,
        f0_khz=f0_khz,
        convention=convention,
    )


def _delay_phase(seq: SequenceSpec, step: DelaySpec, offset_khz: float) -> float:
    sign = phase_sign(seq.convention)
    base = 0.0
    if seq.f_khz is not None and seq.f0_khz is not None:
        base = seq.f_khz + sign * seq.f0_khz
    return 2.0 * np.pi * (base + sign * offset_khz) * (step.t_us * 1e-3) + step.phi


def sequence_evolve(seq: SequenceSpec, f0_offset_khz: float = 0.0,
                    delay_offsets_khz=None) -> SpinState:
    """Evolve the initial state through the sequence, left to right.

    ``f0_offset_khz`` shifts the resonance seen by every step (pulse
    envelopes and delay phases alike); ``delay_offsets_khz`` adds one extra
    shift per delay, modelling fluctuations between intervals.
    """
    if delay_offsets_khz is not None and len(delay_offsets_khz) != seq.n_delays():
        raise ValueError("need one delay offset per delay step")
    amp = seq.initial_state.amplitudes
    delay_idx = 0
    for step in seq.steps:
        if isinstance(step, PulseSpec):
            beta = step.angle
            if step.detuning is not None and step.f_khz is not None:
                shifted = DetuningModel(step.detuning.f0_khz + f0_offset_khz,
                                        step.detuning.delta_khz)
                beta = step.angle * shifted.envelope(step.f_khz)
            amp = tilted_rotation(beta, step.axis_phase) @ amp
        else:
            offset = f0_offset_khz
            if delay_offsets_khz is not None:
                offset += delay_offsets_khz[delay_idx]
            delay_idx += 1
            amp = np.exp(-1j * M_VALUES * _delay_phase(seq, step, offset)) * amp
    return SpinState(amp)


def fringe_scan(f_grid, f0: float, t_us: float, delta: float, phi: float = 0.0,
                initial: SpinState | None = None, convention: str = "sum") -> FringeScan:
    """Simulate the two-pulse fringe over a frequency grid for any input state.

    Vectorized over the grid but step-for-step identical to evolving
    ``ramsey_sequence`` at each frequency.
    """
    f = np.asarray(f_grid, dtype=float).reshape(-1)
    if f.size == 0:
        raise ValueError("frequency grid is empty")
    if np.any(np.diff(f) <= 0.0):
        raise ValueError("frequency grid must be strictly increasing")
    if initial is None:
        initial = SpinState.from_level("+2")
    sign = phase_sign(convention)
    eta = kernels.envelope(f, f0, delta)
    d = small_d_batch(0.5 * np.pi * eta)
    phase = 2.0 * np.pi * (f + sign * f0) * (t_us * 1e-3) + phi
    ph = np.exp(-1j * np.outer(phase, M_VALUES))
    v = d @ initial.amplitudes
    v = np.einsum("nij,nj->ni", d.astype(complex), ph * v)
    pops = np.abs(v) ** 2
    pops /= pops.sum(axis=1, keepdims=True)
    return FringeScan(f, pops, source="simulated", f0_khz=f0, t_us=t_us, delta_khz=delta)


def populations_vs_phase(phases, initial: SpinState | None = None, eta: float = 1.0) -> np.ndarray:
    """Two-pulse output populations versus delay phase at fixed envelope value.

    Pulses rotate by exactly (pi/2)*eta; the delay contributes only the
    given phase.  Returns one row of five populations per phase sample.
    """
    phases = np.asarray(phases, dtype=float).reshape(-1)
    if initial is None:
        initial = SpinState.from_level("+2")
    d = small_d_batch(0.5 * np.pi * float(eta)).astype(complex)
    ph = np.exp(-1j * np.outer(phases, M_VALUES))
    v = ph * (d @ initial.amplitudes)
    v = v @ d.T
    return np.abs(v) ** 2


def ensemble_average(seq: SequenceSpec, gradient_stddev_khz: float = 0.0,
                     fluctuation_stddev_khz: float = 0.0, n_samples: int = 1,
                     seed: int = 0) -> np.ndarray:
    """Mean output populations over random draws of the resonance frequency.

    Each sample draws one static offset (gradient across the cloud, normal
    with the given stddev) applied to the whole sequence, plus an
    independent offset per delay interval (field fluctuations).  The draw
    order is fixed, so results are deterministic for a given seed.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    if gradient_stddev_khz < 0.0 or fluctuation_stddev_khz < 0.0:
        raise ValueError("spread values must be non-negative")
    if gradient_stddev_khz == 0.0 and fluctuation_stddev_khz == 0.0:
        return populations(sequence_evolve(seq))
    rng = np.random.default_rng(seed)
    statics = rng.normal(0.0, gradient_stddev_khz, n_samples)
    n_delays = seq.n_delays()
    flucts = None
    if fluctuation_stddev_khz > 0.0 and n_delays > 0:
        flucts = rng.normal(0.0, fluctuation_stddev_khz, (n_samples, n_delays))
    total = np.zeros(len(M_VALUES))
    for i in range(n_samples):
        state = sequence_evolve(seq, f0_offset_khz=statics[i],
                                delay_offsets_khz=None if flucts is None else flucts[i])
        total += populations(state)
    return total / n_samples
