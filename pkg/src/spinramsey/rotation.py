"""Exact rotation algebra for a spin-2 (five-level) system.

Amplitude vectors and matrices use a fixed basis ordering m_F = +2, +1, 0,
-1, -2: index 0 is m_F = +2 and index 4 is m_F = -2.  Rotations follow the
active convention, d(beta) = exp(-i beta Fy), so the reduced matrix built
here agrees entrywise with the matrix exponential of the generators.
All angles are in radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "DIM",
    "SPIN",
    "M_VALUES",
    "LEVELS",
    "Generators",
    "SpinState",
    "make_generators",
    "wigner_small_d",
    "wigner_D",
    "tilted_rotation",
    "matrix_exp",
    "apply",
    "populations",
]

SPIN = 2
DIM = 2 * SPIN + 1
M_VALUES = np.arange(SPIN, -SPIN - 1, -1)  # [2, 1, 0, -1, -2]
LEVELS = ("+2", "+1", "0", "-1", "-2")

_NORM_TOL = 1e-12
_HERMITIAN_TOL = 1e-10


class Generators(NamedTuple):
    """Spin-2 angular-momentum matrices in units of hbar."""

    fx: np.ndarray
    fy: np.ndarray
    fz: np.ndarray


def make_generators() -> Generators:
    """Build (Fx, Fy, Fz) from the ladder operators in the m_F = +2..-2 basis."""
    m = M_VALUES.astype(float)
    fz = np.diag(m).astype(complex)
    # <m+1|F+|m> = sqrt(F(F+1) - m(m+1)), on the superdiagonal in this ordering
    amp = np.sqrt(SPIN * (SPIN + 1) - m[1:] * (m[1:] + 1))
    fplus = np.zeros((DIM, DIM), dtype=complex)
    fplus[np.arange(DIM - 1), np.arange(1, DIM)] = amp
    fminus = fplus.conj().T
    fx = (fplus + fminus) / 2.0
    fy = (fplus - fminus) / 2.0j
    return Generators(fx, fy, fz)


def level_index(level: str | int) -> int:
    """Map a sublevel label ("+2" ... "-2") or m_F value to its vector index."""
    if isinstance(level, str):
        if level in LEVELS:
            return LEVELS.index(level)
        raise ValueError(f"unknown sublevel label {level!r}; expected one of {LEVELS}")
    m = int(level)
    if not -SPIN <= m <= SPIN:
        raise ValueError(f"m_F value {m} outside [-{SPIN}, {SPIN}]")
    return SPIN - m


@dataclass(frozen=True)
class SpinState:
    """Five complex probability amplitudes, ordered m_F = +2 ... -2.

    The squared amplitudes must sum to 1 (within 1e-12); use
    :meth:`normalized` to build a state from unnormalized amplitudes.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amp.size != DIM:
            raise ValueError(f"expected {DIM} amplitudes, got {amp.size}")
        if not np.all(np.isfinite(amp.real)) or not np.all(np.isfinite(amp.imag)):
            raise ValueError("amplitudes must be finite")
        norm_sq = float(np.vdot(amp, amp).real)
        if abs(norm_sq - 1.0) > _NORM_TOL:
            raise ValueError(f"squared norm {norm_sq!r} differs from 1 by more than {_NORM_TOL}")
        amp.flags.writeable = False
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def normalized(cls, amplitudes) -> "SpinState":
        amp = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = float(np.linalg.norm(amp))
        if norm == 0.0 or not math.isfinite(norm):
            raise ValueError("cannot normalize zero or non-finite amplitudes")
        return cls(amp / norm)

    @classmethod
    def from_level(cls, level: str | int) -> "SpinState":
        """Basis state with all population in one sublevel, e.g. "+1" or -2."""
        amp = np.zeros(DIM, dtype=complex)
        amp[level_index(level)] = 1.0
        return cls(amp)


def _small_d_terms(j: int) -> list[tuple[int, int, float, int, int]]:
    """Expansion of d^j entries in powers of cos(beta/2) and sin(beta/2).

    Each term is (row, col, coefficient, cos_power, sin_power); rows and
    columns run over m' and m in decreasing order.
    """
    fact = math.factorial
    terms = []
    for i, mp in enumerate(range(j, -j - 1, -1)):
        for k_col, m in enumerate(range(j, -j - 1, -1)):
            for k in range(max(0, m - mp), min(j + m, j - mp) + 1):
                coef = (
                    (-1) ** (k - m + mp)
                    * math.sqrt(fact(j + m) * fact(j - m) * fact(j + mp) * fact(j - mp))
                    / (fact(j + m - k) * fact(k) * fact(j - k - mp) * fact(k - m + mp))
                )
                terms.append((i, k_col, coef, 2 * j - 2 * k + m - mp, 2 * k - m + mp))
    return terms


_D_TERMS = _small_d_terms(SPIN)


def small_d_batch(beta) -> np.ndarray:
    """Reduced rotation matrices for an array of angles, shape (..., 5, 5)."""
    beta = np.asarray(beta, dtype=float)
    c = np.cos(beta / 2.0)
    s = np.sin(beta / 2.0)
    out = np.zeros(beta.shape + (DIM, DIM))
    for i, k, coef, cp, sp in _D_TERMS:
        out[..., i, k] += coef * c**cp * s**sp
    return out


def wigner_small_d(beta: float) -> np.ndarray:
    """Reduced rotation matrix d(beta) = exp(-i beta Fy) as a real 5x5 array."""
    beta = float(beta)
    if not math.isfinite(beta):
        raise ValueError("beta must be finite")
    return small_d_batch(beta)


def wigner_D(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Euler rotation exp(-i alpha Fz) exp(-i beta Fy) exp(-i gamma Fz).

    For beta = gamma = 0 this is the diagonal phase matrix with entries
    exp(-i m_F alpha), the rotation accumulated by Larmor precession.
    """
    if not all(math.isfinite(float(x)) for x in (alpha, beta, gamma)):
        raise ValueError("Euler angles must be finite")
    d = small_d_batch(float(beta)).astype(complex)
    row = np.exp(-1j * M_VALUES * float(alpha))
    col = np.exp(-1j * M_VALUES * float(gamma))
    return row[:, None] * d * col[None, :]


def tilted_rotation(beta: float, axis_phase: float = 0.0) -> np.ndarray:
    """Rotation by beta about an equatorial axis at azimuth axis_phase.

    axis_phase = 0 rotates about the same axis as d(beta); a nonzero value
    rotates that axis about the field (z) axis first.
    """
    if axis_phase == 0.0:
        return wigner_small_d(beta)
    return wigner_D(axis_phase, beta, -axis_phase)


def matrix_exp(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-i t H) for a hermitian matrix H, by spectral decomposition."""
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    t = float(t)
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    if float(np.max(np.abs(h - h.conj().T))) > _HERMITIAN_TOL:
        raise ValueError("matrix is not hermitian")
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * t * w)) @ v.conj().T


def apply(u: np.ndarray, state: SpinState) -> SpinState:
    """Apply a rotation matrix to a state; the norm is preserved."""
    return SpinState(np.asarray(u) @ state.amplitudes)


def populations(state: SpinState) -> np.ndarray:
    """Born-rule probabilities per sublevel, ordered m_F = +2..-2."""
    return np.abs(state.amplitudes) ** 2
