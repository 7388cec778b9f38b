"""NumPy implementations of the hot-path fringe kernels.

These are the reference semantics for the compiled extension in
``_fast.pyx``; both backends take float64 arrays plus scalars and return
float64 arrays.  Populations are ordered m_F = +2..-2.
"""

import numpy as np

# below this |pi*(f-f0)/delta| the sinc is evaluated by its series
SINC_CUTOFF = 1e-6 * np.pi


def envelope(f, f0, delta):
    """Detuning envelope eta(f) = delta*sin(pi*(f-f0)/delta) / (pi*(f-f0))."""
    x = np.pi * (np.asarray(f, dtype=float) - f0) / delta
    small = np.abs(x) < SINC_CUTOFF
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 - x * x / 6.0, np.sin(safe) / safe)


def _binomial(a, b):
    # populations of (sqrt(a)|up> + sqrt(b)|down>)^(x4) in the five-level basis
    a2 = a * a
    b2 = b * b
    out = np.empty(np.shape(a) + (5,))
    out[..., 0] = a2 * a2
    out[..., 1] = 4.0 * a2 * a * b
    out[..., 2] = 6.0 * a2 * b2
    out[..., 3] = 4.0 * a * b2 * b
    out[..., 4] = b2 * b2
    return out


def rabi_components(beta):
    """Populations of all five sublevels after rotating |+2> by angle beta."""
    beta = np.asarray(beta, dtype=float)
    half = 0.5 * beta
    a = np.cos(half) ** 2
    b = np.sin(half) ** 2
    return _binomial(a, b)


def fringe_components(f, f0, t_us, delta, phi, phase_sign=1.0):
    """Five-level Ramsey fringe populations over a frequency grid.

    Two nominal pi/2 pulses with detuning envelope of width ``delta``
    centred on ``f0``, separated by ``t_us`` microseconds of precession.
    ``phase_sign`` selects the accumulated-phase convention: +1 for
    2*pi*(f+f0)*T, -1 for 2*pi*(f-f0)*T; ``phi`` is an additional offset.
    Frequencies are in kHz, so one kHz*us product is 1e-3 phase cycles.
    """
    f = np.asarray(f, dtype=float)
    eta = envelope(f, f0, delta)
    beta = 0.5 * np.pi * eta
    phase = 2.0 * np.pi * (f + phase_sign * f0) * (t_us * 1e-3) + phi
    cb = np.cos(beta)
    c2 = np.cos(0.5 * phase) ** 2
    s2 = np.sin(0.5 * phase) ** 2
    a = cb * cb * c2 + s2
    b = (1.0 - cb * cb) * c2
    return _binomial(a, b)


def phase_components(phase, eta):
    """Fringe populations versus accumulated phase at a fixed envelope value."""
    phase = np.asarray(phase, dtype=float)
    beta = 0.5 * np.pi * float(eta)
    cb = np.cos(beta)
    c2 = np.cos(0.5 * phase) ** 2
    s2 = np.sin(0.5 * phase) ** 2
    a = cb * cb * c2 + s2
    b = (1.0 - cb * cb) * c2
    return _binomial(a, b)
