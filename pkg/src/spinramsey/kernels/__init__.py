"""Hot-path closed-form kernels: compiled core with a NumPy fallback.

The compiled extension is used when it imports cleanly; set
``SPINRAMSEY_PURE=1`` to force the NumPy implementation.  ``BACKEND``
reports which one is active.
"""

import os

from . import pure

if os.environ.get("SPINRAMSEY_PURE", "0") not in ("", "0"):
    _impl = pure
    BACKEND = "python"
else:
    try:
        from . import _fast as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = pure
        BACKEND = "python"

envelope = _impl.envelope
rabi_components = _impl.rabi_components
fringe_components = _impl.fringe_components
phase_components = _impl.phase_components

__all__ = [
    "BACKEND",
    "envelope",
    "rabi_components",
    "fringe_components",
    "phase_components",
    "pure",
]
