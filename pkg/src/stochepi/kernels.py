"""Backend selection for the hot loops.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``STOCHEPI_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the pure-Python implementation is used.  Both produce
identical results for identical inputs.
"""
import os

from . import _transmit_py

try:
    from . import _transmit as _compiled
except ImportError:  # extension not built
    _compiled = None

COMPILED_AVAILABLE = _compiled is not None

_BACKENDS = {"python": _transmit_py}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled


def _default_backend():
    if os.environ.get("STOCHEPI_PURE_PYTHON", "") not in ("", "0") or _compiled is None:
        return "python"
    return "compiled"


BACKEND = _default_backend()
transmit_attempts = _BACKENDS[BACKEND].transmit_attempts


def available_backends():
    return sorted(_BACKENDS)


def use_backend(name):
    """Switch the process-wide backend; returns the previous backend name."""
    global BACKEND, transmit_attempts
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} not available; have {available_backends()}")
    previous = BACKEND
    BACKEND = name
    transmit_attempts = _BACKENDS[name].transmit_attempts
    return previous
