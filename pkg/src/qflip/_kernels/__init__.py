"""Propagation kernel backends.

Two interchangeable implementations of the hot 2x2 propagation loops:
``_core`` (Cython) and ``_fallback`` (numpy).  The compiled backend is
preferred when importable; set the environment variable
``QFLIP_PURE_PYTHON=1`` to force the fallback.

Exported functions: ``step_unitary``, ``propagate_unitary``,
``propagate_lindblad``; ``BACKEND_NAME`` names the active backend.
"""

import os

from . import _fallback


def _load_compiled():
    try:
        from . import _core
    except ImportError:
        return None
    return _core


_compiled = _load_compiled()

if os.environ.get("QFLIP_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _fallback
elif _compiled is not None:
    _impl = _compiled
else:
    _impl = _fallback

BACKEND_NAME = _impl.BACKEND_NAME
step_unitary = _impl.step_unitary
propagate_unitary = _impl.propagate_unitary
propagate_lindblad = _impl.propagate_lindblad


def available_backends():
    """Names of the importable backends, compiled first when present."""
    names = []
    if _compiled is not None:
        names.append(_compiled.BACKEND_NAME)
    names.append(_fallback.BACKEND_NAME)
    return names


def get_backend(name):
    """Return a backend module by name ("compiled" or "fallback")."""
    if name == _fallback.BACKEND_NAME:
        return _fallback
    if _compiled is not None and name == _compiled.BACKEND_NAME:
        return _compiled
    raise ValueError("unknown or unavailable backend: %r" % (name,))
