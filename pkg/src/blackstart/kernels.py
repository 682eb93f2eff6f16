"""Backend selection for the integration kernels.

The compiled extension is used when it imports; otherwise the pure-Python
reference kernels are used. ``BLACKSTART_BACKEND=python`` forces the
fallback.
"""
import os

from blackstart import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("BLACKSTART_BACKEND", "").lower() != "python":
    try:
        from blackstart import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

integrate = _impl.integrate
demag_update = _impl.demag_update
magnetizing_current = _impl.magnetizing_current


def get_backend(name):
    """Return the kernel module for ``name`` ("python" or "cython")."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from blackstart import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
