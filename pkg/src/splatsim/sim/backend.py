"""Kernel backend selection: compiled extension when available, numpy otherwise.

Set ``SPLATSIM_PURE_PYTHON=1`` to force the numpy fallback (used by the
benchmark and the cross-backend tests).
"""

from __future__ import annotations

import os

from . import kernels_py

_FORCE_PY = os.environ.get("SPLATSIM_PURE_PYTHON", "") == "1"

if not _FORCE_PY:
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None
else:
    _compiled = None

kernels = _compiled if _compiled is not None else kernels_py
BACKEND_NAME = "compiled" if _compiled is not None else "python"


def get_kernels(name: str | None = None):
    """Return a kernel module by name ('compiled' | 'python' | None=active)."""
    if name is None:
        return kernels
    if name == "python":
        return kernels_py
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not available in this build")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")
