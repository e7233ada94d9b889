"""Backend selection for the hot kernels.

The compiled extension is used when importable; set ``CPCCD_PURE_PYTHON=1`` to
force the numpy fallback.
"""
from __future__ import annotations

import os

from cpccd import _pykernels

BACKENDS = {"python": _pykernels}

try:
    from cpccd import _ckernels
except ImportError:  # extension not built
    _ckernels = None
else:
    BACKENDS["cython"] = _ckernels

if os.environ.get("CPCCD_PURE_PYTHON", "") not in ("", "0") or _ckernels is None:
    BACKEND = "python"
else:
    BACKEND = "cython"

_impl = BACKENDS[BACKEND]


def get(name: str | None = None):
    """Return the kernel module for ``name`` (default: the active backend)."""
    if name is None:
        return _impl
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} not available; have {sorted(BACKENDS)}") from None
