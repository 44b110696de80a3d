"""Backend selection for the batch classification core.

``_speed`` is the optional Cython extension; when it is missing (or the
EMTK_FORCE_PURE environment variable is set) the package falls back to the
pure-Python engine in :mod:`emtk._kernel.fallback`, which computes the same
predictions through the public feature/predict operations.
"""

from __future__ import annotations

import os

try:
    from . import _speed  # type: ignore[attr-defined]
except ImportError:  # pragma: no cover - depends on how the wheel was built
    _speed = None

HAVE_COMPILED = _speed is not None


def compiled_available() -> bool:
    return HAVE_COMPILED and not os.environ.get("EMTK_FORCE_PURE")
