"""Backend selector for the hot reduction kernel.

The compiled extension is preferred when importable; setting the
environment variable ``SKYVIS_PURE`` (to any non-empty value) forces the
numpy fallback.  Both backends are bit-identical by construction, so the
choice only affects speed.
"""
from __future__ import annotations

import os

if os.environ.get("SKYVIS_PURE"):
    from ._fallback import BACKEND_NAME, reduce_skyline
else:
    try:
        from ._core import BACKEND_NAME, reduce_skyline  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on build environment
        from ._fallback import BACKEND_NAME, reduce_skyline

__all__ = ["reduce_skyline", "BACKEND_NAME", "available_backends"]


def available_backends():
    """Map backend name to its reduce_skyline, for benchmarks and tests."""
    from . import _fallback
    out = {_fallback.BACKEND_NAME: _fallback.reduce_skyline}
    try:
        from . import _core  # type: ignore[attr-defined]
        out[_core.BACKEND_NAME] = _core.reduce_skyline
    except ImportError:  # pragma: no cover
        pass
    return out
