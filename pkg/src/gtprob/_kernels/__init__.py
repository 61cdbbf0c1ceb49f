"""Inner loops: the compiled extension when importable, numpy otherwise.

Set ``GTPROB_PURE=1`` to force the numpy versions.
"""
import os

from . import _fallback as fallback

if os.environ.get("GTPROB_PURE"):
    path_scan, grid_extremes = fallback.path_scan, fallback.grid_extremes
    BACKEND = "python"
else:
    try:
        from ._core import grid_extremes, path_scan
        BACKEND = "cython"
    except ImportError:
        path_scan, grid_extremes = fallback.path_scan, fallback.grid_extremes
        BACKEND = "python"

__all__ = ["BACKEND", "fallback", "grid_extremes", "path_scan"]
