"""Kernel selection: the compiled extension when importable, numpy otherwise.

Set ``KLEINDIM_PURE_PYTHON=1`` to force the fallback.
"""

import logging
import os

from . import _fallback

log = logging.getLogger(__name__)

BACKEND = "python"
kernels = _fallback

if not os.environ.get("KLEINDIM_PURE_PYTHON"):
    try:
        from . import _kernels as kernels  # noqa: F811

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        log.debug("compiled kernels unavailable, using numpy fallback")

enumerate_free = kernels.enumerate_free
expand_level = kernels.expand_level
min_width = kernels.min_width
diameter = kernels.diameter
greedy_select = kernels.greedy_select
convex_hull = kernels.convex_hull


def get(name: str):
    """Return a kernel module by name (``"cython"`` or ``"python"``)."""
    if name == "python":
        return _fallback
    from . import _kernels

    return _kernels
