"""Kernel selection.

The compiled extension is used when it imports; otherwise the pure-Python
fallback. Set ``SEMFORGE_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

OPEN = _kernels_py.OPEN
CLOSE = _kernels_py.CLOSE
TOKEN = _kernels_py.TOKEN

IMPLEMENTATIONS = {"python": _kernels_py}
if _compiled is not None:
    IMPLEMENTATIONS["cython"] = _compiled

if _compiled is not None and os.environ.get("SEMFORGE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    BACKEND = "cython"
else:
    BACKEND = "python"

tokenize = IMPLEMENTATIONS[BACKEND].tokenize
accumulate = IMPLEMENTATIONS[BACKEND].accumulate
