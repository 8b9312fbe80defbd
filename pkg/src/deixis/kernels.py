"""Backend selection for the geometry hot loops.

The compiled extension is used when it imports; otherwise the pure-Python
module is loaded. Set ``DEIXIS_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

if os.environ.get("DEIXIS_PURE_PYTHON") == "1":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

ray_aabb = _impl.ray_aabb
ray_boxes = _impl.ray_boxes
count_visible = _impl.count_visible


def backends():
    """Available kernel modules keyed by name, compiled one first when built."""
    found = {}
    try:
        from . import _kernels  # type: ignore[attr-defined]

        found["cython"] = _kernels
    except ImportError:
        pass
    found["python"] = _kernels_py
    return found
