"""Hot kernels with a compiled core and a NumPy fallback.

The compiled extension is used when it imports; setting
``SOVLAB_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("SOVLAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "compiled"
    except ImportError:
        _impl = _pykernels

graded_swap_table = _impl.graded_swap_table
tower_system = _impl.tower_system
newton_batch = _impl.newton_batch

__all__ = ["BACKEND", "graded_swap_table", "tower_system", "newton_batch"]
