"""Backend selection for the hot loops.

The compiled extension is used when it imports; set ``WORKALLOC_PURE_PYTHON=1``
to force the pure-Python twins (handy for debugging and benchmarking).
"""
import os

from . import _pykernels

if os.environ.get("WORKALLOC_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

transport_ssp = _impl.transport_ssp
build_tree = _impl.build_tree
tree_apply = _impl.tree_apply


def compiled_available():
    try:
        from . import _ckernels  # noqa: F401
    except ImportError:
        return False
    return True
