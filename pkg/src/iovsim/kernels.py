"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it was built; otherwise the
pure-Python ``_pykernels`` module is. Setting ``IOVSIM_PURE_PYTHON=1`` forces
the fallback. Both backends give identical results.
"""
import os

if os.environ.get("IOVSIM_PURE_PYTHON"):
    from . import _pykernels as _impl
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        from . import _pykernels as _impl
        BACKEND = "python"

forward_slot = _impl.forward_slot
dijkstra = _impl.dijkstra

__all__ = ["BACKEND", "forward_slot", "dijkstra"]
