"""Kernel backend selection.

The compiled Cython backend is used when the extension was built; otherwise
the numpy fallback is loaded. Set ``MORPHFOREST_PURE_PYTHON=1`` to force the
fallback.
"""
import os

from . import _pykernels

try:
    if os.environ.get("MORPHFOREST_PURE_PYTHON"):
        raise ImportError("pure-python kernels requested")
    from . import _ckernels as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

segment_softmax = _impl.segment_softmax
choose = _impl.choose
closure_losses = _impl.closure_losses


def backends():
    """All importable backends as ``{name: module}``."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels
        found["cython"] = _ckernels
    except ImportError:
        pass
    return found
