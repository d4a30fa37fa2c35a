"""Assignment kernel selection: compiled when available, else pure Python.

Set EDGETREE_PURE=1 to force the pure-Python kernel.
"""
import os

from . import _kernel_py

if os.environ.get("EDGETREE_PURE") == "1":
    _impl = _kernel_py
else:
    try:
        from . import _kernel as _impl
    except ImportError:
        _impl = _kernel_py

assign = _impl.assign
pure_assign = _kernel_py.assign
COMPILED = _impl is not _kernel_py
BACKEND = "cython" if COMPILED else "python"
