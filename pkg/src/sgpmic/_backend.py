"""Select the compiled or the pure-Python kernel loops at import time.

Set ``SGPMIC_PURE_PYTHON=1`` to force the numpy fallback even when the
extension is built.
"""
import os

from . import _pykernels

if os.environ.get("SGPMIC_PURE_PYTHON", "") not in ("", "0"):
    impl = _pykernels
else:
    try:
        from . import _ckernels as impl
    except ImportError:  # extension not built
        impl = _pykernels

BACKEND = impl.NAME
