"""Hot kernels: compiled extension when built, numpy fallback otherwise.

Set ``HFUJITA_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
if os.environ.get("HFUJITA_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
else:
    _impl = _pykernels

segmented_product = _impl.segmented_product
bilinear_locate = _impl.bilinear_locate

__all__ = ["BACKEND", "segmented_product", "bilinear_locate", "_pykernels"]
