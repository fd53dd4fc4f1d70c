"""Kernel dispatch: the compiled extension when available, numpy otherwise.

Set ``CATM_PURE_PYTHON=1`` to force the numpy implementation.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("CATM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

transfer_product = _impl.transfer_product
cn_sweep = _impl.cn_sweep
block_apply = _impl.block_apply
