"""Kernel dispatch: the compiled extension when built, numpy otherwise.

Set ``MATK_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

try:
    if os.environ.get("MATK_PURE_PYTHON"):
        raise ImportError("pure-python kernels requested")
    from . import _kernels as _impl

    COMPILED = True
except ImportError:
    _impl = _pykernels
    COMPILED = False

diffuse_fill = _impl.diffuse_fill
smooth_masked = _impl.smooth_masked
positive_rank_sum = _impl.positive_rank_sum
