"""Hot moment kernels with a compiled backend and a numpy fallback.

The compiled extension is used when it was built; set ``MFCRL_PURE_PYTHON=1``
to force the numpy path. ``BACKEND`` names the active one.
"""

import os

from . import _py

if os.environ.get("MFCRL_PURE_PYTHON"):
    _ext = None
else:
    try:
        from . import _ext
    except ImportError:
        _ext = None

if _ext is not None:
    BACKEND = "cython"
    batched_moments = _ext.batched_moments
    lions_weights = _ext.lions_weights
else:
    BACKEND = "numpy"
    batched_moments = _py.batched_moments
    lions_weights = _py.lions_weights

monomials = _py.monomials
d1_d2 = _py.d1_d2

__all__ = ["BACKEND", "batched_moments", "lions_weights", "monomials", "d1_d2"]
