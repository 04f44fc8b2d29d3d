"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy versions
are used. Set ``COUPLED_LOGISTIC_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

_force_py = os.environ.get("COUPLED_LOGISTIC_PURE_PYTHON", "").lower() in {"1", "true", "yes"}

if _force_py:
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

neg_lap_1d = _impl.neg_lap_1d
neg_lap_2d = _impl.neg_lap_2d
power_sums = _impl.power_sums
nonlinear_grad = _impl.nonlinear_grad
sturm_count = _impl.sturm_count

__all__ = [
    "BACKEND",
    "neg_lap_1d",
    "neg_lap_2d",
    "power_sums",
    "nonlinear_grad",
    "sturm_count",
]
