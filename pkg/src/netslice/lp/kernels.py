"""Selects the simplex hot-loop kernels at import time.

The compiled extension is preferred; the pure numpy twin is used when the
extension is missing or ``NETSLICE_PURE=1`` is set.  ``USING_COMPILED``
reports which one is active.
"""

from __future__ import annotations

import os

if os.environ.get("NETSLICE_PURE"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _speedups as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

USING_COMPILED: bool = bool(getattr(_impl, "COMPILED", False))

reduced_costs = _impl.reduced_costs
ftran = _impl.ftran
eta_update = _impl.eta_update
ratio_test = _impl.ratio_test
