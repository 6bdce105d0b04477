"""Select the compiled double-double core, falling back to pure Python.

Set ``EKH_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _ddcore_py

BACKEND = "python"
core = _ddcore_py

if os.environ.get("EKH_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ddcore as _compiled
    except ImportError:  # extension not built
        pass
    else:
        core = _compiled
        BACKEND = "cython"

recurrence_coeffs = core.recurrence_coeffs
power_sum = core.power_sum
power_sum_many = core.power_sum_many
