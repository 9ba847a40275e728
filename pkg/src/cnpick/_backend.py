"""Pick the compiled core when available, else the NumPy fallback.

Set ``CNPICK_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _core_py

if os.environ.get("CNPICK_PURE_PYTHON", "") not in ("", "0"):
    core = _core_py
    NAME = "python"
else:
    try:
        from . import _core as core
    except ImportError:
        core = _core_py
        NAME = "python"
    else:
        NAME = "cython"

series_sums = core.series_sums
pivoted_cholesky = core.pivoted_cholesky
moment_ratios = core.moment_ratios
