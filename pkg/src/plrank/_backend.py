"""Select the kernel implementation at import time.

The compiled extension is preferred. Setting ``PLRANK_PURE_PYTHON=1`` forces
the numpy fallback, which is also used when the extension was not built.
"""

import os

if os.environ.get("PLRANK_PURE_PYTHON", "") not in ("", "0"):
    from . import _pure as kernels

    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        from . import _pure as kernels

        BACKEND = "python"
    else:
        BACKEND = "cython"

__all__ = ["BACKEND", "kernels"]
