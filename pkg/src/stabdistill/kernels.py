"""Select the tableau kernel backend at import time.

The compiled extension is used when it was built; otherwise the numpy
fallback is loaded.  Set ``STABDISTILL_BACKEND=python`` to force the
fallback.
"""

import os

BACKEND = "python"
if os.environ.get("STABDISTILL_BACKEND", "").lower() != "python":
    try:
        from ._kernels import measure, peek, rowmul  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:  # extension not built
        pass

if BACKEND == "python":
    from ._kernels_py import measure, peek, rowmul  # noqa: F811

from . import _kernels_py as python_backend

__all__ = ["BACKEND", "measure", "peek", "rowmul", "python_backend", "compiled_backend"]


def compiled_backend():
    """The compiled module, or None when it is unavailable."""
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        return None
    return _kernels
