"""Select the compiled kernel extension or the NumPy fallback at import time.

Set ATVGARCH_BACKEND=python or =cython to force a choice; the default tries
the compiled extension first and falls back silently.
"""

from __future__ import annotations

import os

_choice = os.environ.get("ATVGARCH_BACKEND", "auto").lower()

if _choice not in ("auto", "python", "cython"):
    raise ImportError(f"ATVGARCH_BACKEND must be auto, python or cython, not {_choice!r}")

if _choice == "python":
    from . import _kernels_py as kernels
elif _choice == "cython":
    from . import _kernels as kernels  # type: ignore[no-redef]
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        from . import _kernels_py as kernels  # type: ignore[no-redef]

BACKEND = kernels.BACKEND_NAME

__all__ = ["kernels", "BACKEND"]
