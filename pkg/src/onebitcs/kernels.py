"""Kernel dispatch: the compiled extension when importable, numpy otherwise.

Set ``ONEBIT_PURE_PYTHON=1`` to force the numpy implementations.
"""

import os

from . import _fallback

BACKEND = "numpy"
_impl = _fallback
if not os.environ.get("ONEBIT_PURE_PYTHON"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback

concat_symbols = _impl.concat_symbols
concat_filter = _impl.concat_filter
csr_survivors = _impl.csr_survivors
score_level = _impl.score_level
agreement_counts = _impl.agreement_counts


def implementations():
    """Both kernel sets, keyed by backend name (compiled one only if built)."""
    out = {"numpy": _fallback}
    try:
        from . import _kernels

        out["cython"] = _kernels
    except ImportError:
        pass
    return out
