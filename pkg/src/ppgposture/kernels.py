"""Backend selection for the hot kernels.

The compiled Cython module is preferred. Setting the environment variable
``PPGPOSTURE_PURE_PYTHON=1`` forces the numpy fallback, which is also used
automatically when the extension has not been built.
"""

import os

from . import _pykernels

try:
    if os.environ.get("PPGPOSTURE_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python backend requested")
    from . import _ckernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

parse_tokens = _impl.parse_tokens
select_onsets = _impl.select_onsets
smo_solve = _impl.smo_solve


def available_backends():
    """Return ``{name: module}`` for every importable kernel backend."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
