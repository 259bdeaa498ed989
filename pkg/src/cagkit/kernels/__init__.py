"""Hot-kernel backend selection.

Prefers the compiled extension (cagkit.kernels._native) and falls back to
the pure-Python module. CAGKIT_PURE_PYTHON=1 forces the fallback, which the
benchmark and the cross-backend tests use.
"""

from __future__ import annotations

import os

from cagkit.kernels import pure as _pure

BACKEND = "pure"
_impl = _pure

if os.environ.get("CAGKIT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from cagkit.kernels import _native as _impl  # type: ignore[no-redef]

        BACKEND = "native"
    except ImportError:
        pass

frame_mean_var_u8 = _impl.frame_mean_var_u8
frame_mean_var_u16 = _impl.frame_mean_var_u16
triangle_gram = _impl.triangle_gram


def backends():
    """Return {name: module} for every importable backend."""
    found = {"pure": _pure}
    try:
        from cagkit.kernels import _native

        found["native"] = _native
    except ImportError:
        pass
    return found
