"""Kernel backend selection: compiled extension if built, pure numpy otherwise.

Set ORTHOCOUNT_PURE=1 to force the pure backend (used by the parity tests and
the benchmark).
"""

import os

from . import _corepy

if os.environ.get("ORTHOCOUNT_PURE", "") == "1":
    _impl = _corepy
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _corepy

sl2z_ball = _impl.sl2z_ball
sl2z_cusp_cosets = _impl.sl2z_cusp_cosets
modular_reduce = _impl.modular_reduce


def backend_name() -> str:
    return _impl.BACKEND_NAME


def backends():
    """All available backends, for parity tests and benchmarks."""
    out = {"pure": _corepy}
    try:
        from . import _core

        out["compiled"] = _core
    except ImportError:
        pass
    return out
