"""Hot kernels with a compiled backend and a numpy fallback.

The compiled extension is used when it imports; setting the environment
variable ``PRETHERMAL_PURE_PYTHON=1`` forces the fallback. Both backends
expose ``lindblad_apply``, ``integrate_dense`` and ``integrate_lindblad``.
"""
import os

from . import _fallback

try:
    if os.environ.get("PRETHERMAL_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python backend requested")
    from . import _kernels as _impl
    BACKEND = "compiled"
except ImportError:
    _impl = _fallback
    BACKEND = "python"

lindblad_apply = _impl.lindblad_apply
integrate_dense = _impl.integrate_dense
integrate_lindblad = _impl.integrate_lindblad

STATUS_OK = 0
STATUS_MAX_STEPS = 1
STATUS_UNDERFLOW = 2


def backends():
    """Return the available backend modules keyed by name."""
    found = {"python": _fallback}
    try:
        from . import _kernels
        found["compiled"] = _kernels
    except ImportError:
        pass
    return found


__all__ = [
    "BACKEND",
    "backends",
    "lindblad_apply",
    "integrate_dense",
    "integrate_lindblad",
]
