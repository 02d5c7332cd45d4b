"""Kernel dispatch: compiled extension when importable, numpy fallback otherwise.

Set ``SLGEO_PURE_PYTHON=1`` to force the fallback. ``SLGEO_THREADS`` caps the
thread count used by the compiled nearest-neighbour search.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if not os.environ.get("SLGEO_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels


def thread_count():
    """Thread cap from SLGEO_THREADS (default: all CPUs)."""
    val = os.environ.get("SLGEO_THREADS")
    if val:
        try:
            return max(1, int(val))
        except ValueError:
            pass
    return os.cpu_count() or 1


def nearest_distances(points, targets):
    """Distance and index of the nearest target for every point (brute force)."""
    return _impl.nearest_distances(points, targets, thread_count())


def quasilinear_stencil(F, nbr, arm, y, a):
    """Residual and Jacobian rows of the U(1)-invariant potential operator."""
    return _impl.quasilinear_stencil(F, nbr, arm, y, float(a))
