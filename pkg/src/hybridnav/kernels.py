"""Backend selection for the hot loops.

The compiled strapdown loop is preferred; set ``HYBRIDNAV_PURE_PYTHON=1`` to
force the pure-Python implementation. The convolutions always use the numpy
im2col path, which rides on BLAS and beats the compiled loops (see
``benchmarks/bench_kernels.py``); the compiled versions stay importable for
comparison.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("HYBRIDNAV_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels

strapdown_step = _impl.strapdown_step
strapdown_run = _impl.strapdown_run
conv1d_forward = _pykernels.conv1d_forward
conv1d_backward = _pykernels.conv1d_backward


def available_backends():
    """Mapping of backend name to kernel module for every importable backend."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
