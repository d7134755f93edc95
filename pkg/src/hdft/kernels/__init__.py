"""Hot spatial kernels with two interchangeable lanes.

``numba_kernels`` carries ``@njit`` loop implementations; ``numpy_kernels``
is the vectorized pure-numpy fallback.  The active lane is chosen per call
from :func:`hdft.config.backend`, so flipping ``HDFT_BACKEND`` (or
``config.set_backend``) takes effect immediately.  Both lanes implement
identical padding and tie-breaking semantics; they may differ in the last
bits because accumulation order differs.
"""

from __future__ import annotations

from .. import config
from . import numpy_kernels

_numba_mod = None


def _lane():
    global _numba_mod
    if config.backend() == "numba":
        if _numba_mod is None:
            from . import numba_kernels

            _numba_mod = numba_kernels
        return _numba_mod
    return numpy_kernels


def conv2d_fwd(x, k, stride, mode):
    return _lane().conv2d_fwd(x, k, stride, mode)


def conv2d_vjp_k(x, g, stride, mode, kh, kw):
    return _lane().conv2d_vjp_k(x, g, stride, mode, kh, kw)


def conv2d_vjp_x(g, k, stride, mode, h, w):
    return _lane().conv2d_vjp_x(g, k, stride, mode, h, w)


def pool2_avg_fwd(x):
    return _lane().pool2_avg_fwd(x)


def pool2_avg_vjp(g, h, w):
    return _lane().pool2_avg_vjp(g, h, w)


def pool2_max_fwd(x):
    return _lane().pool2_max_fwd(x)


def pool2_max_vjp(g, arg, h, w):
    return _lane().pool2_max_vjp(g, arg, h, w)
