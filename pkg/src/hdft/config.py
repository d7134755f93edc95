"""Global runtime switches: scalar precision and kernel backend.

Everything in the library computes in one global float dtype.  float64 is
the default so numerical tests can run at tight tolerances; float32 is
available for benchmarks and faster training runs.

The hot spatial kernels (convolution, pooling) exist twice: a numba
``@njit`` loop lane and a vectorized pure-numpy lane.  ``HDFT_BACKEND``
(or ``set_backend``) selects one; the default is numpy, which profiles
faster on single-core hosts because its tensordot path rides BLAS
(``hdft bench --compare-backends`` measures both).
"""

from __future__ import annotations

import os

import numpy as np

_DTYPES = {"float32": np.float32, "float64": np.float64}
_COMPLEX = {"float32": np.complex64, "float64": np.complex128}

_dtype_name = os.environ.get("HDFT_DTYPE", "float64")
if _dtype_name not in _DTYPES:
    raise ValueError(f"HDFT_DTYPE must be float32 or float64, got {_dtype_name!r}")


def set_dtype(name: str) -> None:
    """Select the global scalar precision ("float32" or "float64")."""
    global _dtype_name
    if name not in _DTYPES:
        raise ValueError(f"unknown dtype {name!r}; use float32 or float64")
    _dtype_name = name


def dtype() -> np.dtype:
    return np.dtype(_DTYPES[_dtype_name])


def complex_dtype() -> np.dtype:
    return np.dtype(_COMPLEX[_dtype_name])


def dtype_name() -> str:
    return _dtype_name


def _default_backend() -> str:
    want = os.environ.get("HDFT_BACKEND", "")
    if want in ("numpy", "numba"):
        return want
    if want:
        raise ValueError(f"HDFT_BACKEND must be numpy or numba, got {want!r}")
    return "numpy"


_backend_name = _default_backend()


def set_backend(name: str) -> None:
    """Select the kernel lane ("numba" or "numpy")."""
    global _backend_name
    if name not in ("numpy", "numba"):
        raise ValueError(f"unknown backend {name!r}; use numpy or numba")
    if name == "numba":
        import numba  # noqa: F401  (raises if unavailable)
    _backend_name = name


def backend() -> str:
    return _backend_name
