"""Dense numeric substrate: FFTs, windowing, convolution, pooling, resampling.

All functions are pure and operate on numpy arrays in channel-first layout
([C, H, W] feature maps, [C_out, C_in, kH, kW] kernels).  Transform
conventions: the forward 2D FFT is unnormalized, the inverse carries the
1/(H*W) factor, so real(ifft2(fft2(q) * fft2(k))) is exactly the circular
convolution of q and k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

_PAD_MODES = {"zero": kernels.numpy_kernels.MODE_ZERO, "replicate": kernels.numpy_kernels.MODE_REPLICATE}


def fft2(x: np.ndarray) -> np.ndarray:
    """Per-channel 2D DFT over the trailing two axes (any leading axes)."""
    if x.ndim < 2:
        raise ValueError(f"fft2 needs at least 2 axes, got shape {x.shape}")
    return np.fft.fft2(x, axes=(-2, -1))


def ifft2(x: np.ndarray) -> np.ndarray:
    """Inverse of :func:`fft2`; carries the 1/(H*W) normalization."""
    if x.ndim < 2:
        raise ValueError(f"ifft2 needs at least 2 axes, got shape {x.shape}")
    return np.fft.ifft2(x, axes=(-2, -1))


def complex_hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Entrywise complex product; shapes must match exactly.

    Assembled from real/imaginary parts: numpy's fused vector path rounds
    differently from the scalar product, and entry i of the result must
    equal a[i]*b[i] bit for bit.
    """
    if a.shape != b.shape:
        raise ValueError(f"hadamard shape mismatch: {a.shape} vs {b.shape}")
    ar, ai = np.real(a), np.imag(a)
    br, bi = np.real(b), np.imag(b)
    return (ar * br - ai * bi) + 1j * (ar * bi + ai * br)


@dataclass
class WindowGrid:
    """Row-major tiling of a feature map into fixed windows.

    ``windows`` has shape [num_windows, C, wh, ww]; ``pad`` records the
    zero fill added on the bottom/right so the merge can strip it.
    """

    windows: np.ndarray
    origin_shape: tuple[int, int, int]
    window: tuple[int, int]
    pad: tuple[int, int]


def window_partition(x: np.ndarray, wh: int, ww: int) -> WindowGrid:
    if wh < 1 or ww < 1:
        raise ValueError(f"window must be >= 1, got {(wh, ww)}")
    c, h, w = x.shape
    ph = (-h) % wh
    pw = (-w) % ww
    if ph or pw:
        x = np.pad(x, ((0, 0), (0, ph), (0, pw)))
    nh, nw = (h + ph) // wh, (w + pw) // ww
    tiles = (
        x.reshape(c, nh, wh, nw, ww)
        .transpose(1, 3, 0, 2, 4)
        .reshape(nh * nw, c, wh, ww)
    )
    return WindowGrid(np.ascontiguousarray(tiles), (c, h, w), (wh, ww), (ph, pw))


def window_merge(grid: WindowGrid) -> np.ndarray:
    c, h, w = grid.origin_shape
    wh, ww = grid.window
    ph, pw = grid.pad
    nh, nw = (h + ph) // wh, (w + pw) // ww
    if grid.windows.shape != (nh * nw, c, wh, ww):
        raise ValueError(
            f"inconsistent window grid: windows {grid.windows.shape}, "
            f"expected {(nh * nw, c, wh, ww)}"
        )
    full = (
        grid.windows.reshape(nh, nw, c, wh, ww)
        .transpose(2, 0, 3, 1, 4)
        .reshape(c, h + ph, w + pw)
    )
    return np.ascontiguousarray(full[:, :h, :w])


def _check_conv(x, k, padding):
    if x.ndim != 3 or k.ndim != 4:
        raise ValueError(f"conv2d expects [C,H,W] and [Co,Ci,kh,kw], got {x.shape}, {k.shape}")
    if k.shape[1] != x.shape[0]:
        raise ValueError(f"channel mismatch: input {x.shape[0]}, kernel expects {k.shape[1]}")
    if k.shape[2] % 2 == 0 or k.shape[3] % 2 == 0:
        raise ValueError(f"kernel extents must be odd, got {k.shape[2:]}")
    if padding not in _PAD_MODES:
        raise ValueError(f"padding must be one of {sorted(_PAD_MODES)}, got {padding!r}")


def conv2d(x: np.ndarray, k: np.ndarray, stride: int = 1, padding: str = "zero") -> np.ndarray:
    """Same-padded cross-correlation; output spatial size is ceil(in/stride)."""
    _check_conv(x, k, padding)
    dt = np.result_type(x, k)
    return kernels.conv2d_fwd(x.astype(dt, copy=False), k.astype(dt, copy=False), stride, _PAD_MODES[padding])


def conv2d_vjp_k(x, g, stride, padding, kh, kw):
    dt = np.result_type(x, g)
    return kernels.conv2d_vjp_k(x.astype(dt, copy=False), g.astype(dt, copy=False), stride, _PAD_MODES[padding], kh, kw)


def conv2d_vjp_x(g, k, stride, padding, h, w):
    dt = np.result_type(g, k)
    return kernels.conv2d_vjp_x(g.astype(dt, copy=False), k.astype(dt, copy=False), stride, _PAD_MODES[padding], h, w)


def pool2(x: np.ndarray, kind: str) -> np.ndarray:
    """2x2/stride-2 pooling with replicated odd edges; halves each extent (ceil)."""
    if kind == "avg":
        return kernels.pool2_avg_fwd(x)
    if kind == "max":
        return kernels.pool2_max_fwd(x)[0]
    raise ValueError(f"pool kind must be max or avg, got {kind!r}")


def pool2_max_with_arg(x: np.ndarray):
    return kernels.pool2_max_fwd(x)


def pool2_avg_vjp(g, h, w):
    return kernels.pool2_avg_vjp(g, h, w)


def pool2_max_vjp(g, arg, h, w):
    return kernels.pool2_max_vjp(g, arg, h, w)


def _check_upsample_target(h, w, target):
    th, tw = target
    if th not in (2 * h, 2 * h - 1) or tw not in (2 * w, 2 * w - 1):
        raise ValueError(f"upsample2 target {target} incompatible with input {(h, w)}")


def upsample2(x: np.ndarray, target: tuple[int, int]) -> np.ndarray:
    """Nearest-neighbor 2x upsampling cropped to ``target`` (2n or 2n-1)."""
    c, h, w = x.shape
    _check_upsample_target(h, w, target)
    big = np.repeat(np.repeat(x, 2, axis=1), 2, axis=2)
    return np.ascontiguousarray(big[:, : target[0], : target[1]])


def upsample2_vjp(g, h, w):
    c = g.shape[0]
    full = np.zeros((c, 2 * h, 2 * w), dtype=g.dtype)
    full[:, : g.shape[1], : g.shape[2]] = g
    return full.reshape(c, h, 2, w, 2).sum(axis=(2, 4))


def softmax(x: np.ndarray, axis: int) -> np.ndarray:
    """Max-shifted exponential normalization along ``axis``."""
    m = np.max(x, axis=axis, keepdims=True)
    e = np.exp(x - m)
    return e / np.sum(e, axis=axis, keepdims=True)
