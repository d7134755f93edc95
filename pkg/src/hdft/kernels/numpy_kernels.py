"""Pure-numpy lane: stride-trick windows plus BLAS tensordot.

Semantics mirror the numba lane exactly: same-padding with zero or
replicate borders for convolution, 2x2/stride-2 pooling with replicated
odd edges, max ties broken to the first cell in row-major order.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

MODE_ZERO = 0
MODE_REPLICATE = 1

_PAD = {MODE_ZERO: "constant", MODE_REPLICATE: "edge"}


def _padded(x, ph, pw, mode):
    if ph == 0 and pw == 0:
        return x
    return np.pad(x, ((0, 0), (ph, ph), (pw, pw)), mode=_PAD[mode])


def conv2d_fwd(x, k, stride, mode):
    kh, kw = k.shape[2], k.shape[3]
    if kh == 1 and kw == 1:  # pointwise: plain channel mixing
        out = np.tensordot(k[:, :, 0, 0], x[:, ::stride, ::stride], axes=([1], [0]))
        return np.ascontiguousarray(out)
    ph, pw = kh // 2, kw // 2
    xp = _padded(x, ph, pw, mode)
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
    return np.tensordot(k, win, axes=([1, 2, 3], [0, 3, 4]))


def conv2d_vjp_k(x, g, stride, mode, kh, kw):
    if kh == 1 and kw == 1:
        dk = np.tensordot(g, x[:, ::stride, ::stride], axes=([1, 2], [1, 2]))
        return dk[:, :, None, None].copy()
    ph, pw = kh // 2, kw // 2
    xp = _padded(x, ph, pw, mode)
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
    return np.tensordot(g, win, axes=([1, 2], [1, 2]))


def _fold_borders(full, h, w):
    """Collapse out-of-range rows/cols onto the nearest valid pixel."""
    c = full.shape[0]
    rows = full.shape[1]
    fr = np.empty((c, h, full.shape[2]), dtype=full.dtype)
    lo = (rows - h) // 2 if rows > h else 0
    # generic asymmetric folding: rows [0, lo) -> row 0, [lo+h, rows) -> row h-1
    fr[:] = full[:, lo : lo + h, :]
    if lo:
        fr[:, 0, :] += full[:, :lo, :].sum(axis=1)
    if lo + h < rows:
        fr[:, h - 1, :] += full[:, lo + h :, :].sum(axis=1)
    cols = fr.shape[2]
    lo = (cols - w) // 2 if cols > w else 0
    out = np.empty((c, h, w), dtype=full.dtype)
    out[:] = fr[:, :, lo : lo + w]
    if lo:
        out[:, :, 0] += fr[:, :, :lo].sum(axis=2)
    if lo + w < cols:
        out[:, :, w - 1] += fr[:, :, lo + w :].sum(axis=2)
    return out


def conv2d_vjp_x(g, k, stride, mode, h, w):
    cout, ho, wo = g.shape
    cin, kh, kw = k.shape[1], k.shape[2], k.shape[3]
    if kh == 1 and kw == 1:
        dx = np.zeros((cin, h, w), dtype=g.dtype)
        dx[:, ::stride, ::stride] = np.tensordot(k[:, :, 0, 0], g, axes=([0], [0]))
        return dx
    ph, pw = kh // 2, kw // 2
    if stride == 1:
        gd = g
    else:
        gd = np.zeros((cout, (ho - 1) * stride + 1, (wo - 1) * stride + 1), dtype=g.dtype)
        gd[:, ::stride, ::stride] = g
    gdp = np.pad(gd, ((0, 0), (kh - 1, kh - 1), (kw - 1, kw - 1)))
    win = sliding_window_view(gdp, (kh, kw), axis=(1, 2))
    kflip = k[:, :, ::-1, ::-1]
    used = np.tensordot(kflip, win, axes=([0, 2, 3], [0, 3, 4]))
    hp, wp = h + 2 * ph, w + 2 * pw
    if used.shape[1] != hp or used.shape[2] != wp:
        dxp = np.zeros((cin, hp, wp), dtype=g.dtype)
        dxp[:, : used.shape[1], : used.shape[2]] = used
    else:
        dxp = used
    if mode == MODE_ZERO:
        return np.ascontiguousarray(dxp[:, ph : ph + h, pw : pw + w])
    return _fold_borders(dxp, h, w)


def _pad_even(x):
    c, h, w = x.shape
    return np.pad(x, ((0, 0), (0, h % 2), (0, w % 2)), mode="edge")


def pool2_avg_fwd(x):
    xp = _pad_even(x)
    c, h2, w2 = xp.shape
    return xp.reshape(c, h2 // 2, 2, w2 // 2, 2).mean(axis=(2, 4))


def _unpool_fold(full, h, w):
    dx = full[:, :h, :].copy()
    if full.shape[1] > h:
        dx[:, h - 1, :] += full[:, h, :]
    out = dx[:, :, :w].copy()
    if dx.shape[2] > w:
        out[:, :, w - 1] += dx[:, :, w]
    return out


def pool2_avg_vjp(g, h, w):
    c, ho, wo = g.shape
    full = np.broadcast_to((g * 0.25)[:, :, None, :, None], (c, ho, 2, wo, 2))
    full = full.reshape(c, 2 * ho, 2 * wo)
    return _unpool_fold(full, h, w)


def pool2_max_fwd(x):
    xp = _pad_even(x)
    c, h2, w2 = xp.shape
    cells = (
        xp.reshape(c, h2 // 2, 2, w2 // 2, 2)
        .transpose(0, 1, 3, 2, 4)
        .reshape(c, h2 // 2, w2 // 2, 4)
    )
    arg = cells.argmax(axis=-1).astype(np.int8)
    out = np.take_along_axis(cells, arg[..., None].astype(np.intp), axis=-1)[..., 0]
    return out, arg


def pool2_max_vjp(g, arg, h, w):
    c, ho, wo = g.shape
    cells = np.zeros((c, ho, wo, 4), dtype=g.dtype)
    np.put_along_axis(cells, arg[..., None].astype(np.intp), g[..., None], axis=-1)
    full = cells.reshape(c, ho, wo, 2, 2).transpose(0, 1, 3, 2, 4).reshape(c, 2 * ho, 2 * wo)
    return _unpool_fold(full, h, w)
