"""Numba lane: jitted loop kernels.

Index clipping implements replicate padding without materializing padded
arrays; zero padding skips out-of-range taps.  All loops are sequential so
results are deterministic for a given dtype.
"""

from __future__ import annotations

import numpy as np
from numba import njit

MODE_ZERO = 0
MODE_REPLICATE = 1


@njit(cache=True)
def _conv2d_fwd(x, k, stride, mode, out):
    cin, h, w = x.shape
    cout, _, kh, kw = k.shape
    ph, pw = kh // 2, kw // 2
    ho, wo = out.shape[1], out.shape[2]
    for co in range(cout):
        for i in range(ho):
            for j in range(wo):
                acc = 0.0
                for ci in range(cin):
                    for dh in range(kh):
                        a = i * stride + dh - ph
                        if mode == MODE_REPLICATE:
                            a = min(max(a, 0), h - 1)
                        elif a < 0 or a >= h:
                            continue
                        for dw in range(kw):
                            b = j * stride + dw - pw
                            if mode == MODE_REPLICATE:
                                b = min(max(b, 0), w - 1)
                            elif b < 0 or b >= w:
                                continue
                            acc += k[co, ci, dh, dw] * x[ci, a, b]
                out[co, i, j] = acc
    return out


def conv2d_fwd(x, k, stride, mode):
    cout, _, kh, kw = k.shape
    _, h, w = x.shape
    ho = (h + 2 * (kh // 2) - kh) // stride + 1
    wo = (w + 2 * (kw // 2) - kw) // stride + 1
    out = np.empty((cout, ho, wo), dtype=x.dtype)
    return _conv2d_fwd(x, k, stride, mode, out)


@njit(cache=True)
def _conv2d_vjp_k(x, g, stride, mode, dk):
    cin, h, w = x.shape
    cout, ho, wo = g.shape
    kh, kw = dk.shape[2], dk.shape[3]
    ph, pw = kh // 2, kw // 2
    for co in range(cout):
        for ci in range(cin):
            for dh in range(kh):
                for dw in range(kw):
                    acc = 0.0
                    for i in range(ho):
                        a = i * stride + dh - ph
                        if mode == MODE_REPLICATE:
                            a = min(max(a, 0), h - 1)
                        elif a < 0 or a >= h:
                            continue
                        for j in range(wo):
                            b = j * stride + dw - pw
                            if mode == MODE_REPLICATE:
                                b = min(max(b, 0), w - 1)
                            elif b < 0 or b >= w:
                                continue
                            acc += g[co, i, j] * x[ci, a, b]
                    dk[co, ci, dh, dw] = acc
    return dk


def conv2d_vjp_k(x, g, stride, mode, kh, kw):
    cout = g.shape[0]
    cin = x.shape[0]
    dk = np.empty((cout, cin, kh, kw), dtype=x.dtype)
    return _conv2d_vjp_k(x, g, stride, mode, dk)


@njit(cache=True)
def _conv2d_vjp_x(g, k, stride, mode, dx):
    cout, ho, wo = g.shape
    _, cin, kh, kw = k.shape
    h, w = dx.shape[1], dx.shape[2]
    ph, pw = kh // 2, kw // 2
    for co in range(cout):
        for i in range(ho):
            for j in range(wo):
                gv = g[co, i, j]
                for ci in range(cin):
                    for dh in range(kh):
                        a = i * stride + dh - ph
                        if mode == MODE_REPLICATE:
                            a = min(max(a, 0), h - 1)
                        elif a < 0 or a >= h:
                            continue
                        for dw in range(kw):
                            b = j * stride + dw - pw
                            if mode == MODE_REPLICATE:
                                b = min(max(b, 0), w - 1)
                            elif b < 0 or b >= w:
                                continue
                            dx[ci, a, b] += gv * k[co, ci, dh, dw]
    return dx


def conv2d_vjp_x(g, k, stride, mode, h, w):
    cin = k.shape[1]
    dx = np.zeros((cin, h, w), dtype=g.dtype)
    return _conv2d_vjp_x(g, k, stride, mode, dx)


@njit(cache=True)
def _pool2_avg_fwd(x, out):
    c, h, w = x.shape
    ho, wo = out.shape[1], out.shape[2]
    for ci in range(c):
        for i in range(ho):
            for j in range(wo):
                acc = 0.0
                for di in range(2):
                    a = min(2 * i + di, h - 1)
                    for dj in range(2):
                        b = min(2 * j + dj, w - 1)
                        acc += x[ci, a, b]
                out[ci, i, j] = acc * 0.25
    return out


def pool2_avg_fwd(x):
    c, h, w = x.shape
    out = np.empty((c, (h + 1) // 2, (w + 1) // 2), dtype=x.dtype)
    return _pool2_avg_fwd(x, out)


@njit(cache=True)
def _pool2_avg_vjp(g, dx):
    c, ho, wo = g.shape
    h, w = dx.shape[1], dx.shape[2]
    for ci in range(c):
        for i in range(ho):
            for j in range(wo):
                gv = g[ci, i, j] * 0.25
                for di in range(2):
                    a = min(2 * i + di, h - 1)
                    for dj in range(2):
                        b = min(2 * j + dj, w - 1)
                        dx[ci, a, b] += gv
    return dx


def pool2_avg_vjp(g, h, w):
    dx = np.zeros((g.shape[0], h, w), dtype=g.dtype)
    return _pool2_avg_vjp(g, dx)


@njit(cache=True)
def _pool2_max_fwd(x, out, arg):
    c, h, w = x.shape
    ho, wo = out.shape[1], out.shape[2]
    for ci in range(c):
        for i in range(ho):
            for j in range(wo):
                best = x[ci, min(2 * i, h - 1), min(2 * j, w - 1)]
                cell = 0
                for di in range(2):
                    a = min(2 * i + di, h - 1)
                    for dj in range(2):
                        b = min(2 * j + dj, w - 1)
                        v = x[ci, a, b]
                        if v > best:
                            best = v
                            cell = 2 * di + dj
                out[ci, i, j] = best
                arg[ci, i, j] = cell
    return out, arg


def pool2_max_fwd(x):
    c, h, w = x.shape
    ho, wo = (h + 1) // 2, (w + 1) // 2
    out = np.empty((c, ho, wo), dtype=x.dtype)
    arg = np.empty((c, ho, wo), dtype=np.int8)
    return _pool2_max_fwd(x, out, arg)


@njit(cache=True)
def _pool2_max_vjp(g, arg, dx):
    c, ho, wo = g.shape
    h, w = dx.shape[1], dx.shape[2]
    for ci in range(c):
        for i in range(ho):
            for j in range(wo):
                cell = arg[ci, i, j]
                a = min(2 * i + cell // 2, h - 1)
                b = min(2 * j + cell % 2, w - 1)
                dx[ci, a, b] += g[ci, i, j]
    return dx


def pool2_max_vjp(g, arg, h, w):
    dx = np.zeros((g.shape[0], h, w), dtype=g.dtype)
    return _pool2_max_vjp(g, arg, dx)
