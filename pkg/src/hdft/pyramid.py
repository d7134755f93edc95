"""Multi-scale band decomposition: Gaussian smoothing, 2x resampling,
residual (band-pass) pyramid construction and its exact inverse.

The smoothing kernel is the 5-tap binomial [1,4,6,4,1]/16 applied
separably.  Downsampling blurs with replicated borders and keeps every
second sample; upsampling zero-interleaves to the requested size and
blurs with a x4 gain using symmetric (reflect-101) borders, which keeps
constants exactly constant at every size and parity.  With matching
sizes, reconstruct(decompose(x)) == x up to float rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_TAPS = (1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16)


def _reflect_index(i: int, n: int) -> int:
    if n == 1:
        return 0
    period = 2 * (n - 1)
    i %= period
    return i if i < n else period - i


def _edge_index(i: int, n: int, mode: str) -> int:
    if mode == "replicate":
        return min(max(i, 0), n - 1)
    return _reflect_index(i, n)


def _blur1(x: np.ndarray, axis: int, mode: str) -> np.ndarray:
    pad_mode = "edge" if mode == "replicate" else "reflect"
    spec = [(0, 0)] * x.ndim
    spec[axis] = (2, 2)
    xp = np.pad(x, spec, mode=pad_mode)
    xp = np.moveaxis(xp, axis, -1)
    n = x.shape[axis]
    out = _TAPS[0] * xp[..., 0:n]
    for t in range(1, 5):
        out += _TAPS[t] * xp[..., t : t + n]
    return np.moveaxis(out, -1, axis)


def _blur1_adjoint(g: np.ndarray, axis: int, mode: str) -> np.ndarray:
    g = np.moveaxis(g, axis, -1)
    n = g.shape[-1]
    spec = [(0, 0)] * g.ndim
    spec[-1] = (4, 4)
    gz = np.pad(g, spec)
    s = _TAPS[0] * gz[..., 0 : n + 4]
    for t in range(1, 5):
        s += _TAPS[t] * gz[..., t : t + n + 4]
    out = s[..., 2 : n + 2].copy()
    for j in (0, 1, n + 2, n + 3):
        out[..., _edge_index(j - 2, n, mode)] += s[..., j]
    return np.moveaxis(out, -1, axis)


def gaussian_blur(x: np.ndarray) -> np.ndarray:
    """Separable binomial-5 smoothing with replicated borders."""
    return _blur1(_blur1(x, 1, "replicate"), 2, "replicate")


def gaussian_blur_adjoint(g: np.ndarray) -> np.ndarray:
    return _blur1_adjoint(_blur1_adjoint(g, 2, "replicate"), 1, "replicate")


def pyr_down(x: np.ndarray) -> np.ndarray:
    """Blur then keep every second sample starting at index 0."""
    return np.ascontiguousarray(gaussian_blur(x)[:, ::2, ::2])


def pyr_down_vjp(g: np.ndarray, h: int, w: int) -> np.ndarray:
    full = np.zeros((g.shape[0], h, w), dtype=g.dtype)
    full[:, ::2, ::2] = g
    return gaussian_blur_adjoint(full)


def _check_up_target(h, w, target):
    th, tw = target
    if th not in (2 * h, 2 * h - 1) or tw not in (2 * w, 2 * w - 1):
        raise ValueError(f"pyr_up target {target} incompatible with input {(h, w)}")


def pyr_up(x: np.ndarray, target: tuple[int, int]) -> np.ndarray:
    """Zero-interleave to ``target`` then blur with a x4 gain.

    Symmetric borders keep the even/odd comb structure intact at the
    edges, so constant inputs come back exactly constant.
    """
    c, h, w = x.shape
    _check_up_target(h, w, target)
    full = np.zeros((c, target[0], target[1]), dtype=x.dtype)
    full[:, ::2, ::2] = x
    return 4.0 * _blur1(_blur1(full, 1, "reflect"), 2, "reflect")


def pyr_up_vjp(g: np.ndarray, h: int, w: int) -> np.ndarray:
    a = _blur1_adjoint(_blur1_adjoint(4.0 * g, 2, "reflect"), 1, "reflect")
    return np.ascontiguousarray(a[:, ::2, ::2])


@dataclass
class Pyramid:
    """Band-pass residuals ordered fine to coarse plus the coarsest level."""

    residuals: list = field(default_factory=list)
    base: np.ndarray | None = None

    @property
    def levels(self) -> int:
        return len(self.residuals) + 1


def decompose(x: np.ndarray, levels: int = 4) -> Pyramid:
    if levels < 2:
        raise ValueError(f"need at least 2 levels, got {levels}")
    c, h, w = x.shape
    if min(h, w) // 2 ** (levels - 1) < 4:
        raise ValueError(f"image {(h, w)} too small for {levels} levels (coarsest side < 4)")
    gs = [x]
    for _ in range(levels - 1):
        gs.append(pyr_down(gs[-1]))
    residuals = [
        gs[i] - pyr_up(gs[i + 1], gs[i].shape[1:]) for i in range(levels - 1)
    ]
    return Pyramid(residuals=residuals, base=gs[-1])


def reconstruct(p: Pyramid) -> np.ndarray:
    x = p.base
    for r in reversed(p.residuals):
        th, tw = r.shape[1], r.shape[2]
        _check_up_target(x.shape[1], x.shape[2], (th, tw))
        x = pyr_up(x, (th, tw)) + r
    return x


def gaussian_levels(x: np.ndarray, levels: int) -> list:
    """The smoothed level stack [G_1 ... G_levels], finest first."""
    gs = [x]
    for _ in range(levels - 1):
        gs.append(pyr_down(gs[-1]))
    return gs
