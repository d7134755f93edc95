"""Full-reference quality metrics: PSNR, SSIM, and a multi-exposure SSIM.

Images are channel-first [3, H, W] in [0, 1].  Structural comparisons run
on Rec.601 luma.  The windowed SSIM uses the conventional 11x11 Gaussian
window (sigma 1.5) over the valid region; the global mode evaluates the
same ratio once from whole-image moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

_LUMA = (0.299, 0.587, 0.114)
_WIN = 11
_SIGMA = 1.5


@dataclass(frozen=True)
class SsimConstants:
    k1: float = 0.01
    k2: float = 0.03
    data_range: float = 1.0

    @property
    def c1(self) -> float:
        return (self.k1 * self.data_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.data_range) ** 2


@dataclass(frozen=True)
class MefSsimConfig:
    beta: float = 1.0

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")


def _check_pair(x, y):
    if x.shape != y.shape:
        raise ValueError(f"image shape mismatch: {x.shape} vs {y.shape}")


def psnr(x: np.ndarray, y: np.ndarray, max_val: float = 1.0) -> float:
    """10*log10(max^2 / mse); +inf for identical inputs."""
    _check_pair(x, y)
    mse = float(np.mean((np.asarray(x, dtype=np.float64) - y) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(max_val * max_val / mse)


def luma(img: np.ndarray) -> np.ndarray:
    if img.ndim == 2:
        return np.asarray(img, dtype=np.float64)
    if img.ndim == 3 and img.shape[0] == 3:
        r, g, b = img.astype(np.float64)
        return _LUMA[0] * r + _LUMA[1] * g + _LUMA[2] * b
    raise ValueError(f"expected [3,H,W] or [H,W] image, got {img.shape}")


def _gaussian_window() -> np.ndarray:
    ax = np.arange(_WIN, dtype=np.float64) - (_WIN - 1) / 2.0
    g = np.exp(-(ax**2) / (2.0 * _SIGMA**2))
    k = np.outer(g, g)
    return k / k.sum()


def _ssim_terms(mx, my, vx, vy, cov, c: SsimConstants):
    return ((2 * mx * my + c.c1) * (2 * cov + c.c2)) / (
        (mx * mx + my * my + c.c1) * (vx + vy + c.c2)
    )


def ssim_map(x: np.ndarray, y: np.ndarray, constants: SsimConstants = SsimConstants()) -> np.ndarray:
    """Per-pixel windowed SSIM over the valid region [H-10, W-10]."""
    _check_pair(x, y)
    lx, ly = luma(x), luma(y)
    if min(lx.shape) < _WIN:
        raise ValueError(f"image {lx.shape} smaller than the {_WIN}x{_WIN} window")
    w = _gaussian_window()
    wx = sliding_window_view(lx, (_WIN, _WIN))
    wy = sliding_window_view(ly, (_WIN, _WIN))
    mx = np.einsum("hwij,ij->hw", wx, w)
    my = np.einsum("hwij,ij->hw", wy, w)
    mxx = np.einsum("hwij,ij->hw", wx * wx, w)
    myy = np.einsum("hwij,ij->hw", wy * wy, w)
    mxy = np.einsum("hwij,ij->hw", wx * wy, w)
    return _ssim_terms(mx, my, mxx - mx * mx, myy - my * my, mxy - mx * my, constants)


def ssim(
    x: np.ndarray,
    y: np.ndarray,
    mode: str = "windowed",
    constants: SsimConstants = SsimConstants(),
) -> float:
    _check_pair(x, y)
    if mode == "windowed":
        return float(ssim_map(x, y, constants).mean())
    if mode == "global":
        lx, ly = luma(x), luma(y)
        mx, my = lx.mean(), ly.mean()
        vx, vy = lx.var(), ly.var()
        cov = ((lx - mx) * (ly - my)).mean()
        return float(_ssim_terms(mx, my, vx, vy, cov, constants))
    raise ValueError(f"ssim mode must be windowed or global, got {mode!r}")


def mef_weights(sources, cfg: MefSsimConfig = MefSsimConfig()) -> np.ndarray:
    """Per-pixel source weights: a softmax of -beta*(I_i - mean_i I_i)^2 on luma.

    The reference intensity is the per-pixel mean across the sources, so
    the weights of the n sources sum to one at every pixel.
    """
    if len(sources) == 0:
        raise ValueError("need at least one source image")
    lumas = np.stack([luma(s) for s in sources])
    ibar = lumas.mean(axis=0, keepdims=True)
    logits = -cfg.beta * (lumas - ibar) ** 2
    logits -= logits.max(axis=0, keepdims=True)
    e = np.exp(logits)
    return e / e.sum(axis=0, keepdims=True)


def mef_ssim(
    fused: np.ndarray,
    sources,
    cfg: MefSsimConfig = MefSsimConfig(),
    constants: SsimConstants = SsimConstants(),
) -> float:
    """Sum over sources of the mean weighted windowed-SSIM map."""
    sources = list(sources)
    weights = mef_weights(sources, cfg)
    half = (_WIN - 1) // 2
    score = 0.0
    for i, src in enumerate(sources):
        _check_pair(fused, src)
        m = ssim_map(fused, src, constants)
        wv = weights[i, half : half + m.shape[0], half : half + m.shape[1]]
        score += float((wv * m).mean())
    return score
