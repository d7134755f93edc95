"""Two-exposure attention fusion.

A small conv stack sees both sources stacked channel-wise, pools the
features at half resolution (average + max), and predicts one attention
map per source.  The maps pass through a per-pixel softmax so the fused
image is an exact convex combination of the two inputs; correcting color
and exposure is left to the restoration stages downstream.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from . import config
from .blocks import kaiming_uniform

FEATURE_WIDTHS = (8, 16)


def fusion_init(rng_for, prefix: str = "fusion/", in_channels: int = 3) -> dict:
    w0, w1 = FEATURE_WIDTHS
    cat = 2 * in_channels
    skip_in = 3 * w1  # pooled avg+max upsampled (2*w1) stacked with the full-res features
    dt = config.dtype()

    def conv(name, cout, cin, k):
        return kaiming_uniform(rng_for(prefix + name), (cout, cin, k, k), cin * k * k)

    return {
        prefix + "feat0/w": conv("feat0/w", w0, cat, 3),
        prefix + "feat0/b": np.zeros(w0, dtype=dt),
        prefix + "feat1/w": conv("feat1/w", w1, w0, 3),
        prefix + "feat1/b": np.zeros(w1, dtype=dt),
        prefix + "skip/w": conv("skip/w", w1, skip_in, 1),
        prefix + "skip/b": np.zeros(w1, dtype=dt),
        prefix + "head/w": conv("head/w", 2, w1, 3),
        prefix + "head/b": np.zeros(2, dtype=dt),
    }


def fuse_pair_graph(i1: ad.Var, i2: ad.Var, p: dict, prefix: str = "fusion/"):
    """Differentiable fusion; returns (fused, per-pixel weights [2,H,W])."""
    if i1.shape != i2.shape:
        raise ValueError(f"source size mismatch: {i1.shape} vs {i2.shape}")
    c, h, w = i1.shape
    x = ad.concat([i1, i2], axis=0)
    f = ad.gelu(ad.add_bias(ad.conv2d(x, p[prefix + "feat0/w"]), p[prefix + "feat0/b"]))
    f = ad.gelu(ad.add_bias(ad.conv2d(f, p[prefix + "feat1/w"]), p[prefix + "feat1/b"]))
    pooled = ad.concat([ad.pool2(f, "avg"), ad.pool2(f, "max")], axis=0)
    up = ad.upsample2(pooled, (h, w))
    g = ad.concat([up, f], axis=0)
    g = ad.gelu(ad.add_bias(ad.conv2d(g, p[prefix + "skip/w"]), p[prefix + "skip/b"]))
    logits = ad.add_bias(ad.conv2d(g, p[prefix + "head/w"]), p[prefix + "head/b"])
    weights = ad.softmax(logits, 0)
    w1 = ad.expand_channels(ad.channel_slice(weights, 0, 1), c)
    w2 = ad.expand_channels(ad.channel_slice(weights, 1, 2), c)
    fused = ad.add(ad.mul(w1, i1), ad.mul(w2, i2))
    return fused, weights


def fuse_pair(i1: np.ndarray, i2: np.ndarray, params: dict, prefix: str = "fusion/") -> np.ndarray:
    """Inference entry point; output clamped to [0, 1]."""
    with ad.no_grad():
        fused, _ = fuse_pair_graph(ad.Var(i1), ad.Var(i2), ad.lift(params, False), prefix)
    return np.clip(fused.value, 0.0, 1.0)
