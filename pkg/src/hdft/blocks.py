"""Frequency-domain transformer blocks and the U-shaped restorer.

The attention stage correlates query and key globally by multiplying
their spectra entrywise (convolution theorem) instead of forming a
pairwise attention matrix, then gates the value path with a spatial
softmax of the mixed map.  The feed-forward stage partitions features
into fixed windows and filters every window's spectrum with one shared
learnable complex mask.  Both stages sit behind per-pixel layer
normalization with residual connections around each sub-path, and a
plain convolutional twin of the restorer serves as a baseline.

Parameters live in flat name->array maps so the whole model serializes
as a list of named tensors; forwards take the same map lifted to
:class:`~hdft.autodiff.Var`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from . import config


@dataclass(frozen=True)
class BlockConfig:
    window: int = 8
    expansion: int = 2
    scale_qk: bool = False
    softmax_axis: str = "spatial"  # or "channel"
    ffn_residual: bool = True


@dataclass(frozen=True)
class RestorerConfig:
    in_channels: int = 3
    width: int = 16
    scales: int = 3
    blocks_per_scale: int = 1
    kind: str = "hdf"  # "hdf" or "conv" (plain U-Net baseline)
    block: BlockConfig = field(default_factory=BlockConfig)


def kaiming_uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = math.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(config.dtype())


def _conv_init(rng_for, name: str, cout: int, cin: int, k: int) -> np.ndarray:
    return kaiming_uniform(rng_for(name), (cout, cin, k, k), cin * k * k)


def n_params(params: dict) -> int:
    return sum(v.size for v in params.values())


# -- holistic frequency attention ---------------------------------------------


def hfa_init(c: int, rng_for, prefix: str = "") -> dict:
    return {
        prefix + "wq": _conv_init(rng_for, prefix + "wq", c, c, 1),
        prefix + "wk": _conv_init(rng_for, prefix + "wk", c, c, 1),
        prefix + "wv": _conv_init(rng_for, prefix + "wv", c, c, 1),
        prefix + "wo": np.zeros((c, c, 1, 1), dtype=config.dtype()),
    }


def hfa_attend(x: ad.Var, p: dict, prefix: str = "", cfg: BlockConfig = BlockConfig()) -> ad.Var:
    """Attention path without the residual: gate(value) -> output conv."""
    q = ad.conv2d(x, p[prefix + "wq"])
    k = ad.conv2d(x, p[prefix + "wk"])
    v = ad.conv2d(x, p[prefix + "wv"])
    mixed = ad.real(ad.ifft2(ad.hadamard(ad.fft2(q), ad.fft2(k))))
    if cfg.scale_qk:
        mixed = mixed * (1.0 / math.sqrt(x.shape[0]))
    if cfg.softmax_axis == "spatial":
        c, h, w = mixed.shape
        gate = ad.reshape(ad.softmax(ad.reshape(mixed, (c, h * w)), 1), (c, h, w))
    else:
        gate = ad.softmax(mixed, 0)
    return ad.conv2d(ad.mul(gate, v), p[prefix + "wo"])


def hfa_forward(x: ad.Var, p: dict, prefix: str = "", cfg: BlockConfig = BlockConfig()) -> ad.Var:
    return ad.add(x, hfa_attend(x, p, prefix, cfg))


# -- dynamic frequency feed-forward --------------------------------------------


def dfffn_init(c: int, rng_for, prefix: str = "", cfg: BlockConfig = BlockConfig()) -> dict:
    wide = cfg.expansion * c
    return {
        prefix + "expand": _conv_init(rng_for, prefix + "expand", wide, c, 1),
        prefix + "mask_re": np.ones((wide, cfg.window, cfg.window), dtype=config.dtype()),
        prefix + "mask_im": np.zeros((wide, cfg.window, cfg.window), dtype=config.dtype()),
        prefix + "reduce": _conv_init(rng_for, prefix + "reduce", c, wide, 1),
    }


def dfffn_filter(x: ad.Var, p: dict, prefix: str = "", cfg: BlockConfig = BlockConfig()) -> ad.Var:
    """Feed-forward path without the residual: window-spectral filtering."""
    wide = ad.conv2d(x, p[prefix + "expand"])
    wins, meta = ad.window_partition(wide, cfg.window, cfg.window)
    spectra = ad.fft2(wins)
    mask = ad.make_complex(p[prefix + "mask_re"], p[prefix + "mask_im"])
    filtered = ad.hadamard(spectra, ad.tile_leading(mask, wins.shape[0]))
    spatial = ad.real(ad.ifft2(filtered))
    merged = ad.window_merge(spatial, meta)
    return ad.conv2d(merged, p[prefix + "reduce"])


def dfffn_forward(x: ad.Var, p: dict, prefix: str = "", cfg: BlockConfig = BlockConfig()) -> ad.Var:
    path = dfffn_filter(x, p, prefix, cfg)
    return ad.add(x, path) if cfg.ffn_residual else path


# -- assembled block -----------------------------------------------------------


def hdf_block_init(c: int, rng_for, prefix: str = "", cfg: BlockConfig = BlockConfig()) -> dict:
    params = {
        prefix + "ln1/g": np.ones(c, dtype=config.dtype()),
        prefix + "ln1/b": np.zeros(c, dtype=config.dtype()),
        prefix + "ln2/g": np.ones(c, dtype=config.dtype()),
        prefix + "ln2/b": np.zeros(c, dtype=config.dtype()),
    }
    params.update(hfa_init(c, rng_for, prefix + "hfa/"))
    params.update(dfffn_init(c, rng_for, prefix + "ffn/", cfg))
    return params


def hdf_block(x: ad.Var, p: dict, prefix: str = "", cfg: BlockConfig = BlockConfig()) -> ad.Var:
    """Pre-norm: x + attend(LN(x)), then u + filter(LN(u))."""
    normed = ad.layernorm(x, p[prefix + "ln1/g"], p[prefix + "ln1/b"])
    u = ad.add(x, hfa_attend(normed, p, prefix + "hfa/", cfg))
    normed2 = ad.layernorm(u, p[prefix + "ln2/g"], p[prefix + "ln2/b"])
    return ad.add(u, dfffn_filter(normed2, p, prefix + "ffn/", cfg))


def _biased_conv_init(rng_for, name: str, cout: int, cin: int, k: int) -> dict:
    return {
        name + "/w": _conv_init(rng_for, name + "/w", cout, cin, k),
        name + "/b": np.zeros(cout, dtype=config.dtype()),
    }


def _biased_conv(x: ad.Var, p: dict, name: str, stride: int = 1) -> ad.Var:
    return ad.add_bias(ad.conv2d(x, p[name + "/w"], stride=stride), p[name + "/b"])


def conv_block_init(c: int, rng_for, prefix: str = "") -> dict:
    params = _biased_conv_init(rng_for, prefix + "c0", c, c, 3)
    params.update(_biased_conv_init(rng_for, prefix + "c1", c, c, 3))
    return params


def conv_block(x: ad.Var, p: dict, prefix: str = "") -> ad.Var:
    h = ad.gelu(_biased_conv(x, p, prefix + "c0"))
    return ad.add(x, _biased_conv(h, p, prefix + "c1"))


# -- U-shaped restorer -----------------------------------------------------------


def _block_init(c, rng_for, prefix, cfg: RestorerConfig):
    if cfg.kind == "hdf":
        return hdf_block_init(c, rng_for, prefix, cfg.block)
    if cfg.kind == "conv":
        return conv_block_init(c, rng_for, prefix)
    raise ValueError(f"restorer kind must be hdf or conv, got {cfg.kind!r}")


def _block_forward(x, p, prefix, cfg: RestorerConfig):
    if cfg.kind == "hdf":
        return hdf_block(x, p, prefix, cfg.block)
    return conv_block(x, p, prefix)


def restorer_init(cfg: RestorerConfig, rng_for, prefix: str = "") -> dict:
    widths = [cfg.width * 2**s for s in range(cfg.scales)]
    params = _biased_conv_init(rng_for, prefix + "entry", widths[0], cfg.in_channels, 3)
    for s in range(cfg.scales - 1):
        for b in range(cfg.blocks_per_scale):
            params.update(_block_init(widths[s], rng_for, f"{prefix}enc{s}/blk{b}/", cfg))
        params.update(
            _biased_conv_init(rng_for, f"{prefix}down{s}", widths[s + 1], widths[s], 3)
        )
    for b in range(cfg.blocks_per_scale):
        params.update(_block_init(widths[-1], rng_for, f"{prefix}bot/blk{b}/", cfg))
    for s in reversed(range(cfg.scales - 1)):
        params.update(_biased_conv_init(rng_for, f"{prefix}up{s}", widths[s], widths[s + 1], 3))
        params.update(
            _biased_conv_init(rng_for, f"{prefix}skip{s}", widths[s], 2 * widths[s], 1)
        )
        for b in range(cfg.blocks_per_scale):
            params.update(_block_init(widths[s], rng_for, f"{prefix}dec{s}/blk{b}/", cfg))
    params[prefix + "exit/w"] = np.zeros(
        (cfg.in_channels, widths[0], 3, 3), dtype=config.dtype()
    )
    params[prefix + "exit/b"] = np.zeros(cfg.in_channels, dtype=config.dtype())
    return params


def restorer_forward(x: ad.Var, p: dict, prefix: str = "", cfg: RestorerConfig = RestorerConfig()) -> ad.Var:
    """Encoder/decoder with skip fusion and a global residual around the input."""
    if min(x.shape[1], x.shape[2]) < 4:
        raise ValueError(f"restorer input too small: {x.shape[1:]} (needs >= 4x4)")
    h = _biased_conv(x, p, prefix + "entry")
    skips = []
    for s in range(cfg.scales - 1):
        for b in range(cfg.blocks_per_scale):
            h = _block_forward(h, p, f"{prefix}enc{s}/blk{b}/", cfg)
        skips.append(h)
        h = _biased_conv(h, p, f"{prefix}down{s}", stride=2)
    for b in range(cfg.blocks_per_scale):
        h = _block_forward(h, p, f"{prefix}bot/blk{b}/", cfg)
    for s in reversed(range(cfg.scales - 1)):
        target = (skips[s].shape[1], skips[s].shape[2])
        h = _biased_conv(ad.upsample2(h, target), p, f"{prefix}up{s}")
        h = _biased_conv(ad.concat([h, skips[s]], axis=0), p, f"{prefix}skip{s}")
        for b in range(cfg.blocks_per_scale):
            h = _block_forward(h, p, f"{prefix}dec{s}/blk{b}/", cfg)
    return ad.add(x, _biased_conv(h, p, prefix + "exit"))


def unet_config(cfg: RestorerConfig) -> RestorerConfig:
    """The plain-convolution twin of an HDF restorer config."""
    return replace(cfg, kind="conv")
