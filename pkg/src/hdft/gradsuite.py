"""Standard finite-difference verification suite over every trainable
component at toy sizes.  Used by the ``grad-check`` command and the
acceptance tests."""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from . import config, fusion, losses
from .blocks import (
    BlockConfig,
    RestorerConfig,
    dfffn_forward,
    dfffn_init,
    hdf_block,
    hdf_block_init,
    hfa_forward,
    hfa_init,
    restorer_forward,
    restorer_init,
)


def _rng_factory(rng: np.random.Generator):
    def rng_for(name: str) -> np.random.Generator:
        return np.random.default_rng(rng.integers(2**63))

    return rng_for


def _randomize(params: dict, rng: np.random.Generator, scale: float = 0.2) -> dict:
    """Perturb zero-initialized tensors so gradients flow everywhere."""
    out = {}
    for name, arr in params.items():
        out[name] = arr + scale * rng.standard_normal(arr.shape).astype(arr.dtype)
    return out


def standard_checks(h: float = 1e-5, seed: int = 0) -> dict:
    """Finite-difference reports for attention, feed-forward, block,
    restorer, fusion, and the losses, keyed by component name."""
    rng = np.random.default_rng(seed)
    dt = config.dtype()
    width, size = 4, 8
    bc = BlockConfig(window=4)
    x = rng.standard_normal((width, size, size)).astype(dt)
    reports = {}

    p = _randomize(hfa_init(width, _rng_factory(rng)), rng)
    reports["hfa"] = ad.grad_check(
        lambda P: ad.sum_all(ad.mul(y := hfa_forward(ad.Var(x), P, "", bc), y)), p, h=h
    )

    p = _randomize(dfffn_init(width, _rng_factory(rng), "", bc), rng)
    reports["dfffn"] = ad.grad_check(
        lambda P: ad.sum_all(ad.mul(y := dfffn_forward(ad.Var(x), P, "", bc), y)), p, h=h
    )

    p = _randomize(hdf_block_init(width, _rng_factory(rng), "", bc), rng)
    reports["hdf_block"] = ad.grad_check(
        lambda P: ad.sum_all(ad.mul(y := hdf_block(ad.Var(x), P, "", bc), y)), p, h=h
    )

    rcfg = RestorerConfig(in_channels=3, width=width, scales=2, blocks_per_scale=1, block=bc)
    img = rng.random((3, size, size)).astype(dt)
    p = _randomize(restorer_init(rcfg, _rng_factory(rng)), rng)
    reports["restorer"] = ad.grad_check(
        lambda P: ad.sum_all(ad.mul(y := restorer_forward(ad.Var(img), P, "", rcfg), y)), p, h=h
    )

    i1 = rng.random((3, size, size)).astype(dt)
    i2 = rng.random((3, size, size)).astype(dt)
    p = _randomize(fusion.fusion_init(_rng_factory(rng)), rng)
    reports["fusion"] = ad.grad_check(
        lambda P: ad.sum_all(
            ad.mul(y := fusion.fuse_pair_graph(ad.Var(i1), ad.Var(i2), P, "fusion/")[0], y)
        ),
        p,
        h=h,
    )

    gt = rng.random((3, size, size)).astype(dt)
    o1 = gt + np.where(rng.random(gt.shape) < 0.5, -1.0, 1.0) * rng.uniform(
        0.05, 0.3, gt.shape
    ).astype(dt)  # keep |o - gt| well away from the L1 kink
    reports["losses"] = ad.grad_check(
        lambda P: losses.recon_loss(P["o1"], gt), {"o1": o1}, h=h
    )
    return reports
