"""Full restoration pipeline: band decomposition, one restorer per band,
progressive coarse-to-fine fusion, and parameter lifecycle.

The input is split into ``levels`` frequency bands.  The coarsest band is
restored first; each finer stage upsamples the previous stage's output,
adds the stored band residual, and restores the sum.  Every restorer is a
residual map with a zero-initialized exit projection, so a freshly
initialized pipeline is the identity.  By default the finest stage is the
plain convolutional U-Net and the three coarser stages are frequency
transformer restorers (the strongest mix in the staging study); any
per-stage mix can be configured.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import config, fusion, pyramid, weights
from .blocks import BlockConfig, RestorerConfig, restorer_forward, restorer_init

META_NAME = "meta/config"
_KIND_CODES = {"conv": 0.0, "hdf": 1.0}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}


def default_stage_kinds(levels: int) -> tuple:
    """Stage 1 (finest) is the conv U-Net; coarser stages use HDF blocks."""
    return ("conv",) + ("hdf",) * (levels - 1)


@dataclass(frozen=True)
class PipelineConfig:
    levels: int = 4
    in_channels: int = 3
    width: int = 16
    scales: int = 3
    blocks_per_scale: int = 1
    window: int = 8
    expansion: int = 2
    stage_kinds: tuple = ()
    with_fusion: bool = False

    def kinds(self) -> tuple:
        kinds = self.stage_kinds or default_stage_kinds(self.levels)
        if len(kinds) != self.levels:
            raise ValueError(f"need {self.levels} stage kinds, got {len(kinds)}")
        return kinds

    def restorer_config(self, stage: int) -> RestorerConfig:
        return RestorerConfig(
            in_channels=self.in_channels,
            width=self.width,
            scales=self.scales,
            blocks_per_scale=self.blocks_per_scale,
            kind=self.kinds()[stage - 1],
            block=BlockConfig(window=self.window, expansion=self.expansion),
        )


@dataclass
class PipelineOutput:
    """Per-band outputs ordered coarse to fine; ``final`` is the clamped
    finest output."""

    levels: list
    final: np.ndarray = field(init=False)

    def __post_init__(self):
        self.final = np.clip(self.levels[-1].value, 0.0, 1.0)

    def level(self, i: int):
        """Stage output for band i, 1 = finest."""
        return self.levels[len(self.levels) - i]


def _rng_factory(seed: int):
    def rng_for(name: str) -> np.random.Generator:
        digest = hashlib.sha256(f"{seed}:{name}".encode()).digest()
        return np.random.default_rng(int.from_bytes(digest[:8], "little"))

    return rng_for


def init_params(seed: int, cfg: PipelineConfig = PipelineConfig()) -> dict:
    """Deterministic per-tensor initialization; exit projections start at
    zero so the pipeline starts as the identity."""
    rng_for = _rng_factory(seed)
    params: dict = {}
    if cfg.with_fusion:
        params.update(fusion.fusion_init(rng_for, "fusion/", cfg.in_channels))
    for stage in range(1, cfg.levels + 1):
        params.update(restorer_init(cfg.restorer_config(stage), rng_for, f"stage{stage}/"))
    return params


def decompose_graph(x: ad.Var, levels: int):
    """Differentiable band split: (residuals fine->coarse, base)."""
    gs = [x]
    for _ in range(levels - 1):
        gs.append(ad.pyr_down(gs[-1]))
    residuals = [
        ad.sub(gs[i], ad.pyr_up(gs[i + 1], (gs[i].shape[1], gs[i].shape[2])))
        for i in range(levels - 1)
    ]
    return residuals, gs[-1]


def forward(x, params: dict, cfg: PipelineConfig = PipelineConfig()) -> PipelineOutput:
    """Restore ``x`` ([3, H, W] in [0, 1]); accepts raw arrays or lifted
    parameter Vars (training)."""
    xv = ad.as_var(x)
    h, w = xv.shape[1], xv.shape[2]
    if min(h, w) < 4 * 2 ** (cfg.levels - 1):
        raise ValueError(f"input {(h, w)} too small for {cfg.levels} levels")
    p = {k: ad.as_var(v) for k, v in params.items()}
    residuals, base = decompose_graph(xv, cfg.levels)
    sizes = [(r.shape[1], r.shape[2]) for r in residuals]  # fine -> coarse

    out = restorer_forward(base, p, f"stage{cfg.levels}/", cfg.restorer_config(cfg.levels))
    outputs = [out]
    for i in range(cfg.levels - 1, 0, -1):
        candidate = ad.add(ad.pyr_up(out, sizes[i - 1]), residuals[i - 1])
        out = restorer_forward(candidate, p, f"stage{i}/", cfg.restorer_config(i))
        outputs.append(out)
    return PipelineOutput(levels=outputs)


def forward_mef(i1, i2, params: dict, cfg: PipelineConfig = PipelineConfig()) -> PipelineOutput:
    """Fuse a two-exposure pair, then restore the fused image."""
    p = {k: ad.as_var(v) for k, v in params.items()}
    if "fusion/head/w" not in p:
        raise ValueError("parameters carry no fusion block (init with with_fusion=True)")
    fused, _ = fusion.fuse_pair_graph(ad.as_var(i1), ad.as_var(i2), p, "fusion/")
    return forward(fused, p, cfg)


# -- config-carrying weight files ------------------------------------------------


def _encode_config(cfg: PipelineConfig) -> np.ndarray:
    kinds = [_KIND_CODES[k] for k in cfg.kinds()]
    head = [
        1.0,
        float(cfg.levels),
        float(cfg.in_channels),
        float(cfg.width),
        float(cfg.scales),
        float(cfg.blocks_per_scale),
        float(cfg.window),
        float(cfg.expansion),
        1.0 if cfg.with_fusion else 0.0,
    ]
    return np.asarray(head + kinds, dtype=np.float64)


def _decode_config(vec: np.ndarray) -> PipelineConfig:
    if vec[0] != 1.0:
        raise weights.FormatError(f"unknown embedded config version {vec[0]}")
    levels = int(vec[1])
    kinds = tuple(_KIND_NAMES[v] for v in vec[9 : 9 + levels])
    return PipelineConfig(
        levels=levels,
        in_channels=int(vec[2]),
        width=int(vec[3]),
        scales=int(vec[4]),
        blocks_per_scale=int(vec[5]),
        window=int(vec[6]),
        expansion=int(vec[7]),
        stage_kinds=kinds,
        with_fusion=bool(vec[8]),
    )


def save_model(params: dict, cfg: PipelineConfig, path) -> None:
    record = {META_NAME: _encode_config(cfg)}
    record.update(params)
    weights.save_params(record, path)


def load_model(path):
    record = weights.load_params(path)
    meta = record.pop(META_NAME, None)
    if meta is None:
        raise weights.FormatError(f"weight file lacks the {META_NAME!r} record")
    return record, _decode_config(meta)
