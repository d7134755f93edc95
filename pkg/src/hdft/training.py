"""Desk-scale trainer: synthetic exposure data, the ADAM loop, and
bit-exact checkpoint/resume.

Synthetic scenes are smooth color gradients with a few solid shapes;
degraded counterparts apply gamma over/under-exposure plus mild noise
(clipped), which stands in for the usual exposure-error corpora at a
size that trains on one core.  Crops use 64x64 by default; everything is
size-parametric, so larger crops work given time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import config, metrics, weights
from .losses import LossWeights, total_loss
from .pipeline import PipelineConfig, forward, forward_mef


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    lr: float = 2e-4
    lam1: float = 1.0
    lam2: float = 1.0
    iters: int = 2000
    seed: int = 0
    crop: int = 64
    recon: str = "l1"
    checkpoint_interval: int = 0
    checkpoint_path: str | None = None

    def __post_init__(self):
        if self.lr <= 0 or self.crop <= 0 or self.iters < 0:
            raise ValueError("lr and crop must be positive, iters nonnegative")


@dataclass
class TrainResult:
    params: dict
    history: list  # (iteration, loss, psnr)
    state: ad.AdamState


# -- synthetic data ---------------------------------------------------------------


def _clean_scene(rng: np.random.Generator, size: int) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size] / size
    img = np.zeros((3, size, size))
    for _ in range(3):
        fx, fy = rng.uniform(0.4, 1.8, size=2)
        phase = rng.uniform(0.0, 2.0 * math.pi)
        wave = np.cos(2.0 * math.pi * (fx * xx + fy * yy) + phase)
        img += rng.uniform(0.2, 1.0, size=3)[:, None, None] * wave
    lo, hi = img.min(), img.max()
    img = 0.15 + 0.7 * (img - lo) / (hi - lo + 1e-12)
    for _ in range(int(rng.integers(2, 5))):
        color = rng.uniform(0.05, 0.95, size=3)[:, None, None]
        cy, cx = rng.uniform(0.15, 0.85, size=2) * size
        if rng.random() < 0.5:
            r = rng.uniform(0.08, 0.22) * size
            mask = (yy * size - cy) ** 2 + (xx * size - cx) ** 2 < r * r
        else:
            hh, ww = rng.uniform(0.1, 0.3, size=2) * size
            mask = (np.abs(yy * size - cy) < hh) & (np.abs(xx * size - cx) < ww)
        img = np.where(mask[None], 0.75 * color + 0.25 * img, img)
    return np.clip(img, 0.02, 0.98).astype(config.dtype())


def degrade(img: np.ndarray, gamma: float, rng: np.random.Generator, noise: float = 0.01) -> np.ndarray:
    out = img**gamma
    if noise:
        out = out + noise * rng.standard_normal(img.shape)
    return np.clip(out, 0.0, 1.0).astype(config.dtype())


def synth_dataset(
    seed: int,
    n: int,
    size: int,
    kind: str = "pairs",
    gammas: tuple = (0.4, 2.5),
    noise: float = 0.01,
) -> list:
    """``pairs`` yields (degraded, clean); ``mef`` yields (under, over, clean)."""
    if size % 8:
        raise ValueError(f"size must be divisible by 8, got {size}")
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        clean = _clean_scene(rng, size)
        if kind == "pairs":
            gamma = gammas[i % len(gammas)]
            out.append((degrade(clean, gamma, rng, noise), clean))
        elif kind == "mef":
            under = degrade(clean, max(gammas), rng, noise)
            over = degrade(clean, min(gammas), rng, noise)
            out.append((under, over, clean))
        else:
            raise ValueError(f"kind must be pairs or mef, got {kind!r}")
    return out


# -- checkpointing -----------------------------------------------------------------


def _limbs(value: int, count: int) -> list:
    return [float((value >> (32 * i)) & 0xFFFFFFFF) for i in range(count)]


def _unlimbs(vals) -> int:
    return sum(int(v) << (32 * i) for i, v in enumerate(vals))


def _pack_rng(rng: np.random.Generator) -> np.ndarray:
    st = rng.bit_generator.state
    if st["bit_generator"] != "PCG64":
        raise ValueError("checkpointing expects the PCG64 generator")
    vec = (
        _limbs(st["state"]["state"], 4)
        + _limbs(st["state"]["inc"], 4)
        + [float(st["has_uint32"])]
        + _limbs(st["uinteger"], 1)
    )
    return np.asarray(vec, dtype=np.float64)


def _unpack_rng(vec: np.ndarray) -> np.random.Generator:
    rng = np.random.default_rng(0)
    rng.bit_generator.state = {
        "bit_generator": "PCG64",
        "state": {"state": _unlimbs(vec[0:4]), "inc": _unlimbs(vec[4:8])},
        "has_uint32": int(vec[8]),
        "uinteger": _unlimbs(vec[9:10]),
    }
    return rng


def save_checkpoint(path, params: dict, state: ad.AdamState, next_iter: int, rng) -> None:
    record = dict(params)
    for name, m in state.m.items():
        record[f"opt/m/{name}"] = m
        record[f"opt/v/{name}"] = state.v[name]
    record["opt/meta"] = np.asarray(
        [float(state.t), float(next_iter), state.lr, state.beta1, state.beta2, state.eps],
        dtype=np.float64,
    )
    record["rng/state"] = _pack_rng(rng)
    weights.save_params(record, path)


def load_checkpoint(path):
    record = weights.load_params(path)
    meta = record.pop("opt/meta")
    rng = _unpack_rng(record.pop("rng/state"))
    state = ad.AdamState(lr=meta[2], beta1=meta[3], beta2=meta[4], eps=meta[5], t=int(meta[0]))
    params = {}
    for name, arr in record.items():
        if name.startswith("opt/m/"):
            state.m[name[len("opt/m/") :]] = arr
        elif name.startswith("opt/v/"):
            state.v[name[len("opt/v/") :]] = arr
        else:
            params[name] = arr
    return params, state, int(meta[1]), rng


# -- the loop ----------------------------------------------------------------------


def _crop(sample: tuple, crop: int, rng: np.random.Generator) -> tuple:
    h, w = sample[0].shape[1], sample[0].shape[2]
    if h == crop and w == crop:
        return sample
    if h < crop or w < crop:
        raise ValueError(f"images {(h, w)} smaller than crop {crop}")
    top = int(rng.integers(h - crop + 1))
    left = int(rng.integers(w - crop + 1))
    return tuple(img[:, top : top + crop, left : left + crop] for img in sample)


def train(
    dataset: list,
    tcfg: TrainConfig = TrainConfig(),
    pcfg: PipelineConfig | None = None,
    params: dict | None = None,
    resume: str | None = None,
) -> TrainResult:
    """forward -> loss -> backward -> ADAM; deterministic for a fixed seed
    and backend.  Items are (input, gt) pairs or (under, over, gt) triples."""
    if not dataset:
        raise ValueError("dataset is empty")
    mef = len(dataset[0]) == 3
    if pcfg is None:
        pcfg = PipelineConfig(with_fusion=mef)
    loss_w = LossWeights(lam1=tcfg.lam1, lam2=tcfg.lam2, levels=pcfg.levels)

    start = 0
    if resume is not None:
        params, state, start, rng = load_checkpoint(resume)
    else:
        if params is None:
            params = init_params_for(tcfg, pcfg)
        state = ad.AdamState(lr=tcfg.lr)
        rng = np.random.default_rng(tcfg.seed)

    history = []
    for it in range(start, tcfg.iters):
        sample = _crop(dataset[int(rng.integers(len(dataset)))], tcfg.crop, rng)
        gt = sample[-1]
        lifted = ad.lift(params)
        if mef:
            out = forward_mef(sample[0], sample[1], lifted, pcfg)
        else:
            out = forward(sample[0], lifted, pcfg)
        loss = total_loss(out, gt, loss_w, tcfg.recon)
        value = float(loss.value)
        if not math.isfinite(value):
            raise TrainingDiverged(f"non-finite loss {value} at iteration {it}")
        grads = ad.backward(loss)
        ad.adam_step(params, grads, state)
        history.append((it, value, metrics.psnr(out.final, gt)))
        if (
            tcfg.checkpoint_interval
            and tcfg.checkpoint_path
            and (it + 1) % tcfg.checkpoint_interval == 0
        ):
            save_checkpoint(tcfg.checkpoint_path, params, state, it + 1, rng)
    return TrainResult(params=params, history=history, state=state)


def init_params_for(tcfg: TrainConfig, pcfg: PipelineConfig) -> dict:
    from .pipeline import init_params

    return init_params(tcfg.seed, pcfg)


def write_history(path, history) -> None:
    with open(path, "w") as f:
        f.write("iter,loss,psnr\n")
        for it, loss, p in history:
            f.write(f"{it},{loss:.6g},{p:.6g}\n")
