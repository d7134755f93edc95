"""Cost models and wall-clock benchmark for the frequency block versus a
windowed-attention baseline.

Analytic counts follow the usual conventions: one multiply-add is two
FLOPs, a length-n FFT costs 5*n*log2(n).  The frequency block's count
depends on the window only through the per-window FFT granularity, so at
projection-dominated widths (a few hundred channels) the total is flat in
the window size, while the windowed-attention baseline grows with the
window area.  Peak transient bytes are modeled (host arrays, batched
windows), standing in for device-memory figures.

Wall-clock rows time real forward passes on this host, sequentially and
single-threaded, warmed up, with at least five repeats.  Rows whose
modeled peak exceeds ``BenchConfig.max_bytes`` are marked ``oom`` without
running (deterministic stand-in for allocation failure on small hosts;
set ``max_bytes=0`` to attempt every row), and genuine allocation
failures get the same marker.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from . import autodiff as ad
from . import config, ops
from .blocks import BlockConfig, hdf_block, hdf_block_init

PAPER_SCALE_CHANNELS = 512  # projection-dominated width used for trend checks


def _check_dims(c, h, w, window):
    if min(c, h, w, window) <= 0:
        raise ValueError(f"dimensions must be positive, got C={c} H={h} W={w} window={window}")


def _fft_flops(n: float) -> float:
    return 5.0 * n * math.log2(n)


def hdf_flop_breakdown(c: int, h: int, w: int, window: int, expansion: int = 2) -> dict:
    _check_dims(c, h, w, window)
    wide = expansion * c
    hw = float(h * w)
    nwin = math.ceil(h / window) * math.ceil(w / window)
    win_px = float(window * window)
    conv = 2.0 * hw * c * c * 4 + 2.0 * hw * c * wide * 2
    fft_global = 3.0 * _fft_flops(hw) * c
    fft_window = 2.0 * nwin * _fft_flops(win_px) * wide
    elementwise = (
        6.0 * hw * c  # spectral product
        + 6.0 * hw * c  # softmax gate
        + 6.0 * nwin * win_px * wide  # window mask product
        + 2.0 * 8.0 * hw * c  # normalizations
    )
    total = conv + fft_global + fft_window + elementwise
    return {
        "conv": conv,
        "fft_global": fft_global,
        "fft_window": fft_window,
        "elementwise": elementwise,
        "total": total,
    }


def flops_hdf_block(c: int, h: int, w: int, window: int, expansion: int = 2) -> float:
    return hdf_flop_breakdown(c, h, w, window, expansion)["total"]


def window_attention_flop_breakdown(c: int, h: int, w: int, window: int, mlp_ratio: int = 4) -> dict:
    _check_dims(c, h, w, window)
    if window > min(h, w):
        raise ValueError(f"window {window} larger than map {(h, w)}")
    hw = float(h * w)
    nwin = math.ceil(h / window) * math.ceil(w / window)
    win_px = float(window * window)
    proj = 2.0 * hw * c * c * 4
    mlp = 2.0 * hw * c * (mlp_ratio * c) * 2
    attn = nwin * 2.0 * win_px * win_px * c * 2 + 5.0 * nwin * win_px * win_px
    total = proj + mlp + attn
    return {"proj": proj, "mlp": mlp, "attn": attn, "total": total}


def flops_window_attention(c: int, h: int, w: int, window: int, mlp_ratio: int = 4) -> float:
    return window_attention_flop_breakdown(c, h, w, window, mlp_ratio)["total"]


def hdf_peak_bytes(c: int, h: int, w: int, window: int, expansion: int = 2, itemsize: int = 8) -> int:
    _check_dims(c, h, w, window)
    hw = h * w
    padded = math.ceil(h / window) * window * math.ceil(w / window) * window
    global_stage = hw * c * (4 + 2 * 2 + 2)  # x/q/k/v + two spectra + mixed map
    window_stage = expansion * c * (hw + 2 * 2 * padded)  # wide map + window spectra
    return itemsize * max(global_stage, window_stage)


def window_attention_peak_bytes(c: int, h: int, w: int, window: int, itemsize: int = 8) -> int:
    _check_dims(c, h, w, window)
    hw = h * w
    return itemsize * (3 * hw * c + 2 * hw * window * window)  # qkv + batched score maps


# -- measured forwards --------------------------------------------------------------


def _gelu(x):
    return 0.5 * x * (1.0 + erf(x / math.sqrt(2.0)))


def window_attention_init(c: int, rng: np.random.Generator, mlp_ratio: int = 4) -> dict:
    dt = config.dtype()
    scale = 1.0 / math.sqrt(c)
    return {
        "qkv": (rng.standard_normal((3 * c, c)) * scale).astype(dt),
        "out": (rng.standard_normal((c, c)) * scale).astype(dt),
        "mlp0": (rng.standard_normal((mlp_ratio * c, c)) * scale).astype(dt),
        "mlp1": (rng.standard_normal((c, mlp_ratio * c)) * scale).astype(dt),
    }


def window_attention_forward(x: np.ndarray, p: dict, window: int) -> np.ndarray:
    """Plain (unshifted) window attention block: QK^T softmax inside each
    window, output projection, then a 2-layer pointwise MLP."""
    c, h, w = x.shape
    qkv = np.tensordot(p["qkv"], x, axes=([1], [0]))
    grid = ops.window_partition(qkv, window, window)
    n = window * window
    tokens = grid.windows.reshape(-1, 3, c, n).transpose(1, 0, 3, 2)  # [3, nw, n, c]
    q, k, v = tokens[0], tokens[1], tokens[2]
    scores = np.einsum("wic,wjc->wij", q, k) / math.sqrt(c)
    scores -= scores.max(axis=-1, keepdims=True)
    np.exp(scores, out=scores)
    scores /= scores.sum(axis=-1, keepdims=True)
    mixed = np.einsum("wij,wjc->wic", scores, v)
    merged = ops.window_merge(
        ops.WindowGrid(
            mixed.transpose(0, 2, 1).reshape(-1, c, window, window),
            (c,) + grid.origin_shape[1:],
            grid.window,
            grid.pad,
        )
    )
    attended = x + np.tensordot(p["out"], merged, axes=([1], [0]))
    hidden = _gelu(np.tensordot(p["mlp0"], attended, axes=([1], [0])))
    return attended + np.tensordot(p["mlp1"], hidden, axes=([1], [0]))


def _timed(fn, repeats: int):
    fn()  # warm-up (also triggers any jit compilation)
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    arr = np.asarray(samples)
    return float(arr.mean()), float(arr.std(ddof=1) if repeats > 1 else 0.0)


# -- the harness ---------------------------------------------------------------------


@dataclass(frozen=True)
class BenchConfig:
    mechanisms: tuple = ("hdf", "window_attn")
    windows: tuple = (8, 32, 64, 128)
    maps: tuple = ((256, 256),)
    channels: int = 8
    expansion: int = 2
    mlp_ratio: int = 4
    repeats: int = 5
    seed: int = 0
    max_bytes: int = 2_000_000_000  # modeled-peak gate; 0 attempts every row

    def __post_init__(self):
        if self.repeats < 5:
            raise ValueError("need at least 5 repeats for a stable mean/stddev")


CSV_COLUMNS = (
    "mechanism",
    "window",
    "map_h",
    "map_w",
    "channels",
    "flops",
    "peak_bytes",
    "mean_s",
    "std_s",
    "status",
)


@dataclass
class CostReport:
    rows: list = field(default_factory=list)

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write(",".join(CSV_COLUMNS) + "\n")
            for row in self.rows:
                f.write(",".join(_fmt(row[c]) for c in CSV_COLUMNS) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def run_bench(cfg: BenchConfig = BenchConfig()) -> CostReport:
    rng = np.random.default_rng(cfg.seed)
    report = CostReport()
    itemsize = config.dtype().itemsize
    for mech in cfg.mechanisms:
        for h, w in cfg.maps:
            x = rng.standard_normal((cfg.channels, h, w)).astype(config.dtype())
            if mech == "window_attn":
                wa_params = window_attention_init(cfg.channels, rng, cfg.mlp_ratio)
            elif mech != "hdf":
                raise ValueError(f"unknown mechanism {mech!r}")
            for window in cfg.windows:
                row = {
                    "mechanism": mech,
                    "window": window,
                    "map_h": h,
                    "map_w": w,
                    "channels": cfg.channels,
                    "mean_s": float("nan"),
                    "std_s": float("nan"),
                    "status": "ok",
                }
                try:
                    if mech == "hdf":
                        bc = BlockConfig(window=window, expansion=cfg.expansion)
                        params = hdf_block_init(cfg.channels, _bench_rng_factory(rng), "", bc)
                        lifted = ad.lift(params, requires_grad=False)
                        row["flops"] = flops_hdf_block(cfg.channels, h, w, window, cfg.expansion)
                        row["peak_bytes"] = hdf_peak_bytes(
                            cfg.channels, h, w, window, cfg.expansion, itemsize
                        )

                        def fn():
                            with ad.no_grad():
                                hdf_block(ad.Var(x), lifted, "", bc)

                    else:
                        if window > min(h, w):
                            raise ValueError("window larger than map")
                        row["flops"] = flops_window_attention(cfg.channels, h, w, window, cfg.mlp_ratio)
                        row["peak_bytes"] = window_attention_peak_bytes(
                            cfg.channels, h, w, window, itemsize
                        )

                        def fn():
                            window_attention_forward(x, wa_params, window)

                    if cfg.max_bytes and row["peak_bytes"] > cfg.max_bytes:
                        raise MemoryError
                    row["mean_s"], row["std_s"] = _timed(fn, cfg.repeats)
                except MemoryError:
                    row["status"] = "oom"
                    row.setdefault("flops", float("nan"))
                    row.setdefault("peak_bytes", 0)
                except ValueError as e:
                    row["status"] = f"skipped({e})".replace(",", ";")
                    row.setdefault("flops", float("nan"))
                    row.setdefault("peak_bytes", 0)
                report.rows.append(row)
    return report


def _bench_rng_factory(rng: np.random.Generator):
    def rng_for(name: str) -> np.random.Generator:
        return np.random.default_rng(rng.integers(2**63))

    return rng_for


# -- kernel-lane comparison ------------------------------------------------------------


def compare_backends(repeats: int = 5, seed: int = 0) -> CostReport:
    """Times the numba and numpy kernel lanes on the training-shaped
    convolution/pooling calls and reports the speed ratio."""
    rng = np.random.default_rng(seed)
    cases = [
        ("conv3x3", (16, 64, 64), (16, 16, 3, 3), 1),
        ("conv3x3_s2", (16, 64, 64), (32, 16, 3, 3), 2),
        ("conv1x1", (32, 64, 64), (32, 32, 1, 1), 1),
    ]
    report = CostReport()
    saved = config.backend()
    try:
        for name, xs, ks, stride in cases:
            x = rng.standard_normal(xs).astype(config.dtype())
            k = rng.standard_normal(ks).astype(config.dtype())
            for lane in ("numba", "numpy"):
                config.set_backend(lane)
                mean, std = _timed(lambda: ops.conv2d(x, k, stride=stride), repeats)
                report.rows.append(
                    {
                        "mechanism": f"{name}[{lane}]",
                        "window": 0,
                        "map_h": xs[1],
                        "map_w": xs[2],
                        "channels": xs[0],
                        "flops": 2.0 * np.prod(ks) * (xs[1] // stride) * (xs[2] // stride),
                        "peak_bytes": 0,
                        "mean_s": mean,
                        "std_s": std,
                        "status": "ok",
                    }
                )
        x = rng.standard_normal((16, 64, 64)).astype(config.dtype())
        for lane in ("numba", "numpy"):
            config.set_backend(lane)
            for kind in ("avg", "max"):
                mean, std = _timed(lambda: ops.pool2(x, kind), repeats)
                report.rows.append(
                    {
                        "mechanism": f"pool_{kind}[{lane}]",
                        "window": 2,
                        "map_h": 64,
                        "map_w": 64,
                        "channels": 16,
                        "flops": float(4 * 16 * 32 * 32),
                        "peak_bytes": 0,
                        "mean_s": mean,
                        "std_s": std,
                        "status": "ok",
                    }
                )
    finally:
        config.set_backend(saved)
    return report
