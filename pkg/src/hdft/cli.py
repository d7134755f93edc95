"""Command-line surface: enhance, fuse, decompose, reconstruct, train,
metrics, bench, grad-check.

Exit codes: 0 success, 1 usage error, 2 runtime error.  All randomness is
seeded (``--seed``, default 0) and numeric output is printed with six
significant digits.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import bench as bench_mod
from . import config, fusion, imageio, metrics, pyramid, training, weights
from .configfile import Config, ConfigError
from .gradsuite import standard_checks
from .pipeline import PipelineConfig, forward, forward_mef, init_params, load_model, save_model


def _f(x) -> str:
    return f"{x:.6g}"


def _load_chw(path):
    return imageio.to_chw(imageio.load_image(path))


def _save_chw(img, path):
    imageio.save_image(imageio.to_hwc(np.clip(img, 0.0, 1.0)), path)


# -- commands -----------------------------------------------------------------


def _cmd_enhance(args) -> int:
    params, cfg = load_model(args.weights)
    out = forward(_load_chw(args.infile), params, cfg)
    _save_chw(out.final, args.out)
    return 0


def _cmd_fuse(args) -> int:
    params, cfg = load_model(args.weights)
    under = _load_chw(args.under)
    over = _load_chw(args.over)
    if args.initial_only:
        fused = fusion.fuse_pair(under, over, params)
    else:
        fused = forward_mef(under, over, params, cfg).final
    _save_chw(fused, args.out)
    return 0


def _cmd_decompose(args) -> int:
    img = _load_chw(args.infile)
    pyr = pyramid.decompose(img, args.levels)
    os.makedirs(args.out_dir, exist_ok=True)
    files = []
    for i, res in enumerate(pyr.residuals, start=1):
        name = f"level{i}.ppm"
        _save_chw(res + 0.5, os.path.join(args.out_dir, name))
        files.append({"file": name, "level": i, "kind": "residual"})
    base_name = f"level{args.levels}.ppm"
    _save_chw(pyr.base, os.path.join(args.out_dir, base_name))
    files.append({"file": base_name, "level": args.levels, "kind": "base"})
    meta = {
        "levels": args.levels,
        "residual_offset": 0.5,
        "note": "residual images are stored offset by +0.5 for visibility",
        "files": files,
    }
    with open(os.path.join(args.out_dir, "metadata.json"), "w") as f:
        json.dump(meta, f, indent=2)
    return 0


def _cmd_reconstruct(args) -> int:
    with open(os.path.join(args.in_dir, "metadata.json")) as f:
        meta = json.load(f)
    offset = meta["residual_offset"]
    residuals, base = [], None
    for entry in meta["files"]:
        img = _load_chw(os.path.join(args.in_dir, entry["file"]))
        if entry["kind"] == "residual":
            residuals.append(img - offset)
        else:
            base = img
    out = pyramid.reconstruct(pyramid.Pyramid(residuals=residuals, base=base))
    _save_chw(out, args.out)
    return 0


def _parse_stage_kinds(raw, levels):
    if raw is None:
        return ()
    kinds = tuple(k.strip() for k in raw.split(","))
    if len(kinds) != levels or any(k not in ("hdf", "conv") for k in kinds):
        raise ConfigError(f"model.stages needs {levels} of hdf|conv, got {raw!r}")
    return kinds


def _dataset_from_config(cfg: Config, seed: int):
    kind = cfg.get_str("data.kind", "synth-pairs")
    if kind in ("synth-pairs", "synth-mef"):
        return training.synth_dataset(
            seed=cfg.get_int("data.seed", seed),
            n=cfg.get_int("data.count", 4),
            size=cfg.get_int("data.size", 64),
            kind="mef" if kind == "synth-mef" else "pairs",
            noise=cfg.get_float("data.noise", 0.01),
        )
    if kind == "files":
        gts = [_load_chw(p) for p in cfg.get_str("data.gts", "").split(",") if p]
        unders = cfg.get_str("data.unders", None)
        if unders is not None:
            u = [_load_chw(p) for p in unders.split(",") if p]
            o = [_load_chw(p) for p in cfg.get_str("data.overs", "").split(",") if p]
            if not (len(u) == len(o) == len(gts)):
                raise ConfigError("data.unders/overs/gts must list the same number of files")
            return list(zip(u, o, gts))
        ins = [_load_chw(p) for p in cfg.get_str("data.inputs", "").split(",") if p]
        if len(ins) != len(gts) or not ins:
            raise ConfigError("data.inputs and data.gts must list the same number of files")
        return list(zip(ins, gts))
    raise ConfigError(f"data.kind must be synth-pairs, synth-mef or files, got {kind!r}")


def _cmd_train(args) -> int:
    cfg = Config.load(args.config)
    dtype = cfg.get_str("runtime.dtype", None)
    if dtype:
        config.set_dtype(dtype)
    backend = cfg.get_str("runtime.backend", None)
    if backend:
        config.set_backend(backend)
    seed = cfg.get_int("train.seed", args.seed)
    levels = cfg.get_int("model.levels", 4)
    pcfg = PipelineConfig(
        levels=levels,
        width=cfg.get_int("model.width", 16),
        scales=cfg.get_int("model.scales", 3),
        blocks_per_scale=cfg.get_int("model.blocks", 1),
        window=cfg.get_int("model.window", 8),
        expansion=cfg.get_int("model.expansion", 2),
        stage_kinds=_parse_stage_kinds(cfg.get_str("model.stages", None), levels),
        with_fusion=cfg.get_str("data.kind", "synth-pairs") in ("synth-mef",)
        or cfg.get_str("data.unders", None) is not None,
    )
    tcfg = training.TrainConfig(
        lr=cfg.get_float("train.lr", 2e-4),
        lam1=cfg.get_float("train.lam1", 1.0),
        lam2=cfg.get_float("train.lam2", 1.0),
        iters=cfg.get_int("train.iters", 500),
        seed=seed,
        crop=cfg.get_int("train.crop", 64),
        recon=cfg.get_str("train.recon", "l1"),
        checkpoint_interval=cfg.get_int("train.checkpoint_interval", 0),
        checkpoint_path=cfg.get_str("train.checkpoint_path", None),
    )
    dataset = _dataset_from_config(cfg, seed)
    cfg.reject_unknown()
    result = training.train(dataset, tcfg, pcfg, resume=args.resume)
    save_model(result.params, pcfg, args.out)
    history_path = args.history or (os.path.splitext(args.out)[0] + "_history.csv")
    training.write_history(history_path, result.history)
    last = result.history[-1] if result.history else (0, float("nan"), float("nan"))
    print(f"iters={len(result.history)} loss={_f(last[1])} psnr={_f(last[2])}")
    print(f"weights={args.out}")
    print(f"history={history_path}")
    return 0


def _cmd_metrics(args) -> int:
    ref = _load_chw(args.ref)
    test = _load_chw(args.test)
    print(f"psnr={_f(metrics.psnr(test, ref))}")
    print(f"ssim={_f(metrics.ssim(test, ref))}")
    if args.sources:
        srcs = [_load_chw(p) for p in args.sources]
        print(f"mef_ssim={_f(metrics.mef_ssim(test, srcs))}")
    return 0


def _parse_maps(raw):
    out = []
    for part in raw.split(","):
        h, _, w = part.lower().partition("x")
        out.append((int(h), int(w or h)))
    return tuple(out)


def _cmd_bench(args) -> int:
    if args.compare_backends:
        report = bench_mod.compare_backends(repeats=args.repeats, seed=args.seed)
    else:
        bcfg = bench_mod.BenchConfig(
            mechanisms=tuple(args.mechanisms.split(",")),
            windows=tuple(int(w) for w in args.windows.split(",")),
            maps=_parse_maps(args.maps),
            channels=args.channels,
            repeats=args.repeats,
            seed=args.seed,
        )
        report = bench_mod.run_bench(bcfg)
    report.to_csv(args.out)
    for row in report.rows:
        print(
            f"{row['mechanism']} window={row['window']} map={row['map_h']}x{row['map_w']} "
            f"flops={_f(row['flops'])} mean_s={_f(row['mean_s'])} status={row['status']}"
        )
    print(f"report={args.out}")
    return 0


def _cmd_grad_check(args) -> int:
    reports = standard_checks(h=args.h, seed=args.seed)
    worst = 0.0
    for name, rep in reports.items():
        print(f"{name}: max_rel_err={_f(rep.max_rel_err)}")
        worst = max(worst, rep.max_rel_err)
    ok = worst < args.tol
    print(f"overall={_f(worst)} tol={_f(args.tol)} {'PASS' if ok else 'FAIL'}")
    if args.strict and not ok:
        return 2
    return 0


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdft",
        description="Frequency-domain restoration pipeline: enhancement, fusion, "
        "training, metrics and benchmarks.",
    )
    parser.add_argument("--seed", type=int, default=0, help="global random seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enhance", help="restore one image with trained weights")
    p.add_argument("--weights", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_enhance)

    p = sub.add_parser("fuse", help="fuse an exposure pair and restore the result")
    p.add_argument("--weights", required=True)
    p.add_argument("--under", required=True)
    p.add_argument("--over", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--initial-only", action="store_true", help="write the raw convex fusion")
    p.set_defaults(func=_cmd_fuse)

    p = sub.add_parser("decompose", help="write pyramid levels as images")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("reconstruct", help="rebuild an image from a decompose directory")
    p.add_argument("--in-dir", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("train", help="train from a key=value config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--history", default=None, help="loss history CSV path")
    p.add_argument("--resume", default=None, help="checkpoint to resume from")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("metrics", help="print psnr/ssim (and MEF score with --sources)")
    p.add_argument("--ref", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--sources", nargs="*", default=None)
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("bench", help="cost model + wall-clock benchmark, CSV output")
    p.add_argument("--out", required=True)
    p.add_argument("--mechanisms", default="hdf,window_attn")
    p.add_argument("--windows", default="8,32,64,128")
    p.add_argument("--maps", default="256x256")
    p.add_argument("--channels", type=int, default=8)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument(
        "--compare-backends",
        action="store_true",
        help="time the numba kernel lane against the numpy fallback instead",
    )
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("grad-check", help="finite-difference report for every block")
    p.add_argument("--h", type=float, default=1e-5)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--strict", action="store_true", help="exit 2 when above --tol")
    p.set_defaults(func=_cmd_grad_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 1
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    entry()
