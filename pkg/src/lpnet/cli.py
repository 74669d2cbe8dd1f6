"""Command-line interface.

Subcommands: train-lpae, encode, decode, train-sr, sr, metrics, flops,
pyramid.  Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric
failure.  All commands are deterministic under a fixed seed.
"""

import argparse
import csv
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import analysis as A
from . import imageio as io
from . import model as M
from . import optim
from . import pyramid as P
from . import sr as S
from . import train as T
from .container import MAGIC_TENSOR, read_tensors, write_tensors
from .errors import DataError, LpnetError, NumericError, ShapeError


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(path, cfg, history, checkpoint):
    manifest = {
        "config": {k: list(v) if isinstance(v, tuple) else v
                   for k, v in vars(cfg).items()},
        "seed": cfg.seed,
        "checkpoint_sha256": _sha256(checkpoint),
        "history": history,
    }
    tmp = Path(str(path) + ".tmp")
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    tmp.replace(path)


def _write_csv(path, history):
    if not history:
        return
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(history[0]))
        writer.writeheader()
        writer.writerows(history)


def _load_train_config(args):
    cfg = optim.load_config(args.config) if args.config else optim.TrainConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def cmd_train_lpae(args):
    cfg = _load_train_config(args)
    corpus = io.load_corpus(args.corpus)
    params, history = T.train_autoencoder(
        corpus, cfg, log=lambda row: print(
            f"epoch {row['epoch']:4d} step {row['step']:6d} "
            f"lr {row['lr']:.6g} l_r {row['l_r']:.5f} l_e {row['l_e']:.5f} "
            f"l_s {row['l_s']:.5f} l_total {row['l_total']:.5f}"))
    M.save_checkpoint(params, args.out)
    _write_csv(str(args.out) + ".log.csv", history)
    _write_manifest(str(args.out) + ".manifest.json", cfg, history, args.out)
    print(f"saved checkpoint {args.out}")


def _detail_view(det):
    # detail bands are signed; shift to mid-gray for viewing
    return np.clip(det + 0.5, 0.0, 1.0)


def _check_divisible(img, levels):
    h, w = img.shape[2:]
    div = 1 << levels
    if h % div or w % div:
        raise DataError(
            f"image {h}x{w} not divisible by {div} (required for {levels} levels)")


def cmd_encode(args):
    params = M.load_checkpoint(args.ckpt)
    img = io.load_image(args.image)
    _check_divisible(img, args.levels)
    p = M.encode_pyramid(params, img, args.levels)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tensors = {"approx": p.coarsest}
    io.save_image(np.clip(p.coarsest, 0, 1), out / "approx.ppm")
    for k, det in enumerate(p.details, start=1):
        tensors[f"detail_{k}"] = det
        io.save_image(_detail_view(det), out / f"detail_{k}.ppm")
    write_tensors(out / "components.lptn", tensors, MAGIC_TENSOR)
    print(f"wrote {len(tensors)} components to {out}")


def cmd_decode(args):
    params = M.load_checkpoint(args.ckpt)
    tensors = read_tensors(Path(args.components) / "components.lptn",
                           MAGIC_TENSOR)
    if "approx" not in tensors:
        raise DataError("components.lptn has no approximation tensor")
    details = [tensors[k] for k in sorted(t for t in tensors
                                          if t.startswith("detail_"))]
    p = P.PyramidDecomposition(details=details, coarsest=tensors["approx"])
    recon = M.decode_pyramid(params, p)
    io.save_image(np.clip(recon, 0, 1), args.out)
    print(f"wrote reconstruction {args.out}")
    if args.original:
        orig = io.load_image(args.original)
        val = A.psnr(orig, np.clip(recon, 0, 1))
        print(f"PSNR vs original: {_fmt_psnr(val)} dB")


def cmd_train_sr(args):
    cfg = _load_train_config(args)
    lpae = M.load_checkpoint(args.lpae)
    corpus = io.load_corpus(args.corpus)
    embed, history = T.train_sr(
        corpus, cfg, lpae, log=lambda row: print(
            f"epoch {row['epoch']:4d} step {row['step']:6d} "
            f"lr {row['lr']:.6g} l_total {row['l_total']:.5f}"))
    S.save_embed(embed, args.out)
    _write_csv(str(args.out) + ".log.csv", history)
    _write_manifest(str(args.out) + ".manifest.json", cfg, history, args.out)
    print(f"saved embedding checkpoint {args.out}")


def cmd_sr(args):
    embed = S.load_embed(args.embed)
    lpae = M.load_checkpoint(args.lpae)
    img = io.load_image(args.image)
    sr_img, _ = S.sr_forward(embed, lpae, img, embed.levels)
    io.save_image(np.clip(sr_img, 0, 1), args.out)
    baseline = img
    for _ in range(embed.levels):
        baseline = P.bicubic_up2(baseline)
    base_path = Path(args.out).with_suffix(".bicubic.ppm")
    io.save_image(np.clip(baseline, 0, 1), base_path)
    print(f"wrote {args.out} (x{2 ** embed.levels}) and baseline {base_path}")


def _fmt_psnr(val):
    return "inf" if math.isinf(val) else f"{val:.2f}"


def cmd_metrics(args):
    a, b = io.load_image(args.image_a), io.load_image(args.image_b)
    print(f"PSNR: {_fmt_psnr(A.psnr(a, b))}, SSIM: {A.ssim(a, b):.4f}")


def _load_spec(name):
    if name in ("vgg16", "resnet50"):
        return A.builtin_netspec(name)
    return A.load_netspec(name)


def cmd_flops(args):
    spec = _load_spec(args.netspec)
    n = A.complexity(spec)
    if n == 0:
        print("warning: empty spec, complexity 0", file=sys.stderr)
    print(f"complexity: {n} ({n / 1e9:.2f}B)")
    print(f"flops: {2 * n} ({2 * n / 1e9:.2f}B)")
    if args.connected:
        spec2 = _load_spec(args.connected)
        n2 = A.complexity(spec2)
        print(f"connected complexity: {n2} ({n2 / 1e9:.2f}B)")
        print(f"acceleration rate: {A.acceleration_rate(n, n2):.2f}")


def cmd_pyramid(args):
    img = io.load_image(args.image)
    _check_divisible(img, args.levels)
    p = P.lp_build(img, args.levels)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tensors = {"approx": p.coarsest}
    io.save_image(np.clip(p.coarsest, 0, 1), out / "approx.ppm")
    for k, det in enumerate(p.details, start=1):
        tensors[f"detail_{k}"] = det
        io.save_image(_detail_view(det), out / f"detail_{k}.ppm")
    write_tensors(out / "components.lptn", tensors, MAGIC_TENSOR)
    err = float(np.max(np.abs(P.lp_collapse(p) - img)))
    print(f"wrote {len(tensors)} components to {out}")
    print(f"collapse max error: {err:.3e}")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="lpnet",
        description="Pyramid autoencoder training, super-resolution, metrics "
                    "and conv-net cost analysis")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, **kw):
        p = sub.add_parser(name, **kw)
        p.set_defaults(fn=fn)
        p.add_argument("--seed", type=int, default=None)
        return p

    p = add("train-lpae", cmd_train_lpae, help="train the autoencoder")
    p.add_argument("corpus")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)

    p = add("encode", cmd_encode, help="decompose an image into components")
    p.add_argument("image")
    p.add_argument("--ckpt", required=True)
    p.add_argument("-K", "--levels", type=int, default=1)
    p.add_argument("--out", required=True)

    p = add("decode", cmd_decode, help="reconstruct from encoded components")
    p.add_argument("components", help="directory written by encode")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--original", default=None)

    p = add("train-sr", cmd_train_sr, help="train the super-resolution embedding")
    p.add_argument("corpus")
    p.add_argument("--config", default=None)
    p.add_argument("--lpae", required=True)
    p.add_argument("--out", required=True)

    p = add("sr", cmd_sr, help="upscale an image")
    p.add_argument("image")
    p.add_argument("--embed", required=True)
    p.add_argument("--lpae", required=True)
    p.add_argument("--out", required=True)

    p = add("metrics", cmd_metrics, help="PSNR/SSIM between two images")
    p.add_argument("image_a")
    p.add_argument("image_b")

    p = add("flops", cmd_flops, help="cost model for a network spec")
    p.add_argument("netspec", help="path or builtin name (vgg16, resnet50)")
    p.add_argument("connected", nargs="?", default=None)

    p = add("pyramid", cmd_pyramid, help="classical pyramid build/collapse")
    p.add_argument("image")
    p.add_argument("-K", "--levels", type=int, default=1)
    p.add_argument("--out", required=True)

    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.fn(args)
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (DataError, ShapeError, LpnetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
