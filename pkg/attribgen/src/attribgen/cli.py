"""Command line: generate heatmap files, or serve a model to the engine.

    attribgen gen --model net.py --method sm --images DIR --out DIR
    attribgen serve --model net.py --protocol stdio

Exit codes: 0 ok, 2 unusable configuration, 4 unreadable data.
"""

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import methods
from .errors import ConfigError, DataError, GenError, ModelError
from .interchange import discover_rasters, load_labels, load_raster, \
    write_heatmap
from .modelio import load_model
from .serve import serve_http, serve_stdio

METHODS = ("sm", "ig", "sg", "gb", "gc", "lime")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="attribgen",
        description="Attribution heatmap generation and model serving "
                    "for torch models.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="write one heatmap per image")
    gen.add_argument("--model", required=True,
                     help="model .py build script or TorchScript file")
    gen.add_argument("--method", required=True, choices=METHODS)
    gen.add_argument("--images", required=True,
                     help="directory of .png/.f32 inputs")
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--seed", type=int, default=0,
                     help="base seed; image index is added per file")
    gen.add_argument("--value-range", default="0,1", metavar="LO,HI",
                     help="declared input range (default 0,1)")
    gen.add_argument("--target-class", type=int, default=None,
                     help="class to explain (default: per-image argmax)")
    gen.add_argument("--steps", type=int, default=64,
                     help="ig: path integration steps (default 64)")
    gen.add_argument("--baseline", default="zero",
                     help="ig: 'zero' or a raster file (default zero)")
    gen.add_argument("--samples", type=int, default=50,
                     help="sg/lime: perturbation count (default 50)")
    gen.add_argument("--sigma", type=float, default=None,
                     help="sg: noise std (default 0.15 x range width)")
    gen.add_argument("--layer", default=None,
                     help="gc: conv layer name (default: last Conv2d)")
    gen.add_argument("--segments", default=None,
                     help="lime: directory of segment-label rasters "
                          "(the engine's segment cache)")
    gen.add_argument("--fill", default="mean", choices=("mean", "black"),
                     help="lime: replacement for hidden segments "
                          "(default mean)")

    srv = sub.add_parser("serve", help="answer score requests for a model")
    srv.add_argument("--model", required=True)
    srv.add_argument("--protocol", required=True, choices=("stdio", "http"))
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8765)
    return ap


def _parse_range(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"--value-range must be 'lo,hi', got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigError(f"--value-range must be numeric, got {text!r}") \
            from None
    if not lo < hi:
        raise ConfigError(f"--value-range needs lo < hi, got {text!r}")
    return lo, hi


def _label_file(segments_dir: Path, stem: str) -> Path:
    for name in (f"{stem}.segments.f32", f"{stem}.segments.png",
                 f"{stem}.f32", f"{stem}.png"):
        p = segments_dir / name
        if p.is_file():
            return p
    raise DataError(f"no segment labels for {stem!r} in {segments_dir}")


def cmd_gen(args) -> int:
    lo, hi = _parse_range(args.value_range)
    model = load_model(args.model)
    paths = discover_rasters(args.images)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    segments_dir = None
    if args.method == "lime":
        if args.segments is None:
            raise ConfigError(
                "lime needs --segments pointing at segment-label rasters "
                "(produce them with the engine's segment command)"
            )
        segments_dir = Path(args.segments)
        if not segments_dir.is_dir():
            raise DataError(f"segment directory not found: {segments_dir}")
    sigma = args.sigma if args.sigma is not None else 0.15 * (hi - lo)
    if args.method == "ig" and args.baseline != "zero" \
            and not Path(args.baseline).is_file():
        raise DataError(f"baseline raster not found: {args.baseline}")

    for index, path in enumerate(paths):
        raster = load_raster(path, (lo, hi))
        if args.target_class is not None:
            target = args.target_class
        else:
            target = int(np.argmax(methods.predict_probs(model, raster)))
        seed = args.seed + index
        params = {"target": target}

        if args.method == "sm":
            heat = methods.saliency(model, raster, target)
        elif args.method == "ig":
            baseline = None if args.baseline == "zero" \
                else load_raster(args.baseline, (lo, hi))
            heat = methods.integrated_gradients(
                model, raster, target, steps=args.steps, baseline=baseline)
            params.update(steps=args.steps, baseline=args.baseline)
        elif args.method == "sg":
            heat = methods.smoothgrad(
                model, raster, target, samples=args.samples, sigma=sigma,
                seed=seed)
            params.update(samples=args.samples, sigma=sigma, seed=seed)
        elif args.method == "gb":
            heat = methods.guided_backprop(model, raster, target)
        elif args.method == "gc":
            heat = methods.gradcam(model, raster, target,
                                   layer_name=args.layer)
            params.update(layer=args.layer or "auto")
        else:  # lime
            labels = load_labels(_label_file(segments_dir, path.stem))
            fill = "mean" if args.fill == "mean" else lo
            heat = methods.lime(model, raster, target, labels,
                                samples=args.samples, seed=seed, fill=fill)
            params.update(samples=args.samples, seed=seed, fill=args.fill)

        out_path = out_dir / f"{path.stem}.f32"
        write_heatmap(out_path, heat, args.method, params)
        print(f"{path.stem}: {args.method} -> {out_path}")
    print(f"wrote {len(paths)} heatmaps to {out_dir}")
    return 0


def cmd_serve(args) -> int:
    model = load_model(args.model)
    if args.protocol == "stdio":
        serve_stdio(model)
    else:
        serve_http(model, args.host, args.port)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen":
            return cmd_gen(args)
        return cmd_serve(args)
    except (ConfigError, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataError, GenError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
