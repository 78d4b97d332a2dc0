"""Command-line entry points: evaluate, sensitivity, segment, baseline.

Flags may come from an INI config file (section ``[irof]``, keys named
like the long flags); explicit flags win over the file. Every artifact
embeds the full effective configuration, and nothing embeds a timestamp,
so a rerun with the same inputs and seeds is byte-identical.

Exit codes: 0 success, 2 configuration error, 3 backend error, 4 data
error. Log level comes from the IROF_LOG environment variable.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import kernels
from .backend import Backend, backend_from_spec
from .baselines import sobel_relevance
from .dataset import discover_images, load_dataset
from .degradation import DEFAULT_SQUARE_SIZE, build_irof_schedule, degrade
from .engine import (
    EVALUATORS,
    IROFResult,
    _ranking_for,
    irof,
    write_curves_csv,
)
from .errors import BackendError, ConfigError, CurveError, DataError, IrofError
from .imagery import compute_dataset_mean, load_image, save_f32, save_png
from .ranking import EVIDENCE_MODES
from .rng import Xoshiro256StarStar, derive_seed
from .segmentation import SlicParams, export_segment_map, slic_segment
from .stats import (
    STATISTICS,
    report_to_json,
    sensitivity_report,
    write_plot_csv,
    write_report_csv,
)
from .svgplot import polyline_chart

log = logging.getLogger("irof")

BUILTIN_DIR = "builtin"  # --heatmaps random=builtin enables an engine method


def _setup_logging() -> None:
    level = os.environ.get("IROF_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _parse_heatmaps(pairs: Sequence[str]) -> Dict[str, str]:
    out: Dict[str, str] = {}
    for pair in pairs:
        name, sep, path = pair.partition("=")
        if not sep or not name or not path:
            raise ConfigError(
                f"--heatmaps needs method=dir pairs, got {pair!r}"
            )
        if name in out:
            raise ConfigError(f"method {name!r} declared twice")
        out[name] = path
    return out


def _parse_range(text: str) -> tuple[float, float]:
    parts = text.replace(",", " ").split()
    if len(parts) != 2:
        raise ConfigError(f"--value-range needs 'lo,hi', got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigError(f"--value-range needs numbers, got {text!r}") from None
    if not lo < hi:
        raise ConfigError(f"--value-range needs lo < hi, got {text!r}")
    return lo, hi


def _read_config_file(path: str) -> Dict[str, str]:
    cp = configparser.ConfigParser()
    try:
        read = cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from None
    if not read:
        raise ConfigError(f"config file not found: {path}")
    merged: Dict[str, str] = {}
    for section in ("DEFAULT", "irof"):
        if section == "DEFAULT" or cp.has_section(section):
            merged.update(dict(cp[section]) if section != "DEFAULT"
                          else dict(cp.defaults()))
    return merged


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="INI file with [irof] section of flag values")
    sp.add_argument("--images", help="directory of input images (.png/.f32)")
    sp.add_argument("--out-dir", help="artifact output directory (default: .)")
    sp.add_argument("--value-range", help="declared image range 'lo,hi' (default 0,1)")
    sp.add_argument("--segments", type=int, help="SLIC target segment count (default 300)")
    sp.add_argument("--compactness", type=float, help="SLIC compactness (default 10.0)")
    sp.add_argument("--iterations", type=int, help="SLIC iterations (default 10)")
    sp.add_argument("--seed", type=int, help="run seed (default 0)")
    sp.add_argument("--workers", type=int, help="worker threads (default: CPU count)")


def _add_eval_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument(
        "--heatmaps", action="append", default=None, metavar="METHOD=DIR",
        help=f"repeatable method=dir pair; DIR '{BUILTIN_DIR}' enables the "
             "built-in random/sobel methods",
    )
    sp.add_argument("--backend", help="proc:CMD | http:URL | onnx:PATH")
    sp.add_argument("--batch-size", type=int, help="inference batch size (default 16)")
    sp.add_argument("--evidence-mode", choices=EVIDENCE_MODES,
                    help="signed-relevance handling (default positive-only)")
    sp.add_argument("--target-class", type=int,
                    help="class index to track (default: per-image sidecar, "
                         "else the model's argmax on the clean image)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irof",
        description="Faithfulness evaluation of attribution heatmaps by "
                    "iterative feature removal.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", help="per-method degradation curves and scores")
    _add_common(ev)
    _add_eval_common(ev)
    ev.add_argument("--scheme", choices=("segment-mean", "segment-black"),
                    help="removal scheme (default segment-mean)")
    ev.add_argument("--replacement", choices=("mean", "black"),
                    help="replacement value; shorthand for --scheme")
    ev.add_argument("--dump-frames-every", type=int, metavar="K",
                    help="also write every K-th degradation frame as PNG")

    se = sub.add_parser("sensitivity", help="paired t-tests against the random baseline")
    _add_common(se)
    _add_eval_common(se)
    se.add_argument("--evaluators",
                    help=f"comma list from {','.join(EVALUATORS)} (default: all)")
    se.add_argument("--fraction", type=float,
                    help="removal fraction for the statistic (default 0.10)")
    se.add_argument("--square-size", type=int,
                    help=f"square edge for the samek evaluator (default {DEFAULT_SQUARE_SIZE})")
    se.add_argument("--statistic", choices=STATISTICS,
                    help="per-image statistic (default fraction)")

    sg = sub.add_parser("segment", help="precompute and cache segment maps")
    _add_common(sg)

    bl = sub.add_parser("baseline", help="emit sobel/random heatmap files")
    _add_common(bl)
    bl.add_argument("--kind", choices=("sobel", "random"),
                    help="baseline heatmap family (default sobel)")

    return parser


class _Effective:
    """Merged view over flags, config file, and defaults (flags win)."""

    def __init__(self, args: argparse.Namespace) -> None:
        self._args = vars(args)
        self._file: Dict[str, str] = {}
        if self._args.get("config"):
            self._file = _read_config_file(self._args["config"])

    def get(self, dest: str, default=None, convert=None):
        key = dest.replace("_", "-")
        value = self._args.get(dest)
        source = f"--{key}"
        if value is None and key in self._file:
            value = self._file[key]
            source = f"config key {key!r}"
        if value is None:
            return default
        # flags argparse already typed come through as non-strings and are
        # returned as-is; raw strings (untyped flags, file values) still
        # need the converter
        if convert is None or not isinstance(value, str):
            return value
        try:
            return convert(value)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(
                f"{source}: cannot parse {value!r} ({exc})"
            ) from None

    def heatmaps(self) -> Dict[str, str]:
        value = self._args.get("heatmaps")
        if value is None and "heatmaps" in self._file:
            value = self._file["heatmaps"].split()
        if not value:
            raise ConfigError("at least one --heatmaps method=dir is required")
        return _parse_heatmaps(value)

    def require(self, dest: str, convert=None):
        value = self.get(dest, None, convert)
        if value is None:
            raise ConfigError(f"--{dest.replace('_', '-')} is required")
        return value


def _slic_params(eff: _Effective) -> SlicParams:
    return SlicParams(
        target_segments=eff.get("segments", 300, int),
        compactness=eff.get("compactness", 10.0, float),
        max_iterations=eff.get("iterations", 10, int),
        rng_seed=eff.get("seed", 0, int),
    )


def _config_echo(eff: _Effective, command: str, **extra) -> dict:
    slic = _slic_params(eff)
    doc = {
        "command": command,
        "images": eff.get("images"),
        "value_range": list(eff.get("value_range", (0.0, 1.0), _parse_range)),
        "segments": slic.target_segments,
        "compactness": slic.compactness,
        "iterations": slic.max_iterations,
        "seed": eff.get("seed", 0, int),
        "workers": _workers(eff),
        "kernel_path": kernels.backend_name(),
        "rng": "xoshiro256** seeded via splitmix64; per-image seed = "
               "run_seed XOR image index",
        "aoc_convention": "rectangular mean of (1 - f_l) over l = 0..L, "
                          "endpoints included, no clipping",
    }
    doc.update(extra)
    return doc


def _workers(eff: _Effective) -> int:
    w = eff.get("workers", None, int)
    if w is None:
        w = os.cpu_count() or 1
    if w < 1:
        raise ConfigError(f"--workers must be >= 1, got {w}")
    return w


def _open_dataset(eff: _Effective):
    images_dir = eff.require("images")
    heatmap_dirs = eff.heatmaps()
    file_dirs = {m: d for m, d in heatmap_dirs.items() if d != BUILTIN_DIR}
    builtins = [m for m, d in heatmap_dirs.items() if d == BUILTIN_DIR]
    for m in builtins:
        if m not in ("random", "sobel"):
            raise ConfigError(
                f"only random/sobel have builtin implementations, not {m!r}"
            )
    vrange = eff.get("value_range", (0.0, 1.0), _parse_range)
    items = load_dataset(
        images_dir, file_dirs, vrange,
        target_class=eff.get("target_class", None, int),
    )
    methods = list(heatmap_dirs)  # CLI declaration order
    return items, methods


def _open_backend(eff: _Effective) -> Backend:
    spec = eff.require("backend")
    return backend_from_spec(spec, batch_size=eff.get("batch_size", 16, int))


def _out_dir(eff: _Effective) -> Path:
    out = Path(eff.get("out_dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", "utf-8")


def _mean_curve_series(results: List[IROFResult]):
    grid = np.linspace(0.0, 1.0, 101)
    series = []
    for res in results:
        rows = [
            np.interp(grid, np.linspace(0.0, 1.0, len(c)), c.values)
            for c in res.curves
        ]
        series.append((res.method_id, grid.tolist(),
                       np.mean(rows, axis=0).tolist()))
    return series


def cmd_evaluate(eff: _Effective) -> int:
    items, methods = _open_dataset(eff)
    scheme = eff.get("scheme")
    replacement = eff.get("replacement")
    if scheme is None:
        replacement = replacement or "mean"
    else:
        flag_repl = scheme.split("-", 1)[1]
        if replacement is not None and replacement != flag_repl:
            raise ConfigError(
                f"--scheme {scheme} contradicts --replacement {replacement}"
            )
        replacement = flag_repl
    slic = _slic_params(eff)
    mode = eff.get("evidence_mode", "positive-only")
    seed = eff.get("seed", 0, int)
    workers = _workers(eff)
    out = _out_dir(eff)

    with _open_backend(eff) as backend:
        backend.self_test(items[0].image)
        mean = compute_dataset_mean([it.image for it in items])
        results = [
            irof(
                items, method, backend,
                slic_params=slic, replacement=replacement,
                evidence_mode=mode, run_seed=seed, workers=workers,
                dataset_mean=mean,
            )
            for method in methods
        ]

    echo = _config_echo(
        eff, "evaluate",
        heatmaps=eff.heatmaps(), scheme=f"segment-{replacement}",
        evidence_mode=mode, backend=eff.require("backend"),
        batch_size=eff.get("batch_size", 16, int),
        dataset_mean=[float(v) for v in mean.per_channel_mean],
    )
    _write_json(out / "result.json",
                {"config": echo, "methods": [r.to_dict() for r in results]})
    entries = [
        (image_id, curve)
        for res in results
        for image_id, curve in zip(res.image_ids, res.curves)
    ]
    write_curves_csv(out / "curves.csv", entries)
    polyline_chart(
        out / "curves.svg",
        _mean_curve_series(results),
        title="Mean degradation curves",
        x_label="fraction of segments removed",
        y_label="normalized class score",
    )

    every = eff.get("dump_frames_every", 0, int)
    if every and every > 0:
        _dump_frames(items, methods, eff, out, every)

    for res in results:
        se = "n/a" if res.standard_error is None else f"{res.standard_error:.1f}"
        print(
            f"{res.method_id}: score {res.irof_score:.1f} (se {se}, "
            f"n={res.n_images}, skipped={res.n_skipped})"
        )
    return 0


def _dump_frames(items, methods, eff: _Effective, out: Path, every: int) -> None:
    """Qualitative frame dumps; rebuilds sequences without inference."""
    slic = _slic_params(eff)
    mode = eff.get("evidence_mode", "positive-only")
    seed = eff.get("seed", 0, int)
    mean = compute_dataset_mean([it.image for it in items])
    replacement = eff.get("replacement") or "mean"
    repl = mean if replacement == "mean" else "black"
    frames_dir = out / "frames"
    for method in methods:
        mdir = frames_dir / method
        mdir.mkdir(parents=True, exist_ok=True)
        for index, item in enumerate(items):
            segs = slic_segment(item.image, slic)
            ranking = _ranking_for(item, index, method, segs, mode, seed)
            seq = degrade(item.image, build_irof_schedule(ranking, repl), segs, mean)
            lo, hi = item.image.value_range
            for l, frame in enumerate(seq.frames()):
                if l % every and l != seq.step_count:
                    continue
                unit = (frame.data - lo) / (hi - lo)
                codes = np.round(unit * 255.0).astype(np.uint8)
                if codes.shape[2] == 1:
                    codes = codes[:, :, 0]
                save_png(mdir / f"{item.image_id}_l{l:04d}.png", codes)


def cmd_sensitivity(eff: _Effective) -> int:
    items, methods = _open_dataset(eff)
    evaluators_text = eff.get("evaluators")
    evaluators = (
        [e.strip() for e in evaluators_text.split(",") if e.strip()]
        if evaluators_text else list(EVALUATORS)
    )
    fraction = eff.get("fraction", 0.10, float)
    square = eff.get("square_size", DEFAULT_SQUARE_SIZE, int)
    statistic = eff.get("statistic", "fraction")
    slic = _slic_params(eff)
    mode = eff.get("evidence_mode", "positive-only")
    seed = eff.get("seed", 0, int)
    out = _out_dir(eff)

    with _open_backend(eff) as backend:
        backend.self_test(items[0].image)
        report = sensitivity_report(
            methods, evaluators, items, backend,
            fraction=fraction, slic_params=slic, evidence_mode=mode,
            square_size=square, run_seed=seed, workers=_workers(eff),
            statistic=statistic,
        )

    echo = _config_echo(
        eff, "sensitivity",
        heatmaps=eff.heatmaps(), evaluators=evaluators, fraction=fraction,
        square_size=square, statistic=statistic, evidence_mode=mode,
        backend=eff.require("backend"),
        batch_size=eff.get("batch_size", 16, int),
    )
    (out / "sensitivity.json").write_text(report_to_json(report, echo), "utf-8")
    write_report_csv(out / "sensitivity.csv", report)
    write_plot_csv(out / "pvalues.csv", report)

    series = []
    for method in methods:
        xs, ys = [], []
        for i, ev in enumerate(evaluators):
            cell = report.cell(method, ev)
            if cell.p is not None and cell.p > 0:
                xs.append(float(i))
                ys.append(float(np.log10(cell.p)))
        series.append((method, xs, ys))
    polyline_chart(
        out / "pvalues.svg",
        series,
        title=f"Paired t-test vs random (fraction {fraction:g})",
        x_label="evaluator",
        y_label="log10 p",
        x_tick_labels=[(float(i), ev) for i, ev in enumerate(evaluators)],
    )

    for cell in report.cells:
        if cell.error:
            print(f"{cell.method_id} / {cell.evaluator}: ERROR {cell.error}")
        else:
            print(
                f"{cell.method_id} / {cell.evaluator}: t={cell.t:+.3f} "
                f"p={cell.p:.3e} n={cell.n}"
            )
    return 0


def cmd_segment(eff: _Effective) -> int:
    images_dir = eff.require("images")
    vrange = eff.get("value_range", (0.0, 1.0), _parse_range)
    slic = _slic_params(eff)
    out = _out_dir(eff)
    done = 0
    skipped = 0
    for path in discover_images(images_dir):
        png = out / f"{path.stem}.segments.png"
        f32 = out / f"{path.stem}.segments.f32"
        if png.exists() and f32.exists():
            skipped += 1
            continue
        seg = slic_segment(load_image(path, vrange), slic)
        export_segment_map(seg, png_path=png, f32_path=f32)
        done += 1
    _write_json(out / "segment_config.json", _config_echo(eff, "segment"))
    print(f"segmented {done} images, {skipped} already cached")
    return 0


def cmd_baseline(eff: _Effective) -> int:
    images_dir = eff.require("images")
    vrange = eff.get("value_range", (0.0, 1.0), _parse_range)
    kind = eff.get("kind", "sobel")
    seed = eff.get("seed", 0, int)
    out = _out_dir(eff)
    for index, path in enumerate(discover_images(images_dir)):
        image = load_image(path, vrange)
        if kind == "sobel":
            rmap = sobel_relevance(image)
            data = rmap.data
        else:
            gen = Xoshiro256StarStar(derive_seed(seed, index))
            data = np.empty((image.height, image.width), np.float64)
            flat = data.ravel()
            for i in range(flat.size):
                flat[i] = gen.random()
        save_f32(out / f"{path.stem}.f32", data, method_id=kind)
    _write_json(out / "baseline_config.json",
                _config_echo(eff, "baseline", kind=kind))
    print(f"wrote {kind} heatmaps to {out}")
    return 0


_COMMANDS = {
    "evaluate": cmd_evaluate,
    "sensitivity": cmd_sensitivity,
    "segment": cmd_segment,
    "baseline": cmd_baseline,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](_Effective(args))
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except BackendError as exc:
        print(
            f"backend error after {exc.attempts} attempt(s): {exc}",
            file=sys.stderr,
        )
        return 3
    except (DataError, CurveError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 4
    except IrofError as exc:  # pragma: no cover - safety net
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
