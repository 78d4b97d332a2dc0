"""Timing comparison of the compiled and plain-numpy kernel paths.

Run as a script. Micro-kernels are timed in-process against their
``*_numpy`` twins; the end-to-end segmentation number for the fallback
path comes from a subprocess started with IROF_DISABLE_NUMBA=1 because
the path is fixed at import time.

    python benchmarks/bench_kernels.py [--size 128] [--repeats 20]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from irof import Image, SlicParams
from irof.segmentation import slic_segment
from irof import kernels


def _best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _fmt(seconds):
    return f"{seconds * 1e3:8.2f} ms"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args()

    n = args.size
    rng = np.random.default_rng(7)
    rgb = rng.uniform(0.0, 1.0, (n, n, 3))
    lum = rng.uniform(0.0, 1.0, (n, n))
    labels = rng.integers(0, 64, (n, n)).astype(np.int32)
    values = rng.uniform(0.0, 1.0, (n, n))
    feats = kernels.rgb_to_lab_numpy(rgb)
    cy = np.linspace(4, n - 5, 36)
    cx = np.linspace(4, n - 5, 36)
    cfeat = feats[cy.astype(int), cx.astype(int)]

    pairs = [
        ("rgb_to_lab", lambda: kernels.rgb_to_lab(rgb),
         lambda: kernels.rgb_to_lab_numpy(rgb)),
        ("sobel_magnitude", lambda: kernels.sobel_magnitude(lum),
         lambda: kernels.sobel_magnitude_numpy(lum)),
        ("label_stats", lambda: kernels.label_stats(labels, values, 64),
         lambda: kernels.label_stats_numpy(labels, values, 64)),
        ("slic_assign",
         lambda: kernels.slic_assign(feats, cy, cx, cfeat, 2.0, 12),
         lambda: kernels.slic_assign_numpy(feats, cy, cx, cfeat, 2.0, 12)),
        ("slic_accumulate",
         lambda: kernels.slic_accumulate(labels, feats, 64),
         lambda: kernels.slic_accumulate_numpy(labels, feats, 64)),
    ]

    print(f"active path: {kernels.backend_name()} "
          f"(size {n}x{n}, best of {args.repeats})")
    print(f"{'kernel':<18}{'active':>12}{'numpy':>12}{'speedup':>9}")
    for name, active, plain in pairs:
        active()  # compile outside the timed region
        ta = _best_of(active, args.repeats)
        tp = _best_of(plain, args.repeats)
        print(f"{name:<18}{_fmt(ta)}{_fmt(tp)}{tp / ta:8.1f}x")

    img = Image(rng.uniform(0.0, 1.0, (n, n, 3)), (0.0, 1.0))
    params = SlicParams(target_segments=150)
    slic_segment(img, params)
    te = _best_of(lambda: slic_segment(img, params), max(3, args.repeats // 4))
    print(f"\nslic_segment end to end ({kernels.backend_name()}): {_fmt(te)}")

    if kernels.USING_NUMBA:
        code = (
            "import time, numpy as np\n"
            "from irof import Image, SlicParams\n"
            "from irof.segmentation import slic_segment\n"
            "from irof import kernels\n"
            "assert not kernels.USING_NUMBA\n"
            f"rng = np.random.default_rng(7)\n"
            f"img = Image(rng.uniform(0.0, 1.0, ({n}, {n}, 3)), (0.0, 1.0))\n"
            "params = SlicParams(target_segments=150)\n"
            "slic_segment(img, params)\n"
            "best = min(\n"
            "    (lambda t0=time.perf_counter(): (slic_segment(img, params),"
            " time.perf_counter() - t0)[1])()\n"
            "    for _ in range(5)\n"
            ")\n"
            "print(f'{best * 1e3:.2f}')\n"
        )
        env = dict(os.environ, IROF_DISABLE_NUMBA="1")
        out = subprocess.run([sys.executable, "-c", code], env=env,
                             capture_output=True, text=True, check=True)
        print(f"slic_segment end to end (numpy subprocess): "
              f"{float(out.stdout.strip()):8.2f} ms")


if __name__ == "__main__":
    main()
