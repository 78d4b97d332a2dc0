"""Hot numeric kernels: numba fast path with a pure-numpy fallback.

Every kernel exists twice: a loop formulation compiled with ``@njit``
(``*_numba``) and a vectorized numpy formulation (``*_numpy``). The module
binds the public names to one family at import time. The numba path is the
default whenever numba imports; setting the environment variable
``IROF_DISABLE_NUMBA`` to 1/true/yes forces the numpy path.
``benchmarks/bench_kernels.py`` times the two families against each other.

Both families are individually deterministic. They are not guaranteed
bit-identical to each other where summation order differs (k-means center
accumulation), so a given installation must stick to one path per run,
which the import-time binding enforces.
"""

from __future__ import annotations

import math
import os

import numpy as np


def _flag_set(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in {"1", "true", "yes"}


try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

USING_NUMBA = _HAVE_NUMBA and not _flag_set("IROF_DISABLE_NUMBA")


def backend_name() -> str:
    """Active kernel path, echoed into run configuration output."""
    return "numba" if USING_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# sRGB -> CIELAB (D65 white point)
# ---------------------------------------------------------------------------

_XN, _YN, _ZN = 0.95047, 1.0, 1.08883
_LAB_DELTA3 = (6.0 / 29.0) ** 3
_LAB_SLOPE = 1.0 / (3.0 * (6.0 / 29.0) ** 2)


def rgb_to_lab_numpy(rgb: np.ndarray) -> np.ndarray:
    """Map (H, W, 3) sRGB values in [0, 1] to CIELAB, float64."""
    c = rgb.astype(np.float64)
    lin = np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)
    r, g, b = lin[..., 0], lin[..., 1], lin[..., 2]
    x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / _XN
    y = (0.2126729 * r + 0.7151522 * g + 0.0721750 * b) / _YN
    z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / _ZN
    fx = np.where(x > _LAB_DELTA3, np.power(x, 1.0 / 3.0), _LAB_SLOPE * x + 4.0 / 29.0)
    fy = np.where(y > _LAB_DELTA3, np.power(y, 1.0 / 3.0), _LAB_SLOPE * y + 4.0 / 29.0)
    fz = np.where(z > _LAB_DELTA3, np.power(z, 1.0 / 3.0), _LAB_SLOPE * z + 4.0 / 29.0)
    out = np.empty(rgb.shape[:2] + (3,), np.float64)
    out[..., 0] = 116.0 * fy - 16.0
    out[..., 1] = 500.0 * (fx - fy)
    out[..., 2] = 200.0 * (fy - fz)
    return out


def _rgb_to_lab_loop(rgb):
    h, w = rgb.shape[0], rgb.shape[1]
    out = np.empty((h, w, 3), np.float64)
    for i in range(h):
        for j in range(w):
            lin = np.empty(3, np.float64)
            for k in range(3):
                c = rgb[i, j, k]
                if c <= 0.04045:
                    lin[k] = c / 12.92
                else:
                    lin[k] = ((c + 0.055) / 1.055) ** 2.4
            x = (0.4124564 * lin[0] + 0.3575761 * lin[1] + 0.1804375 * lin[2]) / _XN
            y = (0.2126729 * lin[0] + 0.7151522 * lin[1] + 0.0721750 * lin[2]) / _YN
            z = (0.0193339 * lin[0] + 0.1191920 * lin[1] + 0.9503041 * lin[2]) / _ZN
            if x > _LAB_DELTA3:
                fx = x ** (1.0 / 3.0)
            else:
                fx = _LAB_SLOPE * x + 4.0 / 29.0
            if y > _LAB_DELTA3:
                fy = y ** (1.0 / 3.0)
            else:
                fy = _LAB_SLOPE * y + 4.0 / 29.0
            if z > _LAB_DELTA3:
                fz = z ** (1.0 / 3.0)
            else:
                fz = _LAB_SLOPE * z + 4.0 / 29.0
            out[i, j, 0] = 116.0 * fy - 16.0
            out[i, j, 1] = 500.0 * (fx - fy)
            out[i, j, 2] = 200.0 * (fy - fz)
    return out


# ---------------------------------------------------------------------------
# Sobel gradient magnitude, borders by edge replication
# ---------------------------------------------------------------------------


def sobel_magnitude_numpy(lum: np.ndarray) -> np.ndarray:
    p = np.pad(lum.astype(np.float64), 1, mode="edge")
    nw, n, ne = p[:-2, :-2], p[:-2, 1:-1], p[:-2, 2:]
    w_, e = p[1:-1, :-2], p[1:-1, 2:]
    sw, s, se = p[2:, :-2], p[2:, 1:-1], p[2:, 2:]
    gx = (ne + 2.0 * e + se) - (nw + 2.0 * w_ + sw)
    gy = (sw + 2.0 * s + se) - (nw + 2.0 * n + ne)
    return np.sqrt(gx * gx + gy * gy)


def _sobel_loop(lum):
    h, w = lum.shape
    out = np.empty((h, w), np.float64)
    for i in range(h):
        iu = i - 1 if i > 0 else 0
        idn = i + 1 if i < h - 1 else h - 1
        for j in range(w):
            jl = j - 1 if j > 0 else 0
            jr = j + 1 if j < w - 1 else w - 1
            gx = (lum[iu, jr] + 2.0 * lum[i, jr] + lum[idn, jr]) - (
                lum[iu, jl] + 2.0 * lum[i, jl] + lum[idn, jl]
            )
            gy = (lum[idn, jl] + 2.0 * lum[idn, j] + lum[idn, jr]) - (
                lum[iu, jl] + 2.0 * lum[iu, j] + lum[iu, jr]
            )
            out[i, j] = math.sqrt(gx * gx + gy * gy)
    return out


# ---------------------------------------------------------------------------
# Per-label accumulation (segment means)
# ---------------------------------------------------------------------------


def label_stats_numpy(labels: np.ndarray, values: np.ndarray, n_labels: int):
    flat = labels.ravel()
    sums = np.bincount(flat, weights=values.ravel().astype(np.float64), minlength=n_labels)
    counts = np.bincount(flat, minlength=n_labels)
    return sums, counts.astype(np.int64)


def _label_stats_loop(labels, values, n_labels):
    sums = np.zeros(n_labels, np.float64)
    counts = np.zeros(n_labels, np.int64)
    flat_l = labels.ravel()
    flat_v = values.ravel()
    for p in range(flat_l.size):
        k = flat_l[p]
        sums[k] += flat_v[p]
        counts[k] += 1
    return sums, counts


# ---------------------------------------------------------------------------
# SLIC sweeps: windowed assignment and center accumulation
# ---------------------------------------------------------------------------


def slic_assign_numpy(features, cy, cx, cfeat, spatial_weight, half):
    h, w = features.shape[0], features.shape[1]
    best = np.full((h, w), np.inf, np.float64)
    labels = np.full((h, w), -1, np.int32)
    ys = np.arange(h, dtype=np.float64)
    xs = np.arange(w, dtype=np.float64)
    for k in range(cy.shape[0]):
        y0 = max(0, int(cy[k]) - half)
        y1 = min(h, int(cy[k]) + half + 1)
        x0 = max(0, int(cx[k]) - half)
        x1 = min(w, int(cx[k]) + half + 1)
        if y0 >= y1 or x0 >= x1:
            continue
        win = features[y0:y1, x0:x1, :]
        df = np.sqrt(((win - cfeat[k]) ** 2).sum(axis=-1))
        dy = ys[y0:y1, None] - cy[k]
        dx = xs[None, x0:x1] - cx[k]
        ds = np.sqrt(dy * dy + dx * dx)
        d = df + spatial_weight * ds
        sub = best[y0:y1, x0:x1]
        better = d < sub
        sub[better] = d[better]
        labels[y0:y1, x0:x1][better] = k
    return labels, best


def _slic_assign_loop(features, cy, cx, cfeat, spatial_weight, half):
    h, w, nf = features.shape
    best = np.full((h, w), np.inf, np.float64)
    labels = np.full((h, w), -1, np.int32)
    for k in range(cy.shape[0]):
        y0 = max(0, int(cy[k]) - half)
        y1 = min(h, int(cy[k]) + half + 1)
        x0 = max(0, int(cx[k]) - half)
        x1 = min(w, int(cx[k]) + half + 1)
        for i in range(y0, y1):
            for j in range(x0, x1):
                acc = 0.0
                for f in range(nf):
                    diff = features[i, j, f] - cfeat[k, f]
                    acc += diff * diff
                dy = i - cy[k]
                dx = j - cx[k]
                d = math.sqrt(acc) + spatial_weight * math.sqrt(dy * dy + dx * dx)
                if d < best[i, j]:
                    best[i, j] = d
                    labels[i, j] = k
    return labels, best


def slic_accumulate_numpy(labels, features, n_clusters):
    h, w, nf = features.shape
    flat = labels.ravel()
    sums = np.empty((n_clusters, nf + 2), np.float64)
    for f in range(nf):
        sums[:, f] = np.bincount(flat, weights=features[..., f].ravel(), minlength=n_clusters)
    yy, xx = np.mgrid[0:h, 0:w]
    sums[:, nf] = np.bincount(flat, weights=yy.ravel().astype(np.float64), minlength=n_clusters)
    sums[:, nf + 1] = np.bincount(flat, weights=xx.ravel().astype(np.float64), minlength=n_clusters)
    counts = np.bincount(flat, minlength=n_clusters).astype(np.int64)
    return sums, counts


def _slic_accumulate_loop(labels, features, n_clusters):
    h, w, nf = features.shape
    sums = np.zeros((n_clusters, nf + 2), np.float64)
    counts = np.zeros(n_clusters, np.int64)
    for i in range(h):
        for j in range(w):
            k = labels[i, j]
            for f in range(nf):
                sums[k, f] += features[i, j, f]
            sums[k, nf] += i
            sums[k, nf + 1] += j
            counts[k] += 1
    return sums, counts


# ---------------------------------------------------------------------------
# Connectivity enforcement
# ---------------------------------------------------------------------------


def _enforce_connectivity_loop(labels, n_labels):
    # Pass 1: discover 4-connected components in raster order.
    h, w = labels.shape
    n = h * w
    flat = labels.ravel()
    comp_id = np.full(n, -1, np.int32)
    comp_label = np.empty(n, np.int32)
    comp_size = np.zeros(n, np.int64)
    stack = np.empty(n, np.int64)
    ncomp = 0
    for p in range(n):
        if comp_id[p] >= 0:
            continue
        lab = flat[p]
        top = 0
        stack[0] = p
        comp_id[p] = ncomp
        size = 0
        while top >= 0:
            q = stack[top]
            top -= 1
            size += 1
            qi = q // w
            qj = q % w
            if qi > 0 and comp_id[q - w] < 0 and flat[q - w] == lab:
                comp_id[q - w] = ncomp
                top += 1
                stack[top] = q - w
            if qi < h - 1 and comp_id[q + w] < 0 and flat[q + w] == lab:
                comp_id[q + w] = ncomp
                top += 1
                stack[top] = q + w
            if qj > 0 and comp_id[q - 1] < 0 and flat[q - 1] == lab:
                comp_id[q - 1] = ncomp
                top += 1
                stack[top] = q - 1
            if qj < w - 1 and comp_id[q + 1] < 0 and flat[q + 1] == lab:
                comp_id[q + 1] = ncomp
                top += 1
                stack[top] = q + 1
        comp_label[ncomp] = lab
        comp_size[ncomp] = size
        ncomp += 1

    # Pass 2: per label keep the largest component (first found on ties).
    best_comp = np.full(n_labels, -1, np.int64)
    for c in range(ncomp):
        lab = comp_label[c]
        if best_comp[lab] < 0 or comp_size[c] > comp_size[best_comp[lab]]:
            best_comp[lab] = c

    resolved = np.zeros(ncomp, np.bool_)
    final_label = np.empty(ncomp, np.int32)
    for c in range(ncomp):
        if best_comp[comp_label[c]] == c:
            resolved[c] = True
            final_label[c] = comp_label[c]

    # Group pixel indices by component (counting sort) for boundary scans.
    comp_start = np.zeros(ncomp + 1, np.int64)
    for p in range(n):
        comp_start[comp_id[p] + 1] += 1
    for c in range(ncomp):
        comp_start[c + 1] += comp_start[c]
    comp_pixels = np.empty(n, np.int64)
    fill = comp_start[:ncomp].copy()
    for p in range(n):
        c = comp_id[p]
        comp_pixels[fill[c]] = p
        fill[c] += 1

    # Pass 3: merge each orphan into the resolved neighbor sharing the
    # longest boundary (ties: smallest label). Unresolvable orphans wait
    # for the next sweep; each sweep resolves at least one.
    boundary = np.zeros(n_labels, np.int64)
    touched = np.empty(n_labels, np.int64)
    remaining = int(ncomp - resolved.sum())
    while remaining > 0:
        progress = False
        for c in range(ncomp):
            if resolved[c]:
                continue
            ntouch = 0
            for idx in range(comp_start[c], comp_start[c + 1]):
                p = comp_pixels[idx]
                qi = p // w
                qj = p % w
                for step in range(4):
                    if step == 0:
                        ok = qi > 0
                        q = p - w
                    elif step == 1:
                        ok = qi < h - 1
                        q = p + w
                    elif step == 2:
                        ok = qj > 0
                        q = p - 1
                    else:
                        ok = qj < w - 1
                        q = p + 1
                    if not ok:
                        continue
                    qc = comp_id[q]
                    if qc == c or not resolved[qc]:
                        continue
                    lab = final_label[qc]
                    if boundary[lab] == 0:
                        touched[ntouch] = lab
                        ntouch += 1
                    boundary[lab] += 1
            if ntouch > 0:
                pick = -1
                pick_count = 0
                for ti in range(ntouch):
                    lab = touched[ti]
                    cnt = boundary[lab]
                    if cnt > pick_count or (cnt == pick_count and lab < pick):
                        pick = lab
                        pick_count = cnt
                    boundary[lab] = 0
                final_label[c] = pick
                resolved[c] = True
                remaining -= 1
                progress = True
            else:
                for ti in range(ntouch):
                    boundary[touched[ti]] = 0
        if not progress:  # pragma: no cover - partition makes this unreachable
            for c in range(ncomp):
                if not resolved[c]:
                    final_label[c] = comp_label[c]
                    resolved[c] = True
                    remaining -= 1

    out = np.empty((h, w), np.int32)
    flat_out = out.ravel()
    for p in range(n):
        flat_out[p] = final_label[comp_id[p]]
    return out


if USING_NUMBA:
    _jit = njit(cache=True, nogil=True)
    rgb_to_lab = _jit(_rgb_to_lab_loop)
    sobel_magnitude = _jit(_sobel_loop)
    label_stats = _jit(_label_stats_loop)
    slic_assign = _jit(_slic_assign_loop)
    slic_accumulate = _jit(_slic_accumulate_loop)
    enforce_connectivity = _jit(_enforce_connectivity_loop)
else:
    rgb_to_lab = rgb_to_lab_numpy
    sobel_magnitude = sobel_magnitude_numpy
    label_stats = label_stats_numpy
    slic_assign = slic_assign_numpy
    slic_accumulate = slic_accumulate_numpy
    # connectivity is bookkeeping, not arithmetic; the loop version doubles
    # as the fallback (slower, identical output)
    enforce_connectivity = _enforce_connectivity_loop
