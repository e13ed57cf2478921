"""Pure numpy/scipy implementations of the post-processing kernels.

These mirror the compiled extension in holofield._kernels bit for bit; the
dispatcher in holofield.kernels picks whichever is available. Squared
distances are compared against squared thresholds in both implementations
so the two never disagree on boundary cases.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

_FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=int)


def label4(mask: np.ndarray):
    """4-connected component labels, numbered 1..n by first raster pixel."""
    mask = np.ascontiguousarray(mask, dtype=np.uint8)
    raw, n = ndimage.label(mask, structure=_FOUR_CONN)
    if n == 0:
        return raw.astype(np.int32), 0
    # Renumber so label order follows the raster position of each
    # component's first pixel; scipy does not guarantee this.
    flat = raw.ravel()
    nz = np.flatnonzero(flat)
    first = np.full(n + 1, flat.size, dtype=np.int64)
    np.minimum.at(first, flat[nz], nz)
    order = np.argsort(first[1:], kind="stable")
    remap = np.zeros(n + 1, dtype=np.int32)
    remap[order + 1] = np.arange(1, n + 1, dtype=np.int32)
    return remap[raw], n


def component_bounds(labels: np.ndarray, n: int):
    """Per-label (min_row, max_row, min_col, max_col, pixel_count), shape (n, 5)."""
    out = np.zeros((n, 5), dtype=np.int64)
    if n == 0:
        return out
    rows, cols = np.nonzero(labels)
    ls = labels[rows, cols]
    big = np.iinfo(np.int64).max
    min_r = np.full(n + 1, big, dtype=np.int64)
    max_r = np.full(n + 1, -1, dtype=np.int64)
    min_c = np.full(n + 1, big, dtype=np.int64)
    max_c = np.full(n + 1, -1, dtype=np.int64)
    np.minimum.at(min_r, ls, rows)
    np.maximum.at(max_r, ls, rows)
    np.minimum.at(min_c, ls, cols)
    np.maximum.at(max_c, ls, cols)
    counts = np.bincount(ls, minlength=n + 1)
    out[:, 0] = min_r[1:]
    out[:, 1] = max_r[1:]
    out[:, 2] = min_c[1:]
    out[:, 3] = max_c[1:]
    out[:, 4] = counts[1:]
    return out


def leader_assign(points: np.ndarray, threshold: float):
    """Single-pass leader clustering over rows of an (n, 4) array.

    The first point founds cluster 0 and becomes its leader; each later
    point joins the first existing leader within ``threshold`` (inclusive,
    compared on squared distance) or founds a new cluster. Returns the
    cluster id per point.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    n = points.shape[0]
    assign = np.empty(n, dtype=np.int64)
    leaders = np.empty((n, points.shape[1]), dtype=np.float64)
    thr2 = threshold * threshold
    k = 0
    for i in range(n):
        if k:
            diff = leaders[:k] - points[i]
            d2 = np.einsum("ij,ij->i", diff, diff)
            hit = np.flatnonzero(d2 <= thr2)
            if hit.size:
                assign[i] = hit[0]
                continue
        leaders[k] = points[i]
        assign[i] = k
        k += 1
    return assign


def greedy_pairs(a: np.ndarray, b: np.ndarray):
    """Globally greedy minimum-distance pairing between two point sets.

    Repeatedly takes the smallest remaining pairwise distance, removing both
    points, until one side is exhausted. Ties resolve to the smallest
    (row, column) index pair. Returns index arrays (ia, ib) in match order.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    n, m = a.shape[0], b.shape[0]
    rounds = min(n, m)
    ia = np.empty(rounds, dtype=np.int64)
    ib = np.empty(rounds, dtype=np.int64)
    if rounds == 0:
        return ia, ib
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
    for r in range(rounds):
        flat = np.argmin(d2)  # first occurrence wins ties (row-major)
        i, j = divmod(int(flat), m)
        ia[r] = i
        ib[r] = j
        d2[i, :] = np.inf
        d2[:, j] = np.inf
    return ia, ib
