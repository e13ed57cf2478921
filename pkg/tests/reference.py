"""Brute-force reference implementations used as test oracles.

Deliberately naive and independent of the library's code paths: flood-fill
labeling, literal leader scans, exhaustive greedy pairing, per-pixel tile
averaging, and per-pixel disk rasterization.
"""

from collections import deque

import numpy as np


def flood_fill_components(mask):
    """4-connected components via BFS; labels numbered by first raster pixel."""
    mask = np.asarray(mask, dtype=bool)
    ny, nx = mask.shape
    labels = np.zeros((ny, nx), dtype=np.int32)
    n = 0
    for r0 in range(ny):
        for c0 in range(nx):
            if not mask[r0, c0] or labels[r0, c0]:
                continue
            n += 1
            queue = deque([(r0, c0)])
            labels[r0, c0] = n
            while queue:
                r, c = queue.popleft()
                for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                    if 0 <= rr < ny and 0 <= cc < nx and mask[rr, cc] and not labels[rr, cc]:
                        labels[rr, cc] = n
                        queue.append((rr, cc))
    return labels, n


def component_stats(labels, n):
    """(min_row, max_row, min_col, max_col, count) per label, by pixel scan."""
    out = []
    for k in range(1, n + 1):
        rows, cols = np.nonzero(labels == k)
        out.append((rows.min(), rows.max(), cols.min(), cols.max(), rows.size))
    return np.array(out, dtype=np.int64).reshape(n, 5)


def leader_trace(points, threshold):
    """Literal hand-trace of the leader pass: first qualifying leader wins.

    Compares squared distance against threshold**2, accumulating the four
    squared differences left to right, exactly like the library kernels.
    """
    leaders = []
    assign = []
    thr2 = threshold * threshold
    for p in points:
        chosen = None
        for k, leader in enumerate(leaders):
            dd = 0.0
            for a, b in zip(p, leader):
                dd += (a - b) * (a - b)
            if dd <= thr2:
                chosen = k
                break
        if chosen is None:
            leaders.append(p)
            assign.append(len(leaders) - 1)
        else:
            assign.append(chosen)
    return assign


def exhaustive_greedy_pairs(a, b):
    """Greedy pairing that re-enumerates every remaining distance each round."""
    a = [tuple(map(float, p)) for p in a]
    b = [tuple(map(float, q)) for q in b]
    free_a = list(range(len(a)))
    free_b = list(range(len(b)))
    pairs = []
    while free_a and free_b:
        best = None
        for i in free_a:
            for j in free_b:
                dd = 0.0
                for u, v in zip(a[i], b[j]):
                    dd += (u - v) * (u - v)
                key = (dd, i, j)
                if best is None or key < best:
                    best = key
        _, i, j = best
        pairs.append((i, j))
        free_a.remove(i)
        free_b.remove(j)
    return pairs


def per_pixel_reassemble(tile_maps, positions, tile, nx, ny):
    """O(pixels x tiles) mean of the covering tiles, one pixel at a time."""
    out = np.zeros((ny, nx))
    for r in range(ny):
        for c in range(nx):
            values = []
            for (x0, y0), probs in zip(positions, tile_maps):
                if x0 <= c < x0 + tile and y0 <= r < y0 + tile:
                    values.append(probs[r - y0, c - x0])
            out[r, c] = sum(values) / len(values)
    return out


def rasterize_disk_brute(x, y, d, cfg):
    """Full-image pixel-center-in-circle scan."""
    mask = np.zeros((cfg.ny, cfg.nx), dtype=bool)
    r2 = (d / 2.0) ** 2
    for row in range(cfg.ny):
        for col in range(cfg.nx):
            if (col * cfg.dx - x) ** 2 + (row * cfg.dy - y) ** 2 <= r2:
                mask[row, col] = True
    return mask
