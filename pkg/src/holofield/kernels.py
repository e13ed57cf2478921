"""Kernel dispatch: compiled extension when available, numpy fallback otherwise.

The hot post-processing kernels (component labeling, leader clustering,
greedy pairing) exist twice: a Cython extension (holofield._kernels) and a
numpy/scipy fallback (holofield._kernels_py) with identical semantics. The
Fourier transforms that dominate reconstruction already run in compiled
code inside numpy, so they are not duplicated here.

Set HOLOFIELD_PURE_PYTHON=1 to force the fallback, e.g. for benchmarking.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

_force_py = os.environ.get("HOLOFIELD_PURE_PYTHON", "") not in ("", "0")

if _force_py:
    _impl = _kernels_py
    HAVE_COMPILED = False
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        HAVE_COMPILED = True
    except ImportError:
        _impl = _kernels_py
        HAVE_COMPILED = False

BACKEND = "compiled" if HAVE_COMPILED else "python"


def label_components(mask):
    """4-connected labels (int32) and component count for a binary mask."""
    return _impl.label4(np.ascontiguousarray(mask, dtype=np.uint8))


def component_bounds(labels, n):
    """(n, 5) int64 array of min_row, max_row, min_col, max_col, count."""
    return _impl.component_bounds(np.ascontiguousarray(labels, dtype=np.int32), int(n))


def leader_assign(points, threshold):
    """Cluster id per point from a single fixed-order leader pass."""
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError("points must be a 2-D array")
    return _impl.leader_assign(pts, float(threshold))


def greedy_pair_indices(a, b):
    """Greedy global-minimum pairing; returns (ia, ib) in match order."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or (a.size and b.size and a.shape[1] != b.shape[1]):
        raise ValueError("point sets must be 2-D with matching width")
    return _impl.greedy_pairs(a, b)
