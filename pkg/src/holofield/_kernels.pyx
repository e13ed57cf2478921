# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled post-processing kernels; see holofield._kernels_py for semantics."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline cnp.int32_t _find(cnp.int32_t[::1] parent, cnp.int32_t x) nogil:
    cdef cnp.int32_t root = x
    while parent[root] != root:
        root = parent[root]
    # Path compression.
    cdef cnp.int32_t cur = x, nxt
    while parent[cur] != root:
        nxt = parent[cur]
        parent[cur] = root
        cur = nxt
    return root


def label4(cnp.uint8_t[:, ::1] mask):
    """4-connected component labels, numbered 1..n by first raster pixel."""
    cdef Py_ssize_t ny = mask.shape[0], nx = mask.shape[1]
    cdef cnp.ndarray labels_arr = np.zeros((ny, nx), dtype=np.int32)
    cdef cnp.int32_t[:, ::1] lab = labels_arr
    # Provisional labels: at most one new label per two pixels in a row.
    cdef Py_ssize_t cap = (ny * nx) // 2 + 2
    cdef cnp.ndarray parent_arr = np.zeros(cap, dtype=np.int32)
    cdef cnp.int32_t[::1] parent = parent_arr
    cdef cnp.int32_t nprov = 0, left, up, a, b
    cdef Py_ssize_t r, c

    for r in range(ny):
        for c in range(nx):
            if mask[r, c] == 0:
                continue
            left = lab[r, c - 1] if c > 0 else 0
            up = lab[r - 1, c] if r > 0 else 0
            if left == 0 and up == 0:
                nprov += 1
                parent[nprov] = nprov
                lab[r, c] = nprov
            elif left != 0 and up == 0:
                lab[r, c] = left
            elif left == 0:
                lab[r, c] = up
            else:
                a = _find(parent, left)
                b = _find(parent, up)
                if a < b:
                    parent[b] = a
                    lab[r, c] = a
                else:
                    parent[a] = b
                    lab[r, c] = b

    cdef cnp.ndarray remap_arr = np.zeros(nprov + 1, dtype=np.int32)
    cdef cnp.int32_t[::1] remap = remap_arr
    cdef cnp.int32_t n = 0, root
    for r in range(ny):
        for c in range(nx):
            if lab[r, c] == 0:
                continue
            root = _find(parent, lab[r, c])
            if remap[root] == 0:
                n += 1
                remap[root] = n
            lab[r, c] = remap[root]
    return labels_arr, int(n)


def component_bounds(cnp.int32_t[:, ::1] labels, int n):
    """Per-label (min_row, max_row, min_col, max_col, pixel_count)."""
    cdef cnp.ndarray out_arr = np.zeros((n, 5), dtype=np.int64)
    if n == 0:
        return out_arr
    cdef cnp.int64_t[:, ::1] out = out_arr
    cdef Py_ssize_t ny = labels.shape[0], nx = labels.shape[1]
    cdef Py_ssize_t r, c
    cdef cnp.int32_t l
    cdef int k
    for k in range(n):
        out[k, 0] = ny
        out[k, 2] = nx
        out[k, 1] = -1
        out[k, 3] = -1
    for r in range(ny):
        for c in range(nx):
            l = labels[r, c]
            if l == 0:
                continue
            k = l - 1
            if r < out[k, 0]:
                out[k, 0] = r
            if r > out[k, 1]:
                out[k, 1] = r
            if c < out[k, 2]:
                out[k, 2] = c
            if c > out[k, 3]:
                out[k, 3] = c
            out[k, 4] += 1
    return out_arr


def leader_assign(cnp.float64_t[:, ::1] points, double threshold):
    """Cluster id per point; first qualifying leader wins, inclusive threshold."""
    cdef Py_ssize_t n = points.shape[0], w = points.shape[1]
    cdef cnp.ndarray assign_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] assign = assign_arr
    cdef cnp.ndarray leader_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] leader_idx = leader_arr
    cdef double thr2 = threshold * threshold
    cdef Py_ssize_t i, j, c
    cdef cnp.int64_t k = 0
    cdef double dd, diff
    cdef bint joined
    for i in range(n):
        joined = False
        for j in range(k):
            dd = 0.0
            for c in range(w):
                diff = points[i, c] - points[leader_idx[j], c]
                dd += diff * diff
            if dd <= thr2:
                assign[i] = j
                joined = True
                break
        if not joined:
            leader_idx[k] = i
            assign[i] = k
            k += 1
    return assign_arr


def greedy_pairs(cnp.float64_t[:, ::1] a, cnp.float64_t[:, ::1] b):
    """Greedy global-minimum pairing; ties resolve to smallest (i, j)."""
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0]
    cdef Py_ssize_t rounds = n if n < m else m
    cdef cnp.ndarray ia_arr = np.empty(rounds, dtype=np.int64)
    cdef cnp.ndarray ib_arr = np.empty(rounds, dtype=np.int64)
    if rounds == 0:
        return ia_arr, ib_arr
    cdef cnp.int64_t[::1] ia = ia_arr
    cdef cnp.int64_t[::1] ib = ib_arr
    cdef Py_ssize_t w = a.shape[1]
    cdef cnp.ndarray d2_arr = np.empty((n, m), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] d2 = d2_arr
    cdef Py_ssize_t i, j, c, r, bi, bj
    cdef double dd, diff, best
    cdef double INF = np.inf
    for i in range(n):
        for j in range(m):
            dd = 0.0
            for c in range(w):
                diff = a[i, c] - b[j, c]
                dd += diff * diff
            d2[i, j] = dd
    for r in range(rounds):
        best = INF
        bi = 0
        bj = 0
        for i in range(n):
            for j in range(m):
                if d2[i, j] < best:
                    best = d2[i, j]
                    bi = i
                    bj = j
        ia[r] = bi
        ib[r] = bj
        for j in range(m):
            d2[bi, j] = INF
        for i in range(n):
            d2[i, bj] = INF
    return ia_arr, ib_arr
