# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled range-query and cluster-expansion kernels.

Function-for-function twin of ``_pykernels``; results must be identical.
"""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport qsort, malloc, free
from libc.stdint cimport int64_t

cnp.import_array()

ctypedef int64_t idx_t

cdef enum:
    STACK_SIZE = 256


cdef struct Tree:
    const idx_t* perm
    const idx_t* start
    const idx_t* end
    const idx_t* left
    const idx_t* right
    const double* bbox
    idx_t size


cdef int _cmp_idx(const void* a, const void* b) noexcept nogil:
    cdef idx_t x = (<const idx_t*>a)[0]
    cdef idx_t y = (<const idx_t*>b)[0]
    return (x > y) - (x < y)


cdef idx_t _scan(const double[:, ::1] xy, double qx, double qy, double e2, idx_t* out) noexcept nogil:
    cdef idx_t i, k = 0
    cdef double dx, dy
    for i in range(xy.shape[0]):
        dx = xy[i, 0] - qx
        dy = xy[i, 1] - qy
        if dx * dx + dy * dy <= e2:
            out[k] = i
            k += 1
    return k


cdef idx_t _kd(Tree* t, const double[:, ::1] xy, double qx, double qy, double e2, idx_t* out) noexcept nogil:
    cdef idx_t stack[STACK_SIZE]
    cdef idx_t sp = 0, k = 0, node, s, e, p
    cdef double x0, y0, x1, y1, dx, dy, fx, fy
    if t.size == 0:
        return 0
    stack[sp] = 0
    sp += 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        x0 = t.bbox[4 * node]
        y0 = t.bbox[4 * node + 1]
        x1 = t.bbox[4 * node + 2]
        y1 = t.bbox[4 * node + 3]
        dx = x0 - qx
        if dx < 0.0:
            dx = 0.0
        if qx - x1 > dx:
            dx = qx - x1
        dy = y0 - qy
        if dy < 0.0:
            dy = 0.0
        if qy - y1 > dy:
            dy = qy - y1
        if dx * dx + dy * dy > e2:
            continue
        fx = qx - x0
        if x1 - qx > fx:
            fx = x1 - qx
        fy = qy - y0
        if y1 - qy > fy:
            fy = y1 - qy
        s = t.start[node]
        e = t.end[node]
        if fx * fx + fy * fy <= e2:
            for p in range(s, e):
                out[k] = t.perm[p]
                k += 1
        elif t.left[node] < 0:
            for p in range(s, e):
                dx = xy[t.perm[p], 0] - qx
                dy = xy[t.perm[p], 1] - qy
                if dx * dx + dy * dy <= e2:
                    out[k] = t.perm[p]
                    k += 1
        else:
            stack[sp] = t.right[node]
            stack[sp + 1] = t.left[node]
            sp += 2
    qsort(out, k, sizeof(idx_t), _cmp_idx)
    return k


cdef class _TreeRef:
    # keeps the numpy buffers behind a Tree alive
    cdef Tree t
    cdef object arrays

    def __init__(self, tree):
        cdef const idx_t[::1] perm, start, end, left, right
        cdef const double[::1] bbox
        if tree is None:
            self.t.size = 0
            self.arrays = None
            return
        arrs = [np.ascontiguousarray(a, dtype=np.int64) for a in tree[:5]]
        arrs.append(np.ascontiguousarray(tree[5], dtype=np.float64).reshape(-1))
        self.arrays = arrs
        perm, start, end, left, right = arrs[:5]
        bbox = arrs[5]
        self.t.size = perm.shape[0]
        if self.t.size == 0:
            return
        self.t.perm = &perm[0]
        self.t.start = &start[0]
        self.t.end = &end[0]
        self.t.left = &left[0]
        self.t.right = &right[0]
        self.t.bbox = &bbox[0]


def _as_xy(a):
    a = np.ascontiguousarray(a, dtype=np.float64).reshape(-1, 2)
    return a


def scan_radius(xy, double qx, double qy, double eps):
    cdef const double[:, ::1] v = _as_xy(xy)
    out = np.empty(v.shape[0], dtype=np.int64)
    cdef idx_t[::1] o = out
    cdef idx_t k = 0
    if v.shape[0]:
        with nogil:
            k = _scan(v, qx, qy, eps * eps, &o[0])
    return out[:k].copy()


def kd_radius(tree, xy, double qx, double qy, double eps):
    cdef const double[:, ::1] v = _as_xy(xy)
    cdef _TreeRef ref = _TreeRef(tree)
    out = np.empty(v.shape[0], dtype=np.int64)
    cdef idx_t[::1] o = out
    cdef idx_t k = 0
    if v.shape[0] and ref.t.size:
        with nogil:
            k = _kd(&ref.t, v, qx, qy, eps * eps, &o[0])
    return out[:k].copy()


cdef inline idx_t _query(int kind, Tree* t, const double[:, ::1] xy, double qx, double qy,
                         double e2, idx_t* out) noexcept nogil:
    if xy.shape[0] == 0:
        return 0
    if kind == 0:
        return _scan(xy, qx, qy, e2, out)
    return _kd(t, xy, qx, qy, e2, out)


def expand_all(rel_xy, irr_xy, double eps, long long min_rel, long long max_irr,
               int kind=0, rel_tree=None, irr_tree=None):
    """See ``_pykernels.expand_all``."""
    cdef const double[:, ::1] X = _as_xy(rel_xy)
    cdef const double[:, ::1] Y = _as_xy(irr_xy)
    cdef idx_t n = X.shape[0], m = Y.shape[0]
    cdef _TreeRef rt = _TreeRef(rel_tree if kind else None)
    cdef _TreeRef it = _TreeRef(irr_tree if kind else None)

    labels_x_a = np.full(n, -1, dtype=np.int64)
    labels_y_a = np.full(m, -1, dtype=np.int64)
    src_x_a = np.full(n, -1, dtype=np.int64)
    src_y_a = np.full(m, -1, dtype=np.int64)
    core_a = np.zeros(n, dtype=np.uint8)
    counts_a = np.zeros((n, 2), dtype=np.int64)

    cdef idx_t[::1] labels_x = labels_x_a
    cdef idx_t[::1] labels_y = labels_y_a
    cdef idx_t[::1] src_x = src_x_a
    cdef idx_t[::1] src_y = src_y_a
    cdef unsigned char[::1] core = core_a
    cdef idx_t[:, ::1] counts = counts_a

    # scratch: +1 keeps every buffer non-empty
    cdef idx_t* intro_x = <idx_t*>malloc((n + 1) * sizeof(idx_t))
    cdef idx_t* intro_y = <idx_t*>malloc((m + 1) * sizeof(idx_t))
    cdef idx_t* stamp_x = <idx_t*>malloc((n + 1) * sizeof(idx_t))
    cdef idx_t* stamp_y = <idx_t*>malloc((m + 1) * sizeof(idx_t))
    cdef unsigned char* vis_x = <unsigned char*>malloc(n + 1)
    cdef unsigned char* vis_y = <unsigned char*>malloc(m + 1)
    cdef idx_t* frontier = <idx_t*>malloc((n + 1) * sizeof(idx_t))
    cdef idx_t* yset = <idx_t*>malloc((m + 1) * sizeof(idx_t))
    cdef idx_t* xbuf = <idx_t*>malloc((n + 1) * sizeof(idx_t))
    cdef idx_t* ybuf = <idx_t*>malloc((m + 1) * sizeof(idx_t))
    if (intro_x == NULL or intro_y == NULL or stamp_x == NULL or stamp_y == NULL or vis_x == NULL
            or vis_y == NULL or frontier == NULL or yset == NULL or xbuf == NULL or ybuf == NULL):
        free(intro_x); free(intro_y); free(stamp_x); free(stamp_y); free(vis_x); free(vis_y)
        free(frontier); free(yset); free(xbuf); free(ybuf)
        raise MemoryError()

    cdef idx_t i, j, q, a, nf, ny, k, nx_i, ny_i, c = 0, n_queries = 0
    cdef double e2 = eps * eps
    try:
        with nogil:
            for i in range(n):
                stamp_x[i] = -1
                vis_x[i] = 0
            for i in range(m):
                stamp_y[i] = -1
                vis_y[i] = 0
            for i in range(n):
                if vis_x[i]:
                    continue
                vis_x[i] = 1
                nx_i = _query(kind, &rt.t, X, X[i, 0], X[i, 1], e2, xbuf)
                ny_i = _query(kind, &it.t, Y, X[i, 0], X[i, 1], e2, ybuf)
                n_queries += 1
                counts[i, 0] = nx_i
                counts[i, 1] = ny_i
                if not (nx_i >= min_rel and ny_i <= max_irr):
                    continue
                core[i] = 1
                c += 1
                labels_x[i] = c
                src_x[i] = i
                nf = 0
                ny = 0
                for a in range(nx_i):
                    q = xbuf[a]
                    if stamp_x[q] != c:
                        stamp_x[q] = c
                        intro_x[q] = i
                        frontier[nf] = q
                        nf += 1
                for a in range(ny_i):
                    q = ybuf[a]
                    if stamp_y[q] != c:
                        stamp_y[q] = c
                        intro_y[q] = i
                        yset[ny] = q
                        ny += 1
                k = 0
                while k < nf:
                    j = frontier[k]
                    k += 1
                    if not vis_x[j]:
                        vis_x[j] = 1
                        nx_i = _query(kind, &rt.t, X, X[j, 0], X[j, 1], e2, xbuf)
                        ny_i = _query(kind, &it.t, Y, X[j, 0], X[j, 1], e2, ybuf)
                        n_queries += 1
                        counts[j, 0] = nx_i
                        counts[j, 1] = ny_i
                        if nx_i >= min_rel and ny_i <= max_irr:
                            core[j] = 1
                            for a in range(nx_i):
                                q = xbuf[a]
                                if stamp_x[q] != c:
                                    stamp_x[q] = c
                                    intro_x[q] = j
                                    frontier[nf] = q
                                    nf += 1
                            for a in range(ny_i):
                                q = ybuf[a]
                                if stamp_y[q] != c:
                                    stamp_y[q] = c
                                    intro_y[q] = j
                                    yset[ny] = q
                                    ny += 1
                    if labels_x[j] == -1:
                        labels_x[j] = c
                        src_x[j] = intro_x[j]
                for a in range(ny):
                    q = yset[a]
                    if not vis_y[q]:
                        vis_y[q] = 1
                        if labels_y[q] == -1:
                            labels_y[q] = c
                            src_y[q] = intro_y[q]
    finally:
        free(intro_x); free(intro_y); free(stamp_x); free(stamp_y); free(vis_x); free(vis_y)
        free(frontier); free(yset); free(xbuf); free(ybuf)

    return (labels_x_a, labels_y_a, core_a.astype(bool), counts_a, src_x_a, src_y_a,
            int(c), int(n_queries))
