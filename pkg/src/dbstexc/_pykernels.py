"""Pure-Python (numpy) implementations of the hot kernels.

These mirror ``_ckernels.pyx`` function for function and must return
identical results; the compiled module is preferred when it is importable.
Distances are compared squared, ``dx*dx + dy*dy <= eps*eps``, in both.
"""

import numpy as np

NOISE = -1


def scan_radius(xy, qx, qy, eps):
    """Indices of rows of ``xy`` within ``eps`` of ``(qx, qy)``, ascending."""
    if len(xy) == 0:
        return np.empty(0, dtype=np.int64)
    dx = xy[:, 0] - qx
    dy = xy[:, 1] - qy
    return np.flatnonzero(dx * dx + dy * dy <= eps * eps).astype(np.int64, copy=False)


def kd_radius(tree, xy, qx, qy, eps):
    """Same contract as :func:`scan_radius`, answered from a flat k-d tree."""
    perm, start, end, left, right, bbox = tree
    if len(perm) == 0:
        return np.empty(0, dtype=np.int64)
    e2 = eps * eps
    parts = []
    stack = [0]
    while stack:
        node = stack.pop()
        x0, y0, x1, y1 = bbox[node]
        dx = max(x0 - qx, 0.0, qx - x1)
        dy = max(y0 - qy, 0.0, qy - y1)
        if dx * dx + dy * dy > e2:
            continue
        fx = max(qx - x0, x1 - qx)
        fy = max(qy - y0, y1 - qy)
        s, e = start[node], end[node]
        if fx * fx + fy * fy <= e2:
            parts.append(perm[s:e])
        elif left[node] < 0:
            idx = perm[s:e]
            px = xy[idx, 0] - qx
            py = xy[idx, 1] - qy
            parts.append(idx[px * px + py * py <= e2])
        else:
            stack.append(right[node])
            stack.append(left[node])
    if not parts:
        return np.empty(0, dtype=np.int64)
    out = np.concatenate(parts)
    out.sort()
    return out


def _query(kind, tree, xy, qx, qy, eps):
    if kind == 0 or len(xy) == 0:
        return scan_radius(xy, qx, qy, eps)
    return kd_radius(tree, xy, qx, qy, eps)


def expand_all(rel_xy, irr_xy, eps, min_rel, max_irr, kind=0, rel_tree=None, irr_tree=None):
    """Run the DBSTexC cluster expansion over every relevant point.

    A relevant point is core when ``|X_eps| >= min_rel`` and
    ``|Y_eps| <= max_irr``.  Relevant points are visited in index order and
    every one of them is range-queried exactly once.

    Returns
    -------
    tuple
        ``(labels_x, labels_y, core, counts, src_x, src_y, n_clusters, n_queries)``
        where ``src_*`` holds, for each labeled point, the relevant index of
        the core point whose neighbourhood brought it into its cluster.
    """
    n, m = len(rel_xy), len(irr_xy)
    labels_x = np.full(n, NOISE, dtype=np.int64)
    labels_y = np.full(m, NOISE, dtype=np.int64)
    src_x = np.full(n, -1, dtype=np.int64)
    src_y = np.full(m, -1, dtype=np.int64)
    intro_x = np.full(n, -1, dtype=np.int64)
    intro_y = np.full(m, -1, dtype=np.int64)
    stamp_x = np.full(n, -1, dtype=np.int64)
    stamp_y = np.full(m, -1, dtype=np.int64)
    visited_x = np.zeros(n, dtype=bool)
    visited_y = np.zeros(m, dtype=bool)
    core = np.zeros(n, dtype=bool)
    counts = np.zeros((n, 2), dtype=np.int64)
    n_queries = 0
    c = 0

    def query(i):
        nonlocal n_queries
        qx, qy = rel_xy[i]
        xs = _query(kind, rel_tree, rel_xy, qx, qy, eps)
        ys = _query(kind, irr_tree, irr_xy, qx, qy, eps)
        n_queries += 1
        counts[i, 0] = len(xs)
        counts[i, 1] = len(ys)
        return xs, ys

    for i in range(n):
        if visited_x[i]:
            continue
        visited_x[i] = True
        xs, ys = query(i)
        if not (len(xs) >= min_rel and len(ys) <= max_irr):
            continue
        core[i] = True
        c += 1
        labels_x[i] = c
        src_x[i] = i
        frontier = []
        yset = []

        def merge(xs, ys, by):
            new = xs[stamp_x[xs] != c]
            stamp_x[new] = c
            intro_x[new] = by
            frontier.extend(new.tolist())
            new = ys[stamp_y[ys] != c]
            stamp_y[new] = c
            intro_y[new] = by
            yset.extend(new.tolist())

        merge(xs, ys, i)
        k = 0
        while k < len(frontier):
            j = frontier[k]
            k += 1
            if not visited_x[j]:
                visited_x[j] = True
                xj, yj = query(j)
                if len(xj) >= min_rel and len(yj) <= max_irr:
                    core[j] = True
                    merge(xj, yj, j)
            if labels_x[j] == NOISE:
                labels_x[j] = c
                src_x[j] = intro_x[j]
        for q in yset:
            if not visited_y[q]:
                visited_y[q] = True
                if labels_y[q] == NOISE:
                    labels_y[q] = c
                    src_y[q] = intro_y[q]

    return labels_x, labels_y, core, counts, src_x, src_y, c, n_queries
