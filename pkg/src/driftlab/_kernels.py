"""Hot numeric kernels: dynamic time warping and 1-D k-means.

Both kernels exist twice: a plain-numpy reference implementation and a
numba-compiled version of the same code. The compiled path is used when
numba imports cleanly and the environment variable ``DRIFTLAB_NUMBA`` is
not set to ``0``. ``benchmarks/bench_kernels.py`` times the two paths
against each other.
"""

import os

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False

NUMBA_ENABLED = _HAVE_NUMBA and os.environ.get("DRIFTLAB_NUMBA", "1") != "0"


def _dtw_cost_numpy(a, b):
    """Accumulated DTW cost matrix between point sequences a (n,2) and b (m,2).

    Euclidean point cost, unit steps (1,0), (0,1), (1,1). Returns the
    (n+1, m+1) matrix with the usual +inf padding in row/column 0.
    """
    n, m = a.shape[0], b.shape[0]
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        cost = np.hypot(b[:, 0] - a[i - 1, 0], b[:, 1] - a[i - 1, 1])
        for j in range(1, m + 1):
            acc[i, j] = cost[j - 1] + min(acc[i - 1, j], acc[i, j - 1], acc[i - 1, j - 1])
    return acc


def _dtw_cost_loops(a, b):
    n, m = a.shape[0], b.shape[0]
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            dx = a[i - 1, 0] - b[j - 1, 0]
            dy = a[i - 1, 1] - b[j - 1, 1]
            cost = (dx * dx + dy * dy) ** 0.5
            best = acc[i - 1, j - 1]
            if acc[i - 1, j] < best:
                best = acc[i - 1, j]
            if acc[i, j - 1] < best:
                best = acc[i, j - 1]
            acc[i, j] = cost + best
    return acc


def _kmeans_1d_numpy(values, centers, max_iter):
    """Lloyd iterations for 1-D k-means.

    ``values`` and ``centers`` must be sorted ascending. Ties between two
    equidistant centers go to the lower index. Returns (labels, centers,
    inertia, ok) where ok is 0 if a cluster emptied out.
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    centers = centers.astype(np.float64).copy()
    k = centers.shape[0]
    labels = np.zeros(values.shape[0], dtype=np.int64)
    for _ in range(max_iter):
        dist = np.abs(values[:, None] - centers[None, :])
        new_labels = np.argmin(dist, axis=1)
        counts = np.bincount(new_labels, minlength=k)
        if np.any(counts == 0):
            return labels, centers, np.inf, 0
        sums = np.bincount(new_labels, weights=values, minlength=k)
        new_centers = sums / counts
        if np.array_equal(new_labels, labels) and np.allclose(new_centers, centers):
            centers = new_centers
            break
        labels = new_labels
        centers = new_centers
    inertia = float(np.sum((values - centers[labels]) ** 2))
    return labels, centers, inertia, 1


def _kmeans_1d_loops(values, centers, max_iter):
    n = values.shape[0]
    k = centers.shape[0]
    centers = centers.copy()
    labels = np.zeros(n, dtype=np.int64)
    sums = np.zeros(k)
    counts = np.zeros(k, dtype=np.int64)
    for _ in range(max_iter):
        changed = False
        for i in range(n):
            best = 0
            best_d = abs(values[i] - centers[0])
            for c in range(1, k):
                d = abs(values[i] - centers[c])
                if d < best_d:
                    best_d = d
                    best = c
            if labels[i] != best:
                labels[i] = best
                changed = True
        sums[:] = 0.0
        counts[:] = 0
        for i in range(n):
            sums[labels[i]] += values[i]
            counts[labels[i]] += 1
        for c in range(k):
            if counts[c] == 0:
                return labels, centers, np.inf, 0
            centers[c] = sums[c] / counts[c]
        if not changed:
            break
    inertia = 0.0
    for i in range(n):
        d = values[i] - centers[labels[i]]
        inertia += d * d
    return labels, centers, inertia, 1


if NUMBA_ENABLED:
    _dtw_cost_jit = njit(cache=True)(_dtw_cost_loops)
    _kmeans_1d_jit = njit(cache=True)(_kmeans_1d_loops)
    dtw_cost = _dtw_cost_jit
    kmeans_1d_lloyd = _kmeans_1d_jit
else:
    dtw_cost = _dtw_cost_numpy
    kmeans_1d_lloyd = _kmeans_1d_numpy


def dtw_path(acc):
    """Trace the optimal warp path back through an accumulated cost matrix.

    Returns a list of (i, j) index pairs in original (unpadded) coordinates,
    from (0, 0) to (n-1, m-1). Diagonal steps win ties.
    """
    i, j = acc.shape[0] - 1, acc.shape[1] - 1
    path = [(i - 1, j - 1)]
    while i > 1 or j > 1:
        options = (acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1])
        move = int(np.argmin(options))
        if move == 0:
            i -= 1
            j -= 1
        elif move == 1:
            i -= 1
        else:
            j -= 1
        path.append((i - 1, j - 1))
    path.reverse()
    return path


def kmeans_1d(values, k, max_iter=100, restarts=10, seed=0):
    """Deterministic 1-D k-means over unsorted values.

    First attempt seeds centers at quantiles of the distinct sorted values;
    the remaining restarts draw k distinct values with a seeded generator.
    Returns (labels aligned with the input order, sorted centers). Raises
    ValueError when fewer than k distinct values exist or all restarts
    produce an empty cluster.
    """
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    distinct = np.unique(sorted_vals)
    if distinct.shape[0] < k:
        raise ValueError(f"need at least {k} distinct values, got {distinct.shape[0]}")

    quantile_idx = np.floor((np.arange(k) + 0.5) * distinct.shape[0] / k).astype(np.int64)
    seedings = [distinct[quantile_idx]]
    rng = np.random.default_rng(seed)
    for _ in range(max(0, restarts - 1)):
        pick = rng.choice(distinct.shape[0], size=k, replace=False)
        seedings.append(np.sort(distinct[pick]))

    best = None
    for centers0 in seedings:
        labels, centers, inertia, ok = kmeans_1d_lloyd(sorted_vals, centers0, max_iter)
        if ok and (best is None or inertia < best[2] - 1e-12):
            best = (labels.copy(), centers.copy(), inertia)
    if best is None:
        raise ValueError("k-means failed: empty cluster in every restart")

    labels_sorted, centers, _ = best
    # Lloyd on sorted 1-D data keeps clusters in interval order, but re-rank
    # by center to be safe before mapping labels back to input order.
    rank = np.argsort(centers, kind="stable")
    remap = np.empty(k, dtype=np.int64)
    remap[rank] = np.arange(k)
    labels = np.empty(values.shape[0], dtype=np.int64)
    labels[order] = remap[labels_sorted]
    return labels, centers[rank]
