"""Pure numpy implementations of the hot kernels.

Every function here has a twin in ``_ckernels.pyx`` with the same signature and
the same floating-point evaluation order, so either backend can be swapped in.
"""

import math

import numpy as np

BACKEND = "python"


def _libm(fn, a):
    # numpy's vectorized log/exp may differ from libm in the last bit; the
    # compiled kernels use libm, so the fallback does too
    return np.fromiter((fn(x) for x in a.tolist()), dtype=np.float64, count=a.shape[0])

# exp(x) is exactly 0.0 in double precision below this
_EXP_ZERO = -746.0


def update_min_dist(X, dmin, c):
    """In place: ``dmin[v] = min(dmin[v], ||X[v] - X[c]||)``."""
    diff = X - X[c]
    d = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    np.minimum(dmin, d, out=dmin)


def sorted_profile(dmin):
    """Order points by descending distance, ties by ascending index."""
    order = np.argsort(-dmin, kind="stable").astype(np.int64)
    return order, dmin[order]


def log_weights(dsorted):
    """Log ratios ``log(d_j / d_1)`` for the positive prefix, and its length."""
    n_pos = int(np.count_nonzero(dsorted > 0.0))
    lr = np.full(dsorted.shape[0], -np.inf)
    if n_pos:
        lr[:n_pos] = _libm(math.log, dsorted[:n_pos] / dsorted[0])
    return lr, n_pos


def _cumulative(lr, n_pos, alpha):
    if alpha == 0.0:
        w = np.ones(n_pos)
    else:
        w = _libm(math.exp, alpha * lr[:n_pos])
    return np.cumsum(w)


def pick_rank(lr, n_pos, alpha, z):
    """Rank whose d^alpha interval contains z. Requires ``n_pos > 0``."""
    return _rank_from(_cumulative(lr, n_pos, alpha), n_pos, z)


def pick_rank_inf(dsorted, n_pos, z):
    """Farthest-first pick: tied maxima share z equally in rank order."""
    ties = int(np.count_nonzero(dsorted[:n_pos] == dsorted[0]))
    r = int(z * ties)
    return min(r, ties - 1)


def _pick_degenerate(is_center, z):
    free = np.flatnonzero(~is_center)
    j = min(int(z * free.shape[0]), free.shape[0] - 1)
    return int(free[j])


def seed_centers(X, z, alpha, inf):
    """Phase-1 seeding for one (instance, Z, alpha)."""
    n = X.shape[0]
    k = z.shape[0]
    centers = np.empty(k, dtype=np.int64)
    is_center = np.zeros(n, dtype=bool)
    c = min(int(z[0] * n), n - 1)
    centers[0] = c
    is_center[c] = True
    dmin = np.full(n, np.inf)
    for t in range(1, k):
        update_min_dist(X, dmin, c)
        order, ds = sorted_profile(dmin)
        lr, n_pos = log_weights(ds)
        if n_pos == 0:
            c = _pick_degenerate(is_center, z[t])
        elif inf:
            c = int(order[pick_rank_inf(ds, n_pos, z[t])])
        else:
            c = int(order[pick_rank(lr, n_pos, alpha, z[t])])
        centers[t] = c
        is_center[c] = True
    return centers


def seed_batch(X, z, alphas):
    """Seeding at many alphas; ``inf`` entries mean farthest-first."""
    out = np.empty((len(alphas), z.shape[0]), dtype=np.int64)
    for j, a in enumerate(alphas):
        inf = bool(np.isinf(a))
        out[j] = seed_centers(X, z, 0.0 if inf else float(a), inf)
    return out


def alpha_at(idx, a_lo, a_hi, L):
    g = 1 << L
    if idx >= g:
        return a_hi
    return a_lo + idx * ((a_hi - a_lo) / g)


def _gap(cum, r, z):
    """``D_r / D_n - z`` (``r`` 1-based): positive exactly when the pick lands
    below rank ``r``. It only aims the next probe."""
    return cum[r - 1] / cum[-1] - z


def _rank_from(cum, n_pos, z):
    r = int(np.searchsorted(cum, z * cum[-1], side="right"))
    if r >= n_pos:
        r = n_pos - 1
    while r > 0 and cum[r] == cum[r - 1]:
        r -= 1
    return r


def _boundary(lr, n_pos, z, a_lo, a_hi, L, lo, hi, r, g_lo, g_hi):
    """First grid index in ``(lo, hi]`` whose pick is below rank ``r``.

    Probes follow Illinois regula falsi on the gap, clamped so the bracket
    left over always fits the remaining budget of ``L - steps`` halvings.
    """
    steps = 0
    side = 0
    while hi - lo > 1:
        w = hi - lo
        half = 1 << (L - steps - 1)
        if g_hi > g_lo:
            p = lo + int(-g_lo / (g_hi - g_lo) * w + 0.5)
        else:
            p = lo + (w >> 1)
        p = min(max(p, lo + 1, hi - half), hi - 1, lo + half)
        steps += 1
        cum = _cumulative(lr, n_pos, alpha_at(p, a_lo, a_hi, L))
        g = _gap(cum, r, z)
        if _rank_from(cum, n_pos, z) < r:
            hi, g_hi = p, g
            if side == 1:
                g_lo *= 0.5
            side = 1
        else:
            lo, g_lo = p, g
            if side == -1:
                g_hi *= 0.5
            side = -1
    return hi, steps


def child_splits(lr, n_pos, z, a_lo, a_hi, L, lo_idx, hi_idx):
    """Partition grid indices ``[lo_idx, hi_idx)`` by the rank picked at each.

    Returns ``(starts, ranks, max_steps)``: child ``j`` covers
    ``[starts[j], starts[j+1])`` and picks ``ranks[j]``; ``max_steps`` is the
    largest number of search steps spent on one boundary (at most ``L``).
    """
    last = hi_idx - 1
    cum_last = _cumulative(lr, n_pos, alpha_at(last, a_lo, a_hi, L))
    cum = _cumulative(lr, n_pos, alpha_at(lo_idx, a_lo, a_hi, L))
    r = _rank_from(cum, n_pos, z)
    r_last = _rank_from(cum_last, n_pos, z)
    starts = [lo_idx]
    ranks = [r]
    max_steps = 0
    cur = lo_idx
    while r > r_last:
        cur, steps = _boundary(lr, n_pos, z, a_lo, a_hi, L, cur, last, r, _gap(cum, r, z),
                               _gap(cum_last, r, z))
        max_steps = max(max_steps, steps)
        cum = _cumulative(lr, n_pos, alpha_at(cur, a_lo, a_hi, L))
        r = _rank_from(cum, n_pos, z)
        starts.append(cur)
        ranks.append(r)
    return (np.asarray(starts, dtype=np.int64), np.asarray(ranks, dtype=np.int64),
            max_steps)


def voronoi(X, C):
    """Nearest-center assignment; ties go to the lowest center position."""
    n = X.shape[0]
    best = np.full(n, np.inf)
    assign = np.zeros(n, dtype=np.int64)
    for j in range(C.shape[0]):
        diff = X - C[j]
        d2 = np.einsum("ij,ij->i", diff, diff)
        closer = d2 < best
        best[closer] = d2[closer]
        assign[closer] = j
    return assign


def _medoid(X, members, candidates, beta):
    diff = X[candidates][:, None, :] - X[members][None, :, :]
    d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    if np.isinf(beta):
        cost = d.max(axis=1)
    else:
        if beta == 1.0:
            p = d
        elif beta == 2.0:
            p = d * d
        else:
            p = _libm(lambda x: math.pow(x, beta), d.ravel()).reshape(d.shape)
        cost = np.zeros(candidates.shape[0])
        for j in range(members.shape[0]):
            cost += p[:, j]
    return int(candidates[int(np.argmin(cost))])


def lloyds_medoid(X, centers, beta, T, full_scan):
    """Medoid Lloyd's iterations. Returns (assign, centers, iters, converged)."""
    n = X.shape[0]
    k = centers.shape[0]
    C = centers.astype(np.int64).copy()
    everyone = np.arange(n, dtype=np.int64)
    for it in range(1, T + 1):
        assign = voronoi(X, X[C])
        new = C.copy()
        for i in range(k):
            members = np.flatnonzero(assign == i)
            if members.shape[0] == 0:
                continue
            cand = everyone if full_scan else members
            new[i] = _medoid(X, members, cand, beta)
        if set(new.tolist()) == set(C.tolist()):
            return assign, C, it, True
        C = new
    return voronoi(X, X[C]), C, T, False


def lloyds_mean(X, centers, T):
    """Centroid Lloyd's iterations. Returns (assign, centers, iters, converged)."""
    k, dim = centers.shape
    C = centers.astype(np.float64).copy()
    for it in range(1, T + 1):
        assign = voronoi(X, C)
        counts = np.bincount(assign, minlength=k)
        new = C.copy()
        for j in range(dim):
            s = np.bincount(assign, weights=X[:, j], minlength=k)
            nz = counts > 0
            new[nz, j] = s[nz] / counts[nz]
        if np.all(np.abs(new - C) <= 1e-12):
            return assign, C, it, True
        C = new
    return voronoi(X, C), C, T, False


def hungarian_max(W):
    """Assignment maximizing ``sum W[i, perm[i]]`` (Kuhn-Munkres, O(k^3))."""
    W = np.asarray(W, dtype=np.float64)
    n = W.shape[0]
    cost = W.max() - W if n else W
    INF = np.inf
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    p = [0] * (n + 1)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [INF] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = INF
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    perm = np.empty(n, dtype=np.int64)
    for j in range(1, n + 1):
        perm[p[j] - 1] = j - 1
    return perm


def mismatches(assign, target, k):
    """Points outside the best label matching: ``n - max agreement``."""
    conf = np.zeros((k, k), dtype=np.int64)
    np.add.at(conf, (assign, target), 1)
    perm = hungarian_max(conf)
    agree = int(conf[np.arange(k), perm].sum())
    return int(assign.shape[0]) - agree
