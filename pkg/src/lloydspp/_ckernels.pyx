# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Mirrors ``_pykernels`` function for function."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, sqrt, pow, INFINITY, isinf
from libc.stdlib cimport malloc, free, qsort

cnp.import_array()

BACKEND = "cython"

cdef double _EXP_ZERO = -746.0


cdef struct Keyed:
    double d
    long long idx


cdef int _cmp_desc(const void* a, const void* b) noexcept nogil:
    cdef Keyed* x = <Keyed*>a
    cdef Keyed* y = <Keyed*>b
    if x.d > y.d:
        return -1
    if x.d < y.d:
        return 1
    if x.idx < y.idx:
        return -1
    if x.idx > y.idx:
        return 1
    return 0


cdef void _update_min(const double[:, ::1] X, double[::1] dmin, Py_ssize_t c) noexcept nogil:
    cdef Py_ssize_t n = X.shape[0], dim = X.shape[1], v, j
    cdef double s, t
    for v in range(n):
        s = 0.0
        for j in range(dim):
            t = X[v, j] - X[c, j]
            s += t * t
        s = sqrt(s)
        if s < dmin[v]:
            dmin[v] = s


def update_min_dist(const double[:, ::1] X, double[::1] dmin, Py_ssize_t c):
    with nogil:
        _update_min(X, dmin, c)


cdef void _sort_profile(const double[::1] dmin, long long* order, double* ds,
                        Keyed* buf) noexcept nogil:
    cdef Py_ssize_t n = dmin.shape[0], i
    for i in range(n):
        buf[i].d = dmin[i]
        buf[i].idx = i
    qsort(buf, n, sizeof(Keyed), _cmp_desc)
    for i in range(n):
        order[i] = buf[i].idx
        ds[i] = buf[i].d


def sorted_profile(const double[::1] dmin):
    cdef Py_ssize_t n = dmin.shape[0]
    order = np.empty(n, dtype=np.int64)
    ds = np.empty(n, dtype=np.float64)
    cdef long long[::1] o = order
    cdef double[::1] d = ds
    cdef Keyed* buf = <Keyed*>malloc(max(n, 1) * sizeof(Keyed))
    with nogil:
        _sort_profile(dmin, &o[0], &d[0], buf)
    free(buf)
    return order, ds


cdef Py_ssize_t _log_weights(const double* ds, double* lr, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, n_pos = 0
    for i in range(n):
        if ds[i] > 0.0:
            n_pos += 1
    for i in range(n):
        if i < n_pos:
            lr[i] = log(ds[i] / ds[0])
        else:
            lr[i] = -INFINITY
    return n_pos


def log_weights(const double[::1] dsorted):
    cdef Py_ssize_t n = dsorted.shape[0]
    lr = np.empty(n, dtype=np.float64)
    cdef double[::1] l = lr
    cdef Py_ssize_t n_pos
    with nogil:
        n_pos = _log_weights(&dsorted[0], &l[0], n)
    return lr, n_pos


cdef Py_ssize_t _pick(const double* lr, Py_ssize_t n_pos, double alpha, double z,
                      double* cum) noexcept nogil:
    cdef Py_ssize_t j, m = n_pos, r
    cdef double s = 0.0, x, target
    for j in range(n_pos):
        if alpha == 0.0:
            s += 1.0
        else:
            x = alpha * lr[j]
            if x < _EXP_ZERO:
                m = j
                break
            s += exp(x)
        cum[j] = s
    target = z * s
    r = m - 1
    for j in range(m):
        if cum[j] > target:
            return j
    # only reached when z * s rounds up to s
    while r > 0 and cum[r] == cum[r - 1]:
        r -= 1
    return r


def pick_rank(const double[::1] lr, Py_ssize_t n_pos, double alpha, double z):
    cdef double* cum = <double*>malloc(max(n_pos, 1) * sizeof(double))
    cdef Py_ssize_t r
    with nogil:
        r = _pick(&lr[0], n_pos, alpha, z, cum)
    free(cum)
    return r


cdef Py_ssize_t _pick_inf(const double* ds, Py_ssize_t n_pos, double z) noexcept nogil:
    cdef Py_ssize_t ties = 0, j, r
    for j in range(n_pos):
        if ds[j] == ds[0]:
            ties += 1
    r = <Py_ssize_t>(z * ties)
    if r > ties - 1:
        r = ties - 1
    return r


def pick_rank_inf(const double[::1] dsorted, Py_ssize_t n_pos, double z):
    return _pick_inf(&dsorted[0], n_pos, z)


cdef void _seed(const double[:, ::1] X, const double[::1] z, double alpha, bint inf,
                double[::1] dmin, char* is_center, long long* order, double* ds,
                double* lr, double* cum, Keyed* buf, long long* out) noexcept nogil:
    cdef Py_ssize_t n = X.shape[0], k = z.shape[0], t, j, c, n_pos, free_count
    for j in range(n):
        is_center[j] = 0
        dmin[j] = INFINITY
    c = <Py_ssize_t>(z[0] * n)
    if c > n - 1:
        c = n - 1
    out[0] = c
    is_center[c] = 1
    for t in range(1, k):
        _update_min(X, dmin, c)
        _sort_profile(dmin, order, ds, buf)
        n_pos = _log_weights(ds, lr, n)
        if n_pos == 0:
            free_count = 0
            for j in range(n):
                if not is_center[j]:
                    free_count += 1
            c = <Py_ssize_t>(z[t] * free_count)
            if c > free_count - 1:
                c = free_count - 1
            for j in range(n):
                if not is_center[j]:
                    if c == 0:
                        c = j
                        break
                    c -= 1
        elif inf:
            c = order[_pick_inf(ds, n_pos, z[t])]
        else:
            c = order[_pick(lr, n_pos, alpha, z[t], cum)]
        out[t] = c
        is_center[c] = 1


def seed_batch(const double[:, ::1] X, const double[::1] z, const double[::1] alphas):
    """Seeding at many alphas; ``inf`` entries mean farthest-first."""
    cdef Py_ssize_t n = X.shape[0], k = z.shape[0], a, na = alphas.shape[0]
    out = np.empty((na, k), dtype=np.int64)
    cdef long long[:, ::1] o = out
    cdef double[::1] dmin = np.empty(n)
    cdef char* is_center = <char*>malloc(n)
    cdef long long* order = <long long*>malloc(n * sizeof(long long))
    cdef double* ds = <double*>malloc(n * sizeof(double))
    cdef double* lr = <double*>malloc(n * sizeof(double))
    cdef double* cum = <double*>malloc(n * sizeof(double))
    cdef Keyed* buf = <Keyed*>malloc(n * sizeof(Keyed))
    cdef bint inf
    with nogil:
        for a in range(na):
            inf = isinf(alphas[a])
            _seed(X, z, 0.0 if inf else alphas[a], inf, dmin, is_center, order, ds,
                  lr, cum, buf, &o[a, 0])
    free(is_center); free(order); free(ds); free(lr); free(cum); free(buf)
    return out


def seed_centers(const double[:, ::1] X, const double[::1] z, double alpha, bint inf):
    return seed_batch(X, z, np.array([np.inf if inf else alpha]))[0]


cdef inline double _alpha_at(long long idx, double a_lo, double a_hi, int L) noexcept nogil:
    cdef long long g = (<long long>1) << L
    if idx >= g:
        return a_hi
    return a_lo + idx * ((a_hi - a_lo) / g)


def alpha_at(long long idx, double a_lo, double a_hi, int L):
    return _alpha_at(idx, a_lo, a_hi, L)


cdef double _gap(const double* lr, Py_ssize_t n_pos, double alpha, double z,
                 const double* cum, Py_ssize_t r) noexcept nogil:
    # D_r / D_n - z (r 1-based) from a cum array just filled by _pick; it is
    # > 0 exactly when the pick lands below rank r and only aims the next probe
    cdef Py_ssize_t m = n_pos, j
    cdef double s
    if alpha != 0.0:
        for j in range(n_pos):
            if alpha * lr[j] < _EXP_ZERO:
                m = j
                break
    s = cum[m - 1]
    return (cum[r - 1] if r - 1 < m else s) / s - z


cdef long long _boundary(const double* lr, Py_ssize_t n_pos, double z, double a_lo,
                         double a_hi, int L, long long lo, long long hi, Py_ssize_t r,
                         double g_lo, double g_hi, double* cum, int* steps_out) noexcept nogil:
    # First grid index in (lo, hi] whose pick is below rank r; pick(lo) >= r > pick(hi).
    # Probes follow Illinois regula falsi on the gap, clamped so the bracket
    # left over always fits the remaining budget of L - steps halvings.
    cdef int steps = 0, side = 0
    cdef long long w, p, half, a, b
    cdef Py_ssize_t q
    cdef double g, frac, alpha
    while hi - lo > 1:
        w = hi - lo
        half = (<long long>1) << (L - steps - 1)
        if g_hi > g_lo:
            frac = -g_lo / (g_hi - g_lo)
            p = lo + <long long>(frac * w + 0.5)
        else:
            p = lo + (w >> 1)
        a = lo + 1 if lo + 1 > hi - half else hi - half
        b = hi - 1 if hi - 1 < lo + half else lo + half
        if p < a:
            p = a
        elif p > b:
            p = b
        steps += 1
        alpha = _alpha_at(p, a_lo, a_hi, L)
        q = _pick(lr, n_pos, alpha, z, cum)
        g = _gap(lr, n_pos, alpha, z, cum, r)
        if q < r:
            hi = p
            g_hi = g
            if side == 1:
                g_lo *= 0.5
            side = 1
        else:
            lo = p
            g_lo = g
            if side == -1:
                g_hi *= 0.5
            side = -1
    steps_out[0] = steps
    return hi


def child_splits(const double[::1] lr, Py_ssize_t n_pos, double z, double a_lo,
                 double a_hi, int L, long long lo_idx, long long hi_idx):
    cdef long long last = hi_idx - 1, cur = lo_idx
    cdef Py_ssize_t r, r_last
    cdef int steps = 0, max_steps = 0
    cdef double g_lo, g_hi, alpha, alpha_last = _alpha_at(last, a_lo, a_hi, L)
    cdef double* cum = <double*>malloc(max(n_pos, 1) * sizeof(double))
    cdef double* cum_last = <double*>malloc(max(n_pos, 1) * sizeof(double))
    starts = [lo_idx]
    with nogil:
        alpha = _alpha_at(lo_idx, a_lo, a_hi, L)
        r = _pick(&lr[0], n_pos, alpha, z, cum)
        r_last = _pick(&lr[0], n_pos, alpha_last, z, cum_last)
    ranks = [r]
    while r > r_last:
        with nogil:
            g_lo = _gap(&lr[0], n_pos, alpha, z, cum, r)
            g_hi = _gap(&lr[0], n_pos, alpha_last, z, cum_last, r)
            cur = _boundary(&lr[0], n_pos, z, a_lo, a_hi, L, cur, last, r, g_lo, g_hi,
                            cum, &steps)
            if steps > max_steps:
                max_steps = steps
            alpha = _alpha_at(cur, a_lo, a_hi, L)
            r = _pick(&lr[0], n_pos, alpha, z, cum)
        starts.append(cur)
        ranks.append(r)
    free(cum)
    free(cum_last)
    return (np.asarray(starts, dtype=np.int64), np.asarray(ranks, dtype=np.int64),
            max_steps)


cdef void _voronoi(const double[:, ::1] X, const double[:, ::1] C,
                   long long[::1] assign) noexcept nogil:
    cdef Py_ssize_t n = X.shape[0], k = C.shape[0], dim = X.shape[1], v, i, j
    cdef double best, s, t
    for v in range(n):
        best = INFINITY
        assign[v] = 0
        for i in range(k):
            s = 0.0
            for j in range(dim):
                t = X[v, j] - C[i, j]
                s += t * t
            if s < best:
                best = s
                assign[v] = i


def voronoi(const double[:, ::1] X, const double[:, ::1] C):
    assign = np.zeros(X.shape[0], dtype=np.int64)
    cdef long long[::1] a = assign
    with nogil:
        _voronoi(X, C, a)
    return assign


cdef inline double _dist(const double[:, ::1] X, Py_ssize_t a, Py_ssize_t b) noexcept nogil:
    cdef Py_ssize_t j
    cdef double s = 0.0, t
    for j in range(X.shape[1]):
        t = X[a, j] - X[b, j]
        s += t * t
    return sqrt(s)


def lloyds_medoid(const double[:, ::1] X, centers, double beta, int T, bint full_scan):
    cdef Py_ssize_t n = X.shape[0], k = centers.shape[0], dim = X.shape[1]
    cdef Py_ssize_t i, j, v, x, xi, it, cnt, best_x
    cdef double cost, best, d
    cdef bint binf = isinf(beta)
    C = np.asarray(centers, dtype=np.int64).copy()
    new = C.copy()
    coords = np.empty((k, dim), dtype=np.float64)
    assign = np.zeros(n, dtype=np.int64)
    cdef long long[::1] cv, nv
    cdef long long[::1] a = assign
    cdef double[:, ::1] cc = coords
    cdef long long* members = <long long*>malloc(n * sizeof(long long))
    for it in range(1, T + 1):
        cv = C
        nv = new
        with nogil:
            for i in range(k):
                for j in range(dim):
                    cc[i, j] = X[cv[i], j]
            _voronoi(X, cc, a)
            for i in range(k):
                nv[i] = cv[i]
                cnt = 0
                for v in range(n):
                    if a[v] == i:
                        members[cnt] = v
                        cnt += 1
                if cnt == 0:
                    continue
                best = INFINITY
                best_x = cv[i]
                for xi in range(n if full_scan else cnt):
                    x = xi if full_scan else members[xi]
                    cost = 0.0
                    for v in range(cnt):
                        d = _dist(X, x, members[v])
                        if binf:
                            if d > cost:
                                cost = d
                        elif beta == 1.0:
                            cost += d
                        elif beta == 2.0:
                            cost += d * d
                        else:
                            cost += pow(d, beta)
                    if cost < best:
                        best = cost
                        best_x = x
                nv[i] = best_x
        if set(new.tolist()) == set(C.tolist()):
            free(members)
            return assign, C, it, True
        C, new = new, C
    free(members)
    cv = C
    for i in range(k):
        for j in range(dim):
            cc[i, j] = X[cv[i], j]
    _voronoi(X, cc, a)
    return assign, C, T, False


def lloyds_mean(const double[:, ::1] X, centers, int T):
    cdef Py_ssize_t n = X.shape[0], k = centers.shape[0], dim = X.shape[1]
    cdef Py_ssize_t i, j, v, it
    cdef bint same
    C = np.array(centers, dtype=np.float64, order="C")
    new = C.copy()
    assign = np.zeros(n, dtype=np.int64)
    cdef long long[::1] a = assign
    cdef double[:, ::1] cv, nv
    cdef long long* counts = <long long*>malloc(k * sizeof(long long))
    for it in range(1, T + 1):
        cv = C
        nv = new
        with nogil:
            _voronoi(X, cv, a)
            for i in range(k):
                counts[i] = 0
                for j in range(dim):
                    nv[i, j] = 0.0
            for v in range(n):
                counts[a[v]] += 1
                for j in range(dim):
                    nv[a[v], j] += X[v, j]
            same = True
            for i in range(k):
                for j in range(dim):
                    if counts[i] > 0:
                        nv[i, j] = nv[i, j] / counts[i]
                    else:
                        nv[i, j] = cv[i, j]
                    if not (nv[i, j] - cv[i, j] <= 1e-12 and cv[i, j] - nv[i, j] <= 1e-12):
                        same = False
        if same:
            free(counts)
            return assign, C, it, True
        C, new = new, C
    free(counts)
    _voronoi(X, C, a)
    return assign, C, T, False


cdef void _hungarian(const double* cost, Py_ssize_t n, long long* perm,
                     double* u, double* v, long long* p, long long* way,
                     double* minv, char* used) noexcept nogil:
    cdef Py_ssize_t i, j, i0, j0, j1
    cdef double delta, cur
    for j in range(n + 1):
        u[j] = 0.0
        v[j] = 0.0
        p[j] = 0
        way[j] = 0
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        for j in range(n + 1):
            minv[j] = INFINITY
            used[j] = 0
        while True:
            used[j0] = 1
            i0 = p[j0]
            delta = INFINITY
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j]
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
    for j in range(1, n + 1):
        perm[p[j] - 1] = j - 1


def hungarian_max(W):
    W = np.ascontiguousarray(W, dtype=np.float64)
    cdef Py_ssize_t n = W.shape[0]
    perm = np.empty(n, dtype=np.int64)
    if n == 0:
        return perm
    cost = np.ascontiguousarray(W.max() - W)
    cdef double[:, ::1] cv = cost
    cdef long long[::1] pv = perm
    cdef double* u = <double*>malloc((n + 1) * sizeof(double))
    cdef double* v = <double*>malloc((n + 1) * sizeof(double))
    cdef double* minv = <double*>malloc((n + 1) * sizeof(double))
    cdef long long* p = <long long*>malloc((n + 1) * sizeof(long long))
    cdef long long* way = <long long*>malloc((n + 1) * sizeof(long long))
    cdef char* used = <char*>malloc(n + 1)
    with nogil:
        _hungarian(&cv[0, 0], n, &pv[0], u, v, p, way, minv, used)
    free(u); free(v); free(minv); free(p); free(way); free(used)
    return perm


def mismatches(const long long[::1] assign, const long long[::1] target, Py_ssize_t k):
    cdef Py_ssize_t n = assign.shape[0], i, j
    cdef long long agree = 0
    conf = np.zeros((k, k), dtype=np.int64)
    cdef long long[:, ::1] cf = conf
    for i in range(n):
        cf[assign[i], target[i]] += 1
    perm = hungarian_max(conf)
    cdef long long[::1] pv = perm
    for i in range(k):
        agree += cf[i, pv[i]]
    return n - agree
