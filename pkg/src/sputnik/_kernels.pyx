# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the hot loops: ranking, crowding, 2-D hypervolume and
batch evaluation of placement genomes.

Every function here has a twin with the same signature in ``_pykernels``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, floor

cnp.import_array()


cdef inline bint _dominates(const double[:, ::1] F, Py_ssize_t a, Py_ssize_t b, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t k
    cdef bint strict = False
    for k in range(m):
        if F[a, k] > F[b, k]:
            return False
        if F[a, k] < F[b, k]:
            strict = True
    return strict


def nondominated_ranks(F):
    """Pareto rank of every row of ``F`` (0 = non-dominated), minimization."""
    cdef const double[:, ::1] f = np.ascontiguousarray(F, dtype=np.float64)
    cdef Py_ssize_t n = f.shape[0], m = f.shape[1]
    cdef Py_ssize_t i, j, head, tail, p, q
    rank_arr = np.full(n, -1, dtype=np.int64)
    cdef long long[::1] rank = rank_arr
    cdef long long[::1] count = np.zeros(n, dtype=np.int64)
    # dominated-by lists stored as a dense n x n byte matrix; n is a few hundred at most
    cdef unsigned char[:, ::1] dom = np.zeros((n, n), dtype=np.uint8)
    cdef long long[::1] queue = np.empty(n, dtype=np.int64)

    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                if _dominates(f, i, j, m):
                    dom[i, j] = 1
                    count[j] += 1
                elif _dominates(f, j, i, m):
                    dom[j, i] = 1
                    count[i] += 1
        tail = 0
        for i in range(n):
            if count[i] == 0:
                rank[i] = 0
                queue[tail] = i
                tail += 1
        head = 0
        while head < tail:
            p = queue[head]
            head += 1
            for q in range(n):
                if dom[p, q]:
                    count[q] -= 1
                    if count[q] == 0:
                        rank[q] = rank[p] + 1
                        queue[tail] = q
                        tail += 1
    return rank_arr


def crowding_distance(F):
    """Deb's crowding distance of the rows of one front."""
    arr = np.ascontiguousarray(F, dtype=np.float64)
    cdef const double[:, ::1] f = arr
    cdef Py_ssize_t n = f.shape[0], m = f.shape[1]
    dist_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] dist = dist_arr
    cdef long long[::1] order
    cdef Py_ssize_t k, i
    cdef double lo, hi, span
    if n == 0:
        return dist_arr
    if n <= 2:
        dist_arr[:] = np.inf
        return dist_arr
    for k in range(m):
        order = np.argsort(arr[:, k], kind="stable").astype(np.int64)
        lo = f[order[0], k]
        hi = f[order[n - 1], k]
        span = hi - lo
        dist[order[0]] = INFINITY
        dist[order[n - 1]] = INFINITY
        if span <= 0.0:
            continue
        for i in range(1, n - 1):
            dist[order[i]] += (f[order[i + 1], k] - f[order[i - 1], k]) / span
    return dist_arr


def hypervolume_2d(points, ref):
    """Area dominated by ``points`` and bounded by ``ref``; no input checking."""
    arr = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[:, ::1] p = arr
    cdef Py_ssize_t n = p.shape[0]
    if n == 0:
        return 0.0
    cdef double r0 = ref[0], r1 = ref[1]
    cdef long long[::1] order = np.lexsort((arr[:, 1], arr[:, 0])).astype(np.int64)
    cdef double area = 0.0, ceiling = r1, x, y
    cdef Py_ssize_t i
    for i in range(n):
        x = p[order[i], 0]
        y = p[order[i], 1]
        if y < ceiling:
            area += (r0 - x) * (ceiling - y)
            ceiling = y
    return area


def evaluate_placements(masks, vm_cost, vm_latency):
    """Cost and latency of a batch of (components x vms) placement masks."""
    cdef const unsigned char[:, :, ::1] g = np.ascontiguousarray(masks).view(np.uint8)
    cdef const double[::1] c = np.ascontiguousarray(vm_cost, dtype=np.float64)
    cdef const double[::1] lat = np.ascontiguousarray(vm_latency, dtype=np.float64)
    cdef Py_ssize_t b = g.shape[0], nc = g.shape[1], nv = g.shape[2]
    cost_arr = np.zeros(b, dtype=np.float64)
    latency_arr = np.zeros(b, dtype=np.float64)
    cdef double[::1] cost = cost_arr
    cdef double[::1] latency = latency_arr
    cdef unsigned char[::1] active = np.zeros(nv, dtype=np.uint8)
    cdef Py_ssize_t i, j, v
    cdef double best, total
    with nogil:
        for i in range(b):
            for v in range(nv):
                active[v] = 0
            total = 0.0
            for j in range(nc):
                best = INFINITY
                for v in range(nv):
                    if g[i, j, v]:
                        active[v] = 1
                        if lat[v] < best:
                            best = lat[v]
                total += best
            latency[i] = total / nc if nc > 0 else 0.0
            total = 0.0
            for v in range(nv):
                if active[v]:
                    total += c[v]
            cost[i] = total
    return cost_arr, latency_arr


def dominance_relation(F, f):
    """Per row of ``F``: 1 if ``f`` dominates it, -1 if it dominates ``f``, else 0."""
    cdef const double[:, ::1] P = np.ascontiguousarray(F, dtype=np.float64)
    cdef const double[::1] x = np.ascontiguousarray(f, dtype=np.float64)
    cdef Py_ssize_t n = P.shape[0], m = P.shape[1], i, k
    rel_arr = np.zeros(n, dtype=np.int8)
    cdef signed char[::1] rel = rel_arr
    cdef bint better, worse
    with nogil:
        for i in range(n):
            better = False
            worse = False
            for k in range(m):
                if x[k] < P[i, k]:
                    better = True
                elif x[k] > P[i, k]:
                    worse = True
            if better and not worse:
                rel[i] = 1
            elif worse and not better:
                rel[i] = -1
    return rel_arr


def epsilon_archive_update(A, f, eps):
    """Decide whether ``f`` enters an epsilon-box archive with objectives ``A``.

    Returns ``(accepted, keep)`` where ``keep`` flags the archive rows that
    survive when the candidate is accepted.
    """
    cdef const double[:, ::1] P = np.ascontiguousarray(A, dtype=np.float64).reshape(-1, len(f))
    cdef const double[::1] x = np.ascontiguousarray(f, dtype=np.float64)
    cdef const double[::1] e = np.ascontiguousarray(eps, dtype=np.float64)
    cdef Py_ssize_t n = P.shape[0], m = P.shape[1], i, k
    keep_arr = np.ones(n, dtype=bool)
    cdef unsigned char[::1] keep = keep_arr.view(np.uint8)
    cdef double bx, ba, dx, da, d
    cdef bint same, x_better, a_better, fx_better, fa_better
    for i in range(n):
        same = True
        x_better = False
        a_better = False
        for k in range(m):
            bx = floor(x[k] / e[k])
            ba = floor(P[i, k] / e[k])
            if bx < ba:
                x_better = True
                same = False
            elif bx > ba:
                a_better = True
                same = False
        if same:
            fx_better = False
            fa_better = False
            dx = 0.0
            da = 0.0
            for k in range(m):
                if x[k] < P[i, k]:
                    fx_better = True
                elif x[k] > P[i, k]:
                    fa_better = True
                bx = floor(x[k] / e[k])
                d = x[k] - bx * e[k]
                dx += d * d
                d = P[i, k] - bx * e[k]
                da += d * d
            if fx_better and not fa_better:
                keep[i] = 0
            elif fa_better and not fx_better:
                return False, np.ones(n, dtype=bool)
            elif dx < da:
                keep[i] = 0
            else:
                return False, np.ones(n, dtype=bool)
        elif a_better and not x_better:
            return False, np.ones(n, dtype=bool)
        elif x_better and not a_better:
            keep[i] = 0
    return True, keep_arr
