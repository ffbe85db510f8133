"""Pure-Python/numpy twins of the compiled kernels in ``_kernels.pyx``.

Used when the extension is not built, or when ``SPUTNIK_PURE_PYTHON=1``.
"""
from __future__ import annotations

import numpy as np


def nondominated_ranks(F) -> np.ndarray:
    F = np.asarray(F, dtype=np.float64)
    n = F.shape[0]
    rank = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return rank
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    count = dom.sum(axis=0)
    current = np.flatnonzero(count == 0)
    level = 0
    while current.size:
        rank[current] = level
        count = count - dom[current].sum(axis=0)
        count[rank >= 0] = -1
        current = np.flatnonzero(count == 0)
        level += 1
    return rank


def crowding_distance(F) -> np.ndarray:
    F = np.asarray(F, dtype=np.float64)
    n, m = F.shape
    dist = np.zeros(n, dtype=np.float64)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for k in range(m):
        order = np.argsort(F[:, k], kind="stable")
        col = F[order, k]
        span = col[-1] - col[0]
        if span > 0.0:
            dist[order[1:-1]] += (col[2:] - col[:-2]) / span
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
    return dist


def hypervolume_2d(points, ref) -> float:
    pts = np.asarray(points, dtype=np.float64)
    if pts.shape[0] == 0:
        return 0.0
    r0, r1 = float(ref[0]), float(ref[1])
    area = 0.0
    ceiling = r1
    for i in np.lexsort((pts[:, 1], pts[:, 0])):
        x, y = pts[i]
        if y < ceiling:
            area += (r0 - x) * (ceiling - y)
            ceiling = y
    return float(area)


def evaluate_placements(masks, vm_cost, vm_latency) -> tuple[np.ndarray, np.ndarray]:
    masks = np.asarray(masks, dtype=bool)
    vm_cost = np.asarray(vm_cost, dtype=np.float64)
    vm_latency = np.asarray(vm_latency, dtype=np.float64)
    active = masks.any(axis=1)
    cost = active.astype(np.float64) @ vm_cost
    per_component = np.where(masks, vm_latency, np.inf).min(axis=2)
    latency = per_component.mean(axis=1) if masks.shape[1] else np.zeros(masks.shape[0])
    return cost, latency


def dominance_relation(F, f) -> np.ndarray:
    F = np.asarray(F, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    better = np.any(f < F, axis=1)
    worse = np.any(f > F, axis=1)
    rel = np.zeros(len(F), dtype=np.int8)
    rel[better & ~worse] = 1
    rel[worse & ~better] = -1
    return rel


def epsilon_archive_update(A, f, eps) -> tuple[bool, np.ndarray]:
    f = np.asarray(f, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64).reshape(-1, f.size)
    eps = np.asarray(eps, dtype=np.float64)
    n = len(A)
    keep = np.ones(n, dtype=bool)
    bx = np.floor(f / eps)
    corner = bx * eps
    for i in range(n):
        ba = np.floor(A[i] / eps)
        if np.array_equal(ba, bx):
            fx_better = np.any(f < A[i])
            fa_better = np.any(f > A[i])
            if fx_better and not fa_better:
                keep[i] = False
            elif fa_better and not fx_better:
                return False, np.ones(n, dtype=bool)
            elif np.sum((f - corner) ** 2) < np.sum((A[i] - corner) ** 2):
                keep[i] = False
            else:
                return False, np.ones(n, dtype=bool)
        else:
            x_better = np.any(bx < ba)
            a_better = np.any(bx > ba)
            if a_better and not x_better:
                return False, np.ones(n, dtype=bool)
            if x_better and not a_better:
                keep[i] = False
    return True, keep
