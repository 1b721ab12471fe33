"""Hot numeric kernels: batch objective evaluation, non-dominated
ranking, crowding distance.

Numba-compiled when available; set QCSCHED_DISABLE_NUMBA=1 to force the
pure-numpy fallbacks (same semantics, vectorized instead of looped).
The two paths may differ in the last float ulp because accumulation
order differs; nothing downstream relies on exact cross-path equality.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is an install-time dependency
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


USE_NUMBA = HAS_NUMBA and os.environ.get("QCSCHED_DISABLE_NUMBA", "") != "1"


def using_numba() -> bool:
    return USE_NUMBA


# ---------------------------------------------------------------- objectives


@njit(cache=True)
def _batch_objectives_jit(genomes, feas_flat, offsets, t_flat, f_flat, wait, n_qpus):
    pop, n_jobs = genomes.shape
    out = np.empty((pop, 2), dtype=np.float64)
    acc = np.empty(n_qpus, dtype=np.float64)
    for g in range(pop):
        for q in range(n_qpus):
            acc[q] = 0.0
        s1 = 0.0
        s2 = 0.0
        for i in range(n_jobs):
            slot = offsets[i] + genomes[g, i]
            q = feas_flat[slot]
            acc[q] += t_flat[slot]
            s1 += wait[q] + acc[q]
            s2 += 1.0 - f_flat[slot]
        out[g, 0] = s1 / n_jobs
        out[g, 1] = s2 / n_jobs
    return out


def _batch_objectives_np(genomes, feas_flat, offsets, t_flat, f_flat, wait, n_qpus):
    pop, n_jobs = genomes.shape
    slots = offsets[None, :] + genomes
    qpu = feas_flat[slots]
    t = t_flat[slots]
    f = f_flat[slots]
    completion = np.empty_like(t)
    for q in range(n_qpus):
        mask = qpu == q
        csum = np.cumsum(np.where(mask, t, 0.0), axis=1)
        completion[mask] = csum[mask] + wait[q]
    return np.stack([completion.mean(axis=1), (1.0 - f).mean(axis=1)], axis=1)


def batch_objectives(genomes, feas_flat, offsets, t_flat, f_flat, wait, n_qpus):
    """Per-genome (f1, f2): mean completion under earlier-index FIFO
    stacking per QPU, and mean error 1 - fidelity."""
    genomes = np.ascontiguousarray(genomes, dtype=np.int64)
    feas_flat = np.ascontiguousarray(feas_flat, dtype=np.int64)
    offsets = np.ascontiguousarray(offsets, dtype=np.int64)
    t_flat = np.ascontiguousarray(t_flat, dtype=np.float64)
    f_flat = np.ascontiguousarray(f_flat, dtype=np.float64)
    wait = np.ascontiguousarray(wait, dtype=np.float64)
    if USE_NUMBA:
        return _batch_objectives_jit(genomes, feas_flat, offsets, t_flat, f_flat, wait, n_qpus)
    return _batch_objectives_np(genomes, feas_flat, offsets, t_flat, f_flat, wait, n_qpus)


# ------------------------------------------------------------------ ranking


@njit(cache=True)
def _nd_ranks_jit(points):
    n = points.shape[0]
    dominated_by = np.zeros(n, dtype=np.int64)
    rank = np.full(n, -1, dtype=np.int64)
    dominates = np.zeros((n, n), dtype=np.bool_)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            le = points[i, 0] <= points[j, 0] and points[i, 1] <= points[j, 1]
            lt = points[i, 0] < points[j, 0] or points[i, 1] < points[j, 1]
            if le and lt:
                dominates[i, j] = True
                dominated_by[j] += 1
    current = np.empty(n, dtype=np.int64)
    m = 0
    for i in range(n):
        if dominated_by[i] == 0:
            rank[i] = 0
            current[m] = i
            m += 1
    level = 0
    assigned = m
    while assigned < n:
        nxt = np.empty(n, dtype=np.int64)
        k = 0
        for idx in range(m):
            i = current[idx]
            for j in range(n):
                if dominates[i, j]:
                    dominated_by[j] -= 1
                    if dominated_by[j] == 0:
                        rank[j] = level + 1
                        nxt[k] = j
                        k += 1
        current = nxt
        m = k
        level += 1
        assigned += k
    return rank


def _nd_ranks_np(points):
    n = len(points)
    if n == 0:
        return np.empty(0, dtype=np.int64)
    a = points[:, None, :]
    b = points[None, :, :]
    le = (a <= b).all(axis=2)
    lt = (a < b).any(axis=2)
    dominates = le & lt
    dominated_by = dominates.sum(axis=0)
    rank = np.full(n, -1, dtype=np.int64)
    level = 0
    remaining = dominated_by.copy()
    active = np.ones(n, dtype=bool)
    while active.any():
        front = active & (remaining == 0)
        rank[front] = level
        active[front] = False
        remaining = remaining - dominates[front].sum(axis=0)
        level += 1
    return rank


def nd_ranks(points: np.ndarray) -> np.ndarray:
    """Fast non-dominated sorting ranks (0 = non-dominated) for a
    2-objective minimization point set."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    if len(points) == 0:
        return np.empty(0, dtype=np.int64)
    if USE_NUMBA:
        return _nd_ranks_jit(points)
    return _nd_ranks_np(points)


# ----------------------------------------------------------------- crowding


@njit(cache=True)
def _crowding_jit(points):
    n = points.shape[0]
    dist = np.zeros(n, dtype=np.float64)
    if n <= 2:
        for i in range(n):
            dist[i] = np.inf
        return dist
    for m in range(2):
        col = points[:, m].copy()
        order = np.argsort(col, kind="mergesort")
        dist[order[0]] = np.inf
        dist[order[n - 1]] = np.inf
        rng = col[order[n - 1]] - col[order[0]]
        if rng <= 0.0:
            continue
        for k in range(1, n - 1):
            if dist[order[k]] != np.inf:
                dist[order[k]] += (col[order[k + 1]] - col[order[k - 1]]) / rng
    return dist


def _crowding_np(points):
    n = len(points)
    dist = np.zeros(n, dtype=np.float64)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for m in range(2):
        order = np.argsort(points[:, m], kind="mergesort")
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        rng = points[order[-1], m] - points[order[0], m]
        if rng <= 0.0:
            continue
        inner = order[1:-1]
        gaps = (points[order[2:], m] - points[order[:-2], m]) / rng
        finite = dist[inner] != np.inf
        dist[inner[finite]] += gaps[finite]
    return dist


def crowding(points: np.ndarray) -> np.ndarray:
    """NSGA-II crowding distance with per-objective normalization;
    boundary points get +inf, zero-range objectives contribute 0."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    if USE_NUMBA:
        return _crowding_jit(points)
    return _crowding_np(points)
