"""Hot loops of the exact solvers, with a numba path and a pure-numpy path.

Set ``UAVROUTE_DISABLE_NUMBA=1`` (or run without numba installed) to use the
numpy implementations. Both paths evaluate candidate weights with the same
expression and scan predecessors in the same order, so they return identical
distances and predecessors, ties included.
"""

from __future__ import annotations

import os

import numpy as np

INF = np.inf


def _numba_enabled() -> bool:
    if os.environ.get("UAVROUTE_DISABLE_NUMBA", "").strip() not in ("", "0"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USE_NUMBA = _numba_enabled()


# --- time-expanded DAG relaxation --------------------------------------------------

def _dag_relax_loops(gap_min, hop_cost, rho, source, start_weight):
    L, T = rho.shape
    dist = np.full((L, T), np.inf)
    pred_l = np.full((L, T), -1, dtype=np.int64)
    pred_t = np.full((L, T), -1, dtype=np.int64)
    dist[source, 0] = start_weight
    for t2 in range(1, T):
        for l2 in range(L):
            best = np.inf
            bl = -1
            bt = -1
            for l1 in range(L):
                last = t2 - gap_min[l1, l2]
                for t1 in range(last + 1):
                    d = dist[l1, t1]
                    if d < np.inf:
                        cand = d + (hop_cost[t2 - t1] - rho[l2, t2])
                        if cand < best:
                            best = cand
                            bl = l1
                            bt = t1
            dist[l2, t2] = best
            pred_l[l2, t2] = bl
            pred_t[l2, t2] = bt
    return dist, pred_l, pred_t


def _dag_relax_numpy(gap_min, hop_cost, rho, source, start_weight):
    L, T = rho.shape
    dist = np.full((L, T), np.inf)
    pred_l = np.full((L, T), -1, dtype=np.int64)
    pred_t = np.full((L, T), -1, dtype=np.int64)
    dist[source, 0] = start_weight
    for t2 in range(1, T):
        gaps = t2 - np.arange(t2)  # gap from each earlier slot
        # w[l2, t1] = hop_cost[gap] - rho[l2, t2]
        w = hop_cost[gaps][None, :] - rho[:, t2][:, None]
        cand = dist[None, :, :t2] + w[:, None, :]  # (l2, l1, t1)
        feasible = gaps[None, None, :] >= gap_min.T[:, :, None]
        cand = np.where(feasible, cand, np.inf).reshape(L, -1)
        idx = np.argmin(cand, axis=1)
        best = cand[np.arange(L), idx]
        ok = best < np.inf
        dist[:, t2] = best
        pred_l[ok, t2] = idx[ok] // t2
        pred_t[ok, t2] = idx[ok] % t2
    return dist, pred_l, pred_t


# --- joint state-graph relaxation (one slot) ---------------------------------------

def _state_relax_loops(step_ok, local, weight, dist_prev):
    S, M = local.shape
    dist = np.full(S, np.inf)
    pred = np.full(S, -1, dtype=np.int64)
    live = np.flatnonzero(dist_prev < np.inf)
    for s2 in range(S):
        best = np.inf
        arg = -1
        for i in range(live.size):
            s1 = live[i]
            ok = True
            for m in range(M):
                if not step_ok[m, local[s1, m], local[s2, m]]:
                    ok = False
                    break
            if ok:
                cand = dist_prev[s1] + weight[s2]
                if cand < best:
                    best = cand
                    arg = s1
        dist[s2] = best
        pred[s2] = arg
    return dist, pred


def _state_relax_numpy(step_ok, local, weight, dist_prev, block=2048):
    S, M = local.shape
    dist = np.full(S, np.inf)
    pred = np.full(S, -1, dtype=np.int64)
    live = np.flatnonzero(dist_prev < np.inf)
    if live.size == 0:
        return dist, pred
    src = local[live]
    base = dist_prev[live]
    for lo in range(0, S, block):
        hi = min(S, lo + block)
        ok = np.ones((live.size, hi - lo), dtype=bool)
        for m in range(M):
            ok &= step_ok[m][src[:, m][:, None], local[lo:hi, m][None, :]]
        cand = np.where(ok, base[:, None] + weight[None, lo:hi], np.inf)
        idx = np.argmin(cand, axis=0)
        best = cand[idx, np.arange(hi - lo)]
        good = best < np.inf
        dist[lo:hi] = best
        pred[lo:hi][good] = live[idx[good]]
    return dist, pred


# --- generic Bellman-Ford (cross-check) --------------------------------------------

def _bellman_ford_loops(n, tail, head, weight, source):
    dist = np.full(n, np.inf)
    pred = np.full(n, -1, dtype=np.int64)
    dist[source] = 0.0
    for _ in range(n - 1):
        changed = False
        for e in range(tail.size):
            d = dist[tail[e]]
            if d < np.inf:
                cand = d + weight[e]
                if cand < dist[head[e]]:
                    dist[head[e]] = cand
                    pred[head[e]] = tail[e]
                    changed = True
        if not changed:
            break
    return dist, pred


def _bellman_ford_numpy(n, tail, head, weight, source):
    dist = np.full(n, np.inf)
    pred = np.full(n, -1, dtype=np.int64)
    dist[source] = 0.0
    order = np.lexsort((tail, head))  # group by head, ascending tail within a head
    tail, head, weight = tail[order], head[order], weight[order]
    for _ in range(n - 1):
        cand = dist[tail] + weight
        best = np.full(n, np.inf)
        np.minimum.at(best, head, cand)
        improved = best < dist
        if not improved.any():
            break
        # first (smallest tail) edge attaining each improved head's minimum
        hit = improved[head] & (cand == best[head])
        first = np.flatnonzero(hit)
        heads, pos = np.unique(head[first], return_index=True)
        dist[heads] = best[heads]
        pred[heads] = tail[first[pos]]
    return dist, pred


if USE_NUMBA:
    import numba

    dag_relax = numba.njit(cache=True)(_dag_relax_loops)
    state_relax = numba.njit(cache=True)(_state_relax_loops)
    bellman_ford = numba.njit(cache=True)(_bellman_ford_loops)
else:
    dag_relax = _dag_relax_numpy
    state_relax = _state_relax_numpy
    bellman_ford = _bellman_ford_numpy

BACKEND = "numba" if USE_NUMBA else "numpy"

NUMPY_KERNELS = {
    "dag_relax": _dag_relax_numpy,
    "state_relax": _state_relax_numpy,
    "bellman_ford": _bellman_ford_numpy,
}
