"""Compiled per-vertex / per-edge passes of the accelerator.

Each function models one combinational stage evaluated by every processing
unit in parallel: reads come from the current registers, writes go to fresh
arrays, so a pass is synchronous regardless of iteration order.
"""

from __future__ import annotations

import numpy as np
from numba import njit

NONE = -1

# pre-match kinds stored per edge
PM_REGULAR = 1
PM_BOUNDARY = 2
PM_FUSION = 3


@njit(cache=True)
def update_cover(indptr, nbr, eid, w, touch, node, res, dirn, defect, boundary, max_iter):
    """Propagate labels to fixpoint; returns the number of passes that changed state."""
    n = touch.shape[0]
    nt = np.empty_like(touch)
    nn = np.empty_like(node)
    nr = np.empty_like(res)
    ns = np.empty_like(dirn)
    iterations = 0
    while True:
        changed = False
        for v in range(n):
            if defect[v] or boundary[v]:
                nt[v] = touch[v]
                nn[v] = node[v]
                nr[v] = res[v]
                ns[v] = dirn[v]
                continue
            best_r = -1
            best_t = NONE
            best_n = NONE
            best_s = 0
            for k in range(indptr[v], indptr[v + 1]):
                u = nbr[k]
                if boundary[u] or touch[u] < 0:
                    continue
                cand = res[u] - w[eid[k]]
                if cand < 0:
                    continue
                su = dirn[u]
                if (
                    cand > best_r
                    or (cand == best_r and su > best_s)
                    or (cand == best_r and su == best_s and touch[u] < best_t)
                ):
                    best_r = cand
                    best_t = touch[u]
                    best_n = node[u]
                    best_s = su
            if best_r < 0:
                best_r = 0
                best_s = 0
            nt[v] = best_t
            nn[v] = best_n
            nr[v] = best_r
            ns[v] = best_s
            if nt[v] != touch[v] or nn[v] != node[v] or nr[v] != res[v] or ns[v] != dirn[v]:
                changed = True
        if not changed:
            return iterations
        touch[:] = nt
        node[:] = nn
        res[:] = nr
        dirn[:] = ns
        iterations += 1
        if iterations > max_iter:
            return -1


@njit(cache=True)
def prematch(eu, ev, w, indptr, nbr, eid, touch, node, res, dirn, defect, boundary, enabled, seff, kinds, chosen):
    """Evaluate the isolated-conflict predicates and mask the directions of pre-matched nodes.

    Fills ``kinds`` per edge, ``chosen`` per vertex (smallest flagged edge of a
    pre-matched defect, else -1) and ``seff`` with the masked directions.
    """
    n = touch.shape[0]
    m = eu.shape[0]
    seff[:] = dirn
    kinds[:] = 0
    chosen[:] = NONE
    if not enabled:
        return 0
    tight = np.zeros(m, dtype=np.bool_)
    n_tight = np.zeros(n, dtype=np.int64)
    n_stable = np.zeros(n, dtype=np.int64)
    for e in range(m):
        u = eu[e]
        v = ev[e]
        if res[u] + res[v] >= w[e]:
            tight[e] = True
            n_tight[u] += 1
            n_tight[v] += 1
            if not boundary[u] and not boundary[v]:
                n_stable[u] += 1
                n_stable[v] += 1
    count = 0
    for e in range(m):
        if not tight[e]:
            continue
        u = eu[e]
        v = ev[e]
        bu = boundary[u]
        bv = boundary[v]
        kind = 0
        if not bu and not bv:
            if (
                defect[u] and defect[v] and n_tight[u] == 1 and n_tight[v] == 1
                and dirn[u] > 0 and dirn[v] > 0 and node[u] == u and node[v] == v
            ):
                kind = PM_REGULAR
        elif bu != bv:
            x = v if bu else u
            if defect[x] and dirn[x] > 0 and node[x] == x:
                ok = True
                for k in range(indptr[x], indptr[x + 1]):
                    f = eid[k]
                    if f == e or not tight[f]:
                        continue
                    y = nbr[k]
                    if defect[y] or n_tight[y] != 1:
                        ok = False
                        break
                if ok:
                    kind = PM_BOUNDARY
                elif n_stable[x] == 0:
                    kind = PM_FUSION
        if kind == 0:
            continue
        kinds[e] = kind
        for x in (u, v):
            if not boundary[x] and (chosen[x] == NONE or e < chosen[x]):
                if chosen[x] == NONE:
                    count += 1
                chosen[x] = e
    if count:
        for v in range(n):
            t = touch[v]
            if t >= 0 and not boundary[v] and chosen[t] != NONE:
                seff[v] = 0
    return count


@njit(cache=True)
def find_conflict(eu, ev, w, indptr, nbr, eid, node, res, seff, defect, boundary):
    """Convergecast of the conflict / growth-length search.

    Returns ``(kind, a, b, c, twice_length)``: kind 1 is an edge conflict on edge
    ``a``; kind 2 is a conflict through zero-radius defect ``a`` between its
    neighbors ``b`` and ``c``; kind 0 reports ``2 * max_growth`` (-1 when
    unbounded).
    """
    n = node.shape[0]
    m = eu.shape[0]
    for e in range(m):
        u = eu[e]
        v = ev[e]
        nu = node[u]
        nv = node[v]
        if nu >= 0 and nv >= 0 and nu != nv and res[u] + res[v] >= w[e] and seff[u] + seff[v] > 0:
            return 1, e, u, v, 0
    for x in range(n):
        if not defect[x] or boundary[x] or res[x] != 0 or seff[x] >= 0:
            continue
        for k1 in range(indptr[x], indptr[x + 1]):
            a = nbr[k1]
            if node[a] < 0 or node[a] == node[x] or res[a] < w[eid[k1]]:
                continue
            for k2 in range(k1 + 1, indptr[x + 1]):
                b = nbr[k2]
                if node[b] < 0 or node[b] == node[x] or res[b] < w[eid[k2]]:
                    continue
                if node[a] != node[b] and seff[a] + seff[b] > 0:
                    return 2, x, a, b, 0
    best = -1
    for x in range(n):
        # a non-defect vertex at residue 0 of a shrinking node is vacated by any
        # growth and relabeled to a growing node on ties, so it sets no bound
        if not boundary[x] and seff[x] < 0 and node[x] >= 0 and (defect[x] or res[x] > 0):
            c = 2 * res[x]
            if best < 0 or c < best:
                best = c
    for e in range(m):
        u = eu[e]
        v = ev[e]
        if node[u] == node[v]:
            continue
        total = seff[u] + seff[v]
        if total <= 0:
            continue
        slack = w[e] - res[u] - res[v]
        if slack < 0:
            slack = 0
        c = 2 * slack if total == 1 else slack
        if best < 0 or c < best:
            best = c
    return 0, -1, -1, -1, best


@njit(cache=True)
def grow(length, node, res, seff, boundary):
    for v in range(node.shape[0]):
        if node[v] >= 0 and not boundary[v]:
            r = res[v] + length * seff[v]
            res[v] = r if r > 0 else 0
