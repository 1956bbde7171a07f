"""Compiled Monte Carlo kernels for the bulk experiments.

The reference engine stays the source of truth for couplings; these
kernels trade its per-site stream layout for a single per-replica RNG
and flat arrays, which is what makes thousand-replica scans of the
scaling laws fit in minutes.  Each kernel seeds numpy's generator at
entry, so results are reproducible and independent of scheduling.

Line/torus dynamics use the direct (Gillespie) method: all A-particles
share one rate and all B-particles another, so the next mover is a
uniform pick within its type and the holding time is exponential in the
total rate.  Annihilation picks the highest-braveness opposite resident,
matching the reference engine's rule.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# ---------------------------------------------------------------------------
# 1-D lattice window / torus DLAS


@njit(cache=True)
def line_crs_kernel(seed, n_window, pad, wrap, p, lam_a, lam_b, t_grid):
    """DLAS on a 1-d window of n_window initially occupied sites (with
    `pad` empty guard sites each side), or on a torus of n_window sites
    when wrap is True (pad ignored).  Returns per-grid N_root and V plus
    (D, final_nA, overflows)."""
    np.random.seed(seed)
    if wrap:
        n_sites = n_window
        root = n_window // 2
        first = 0
    else:
        n_sites = n_window + 2 * pad
        root = pad + n_window // 2
        first = pad

    n0 = n_window
    pos = np.empty(n0, dtype=np.int64)
    kind = np.empty(n0, dtype=np.int8)   # 1 = A, 0 = B
    brav = np.empty(n0, dtype=np.float64)
    alive = np.ones(n0, dtype=np.bool_)

    head = np.full(n_sites, -1, dtype=np.int64)
    nxt = np.full(n0, -1, dtype=np.int64)
    prv = np.full(n0, -1, dtype=np.int64)
    cnt_a = np.zeros(n_sites, dtype=np.int64)
    cnt_b = np.zeros(n_sites, dtype=np.int64)

    live_a = np.empty(n0, dtype=np.int64)
    live_b = np.empty(n0, dtype=np.int64)
    where = np.empty(n0, dtype=np.int64)
    n_a = 0
    n_b = 0
    disc = 0
    for i in range(n0):
        s = first + i
        pos[i] = s
        if np.random.random() < p:
            kind[i] = 1
            live_a[n_a] = i
            where[i] = n_a
            n_a += 1
            cnt_a[s] += 1
            disc += 1
        else:
            kind[i] = 0
            live_b[n_b] = i
            where[i] = n_b
            n_b += 1
            cnt_b[s] += 1
            disc -= 1
        brav[i] = np.random.random()
        nxt[i] = head[s]
        if head[s] >= 0:
            prv[head[s]] = i
        prv[i] = -1
        head[s] = i

    n_grid = t_grid.size
    out_n = np.zeros(n_grid, dtype=np.int64)
    out_v = np.zeros(n_grid, dtype=np.float64)
    horizon = t_grid[n_grid - 1]
    t = 0.0
    t_last = 0.0
    v_acc = 0.0
    gi = 0
    overflows = 0
    root_a = cnt_a[root]

    while True:
        rate_a = n_a * lam_a
        rate = rate_a + n_b * lam_b
        if rate <= 0.0:
            break
        t_new = t + np.random.exponential() / rate
        while gi < n_grid and t_grid[gi] < t_new:
            out_n[gi] = root_a
            out_v[gi] = v_acc + root_a * (t_grid[gi] - t_last)
            gi += 1
        if t_new > horizon:
            t = t_new
            break
        v_acc += root_a * (t_new - t_last)
        t_last = t_new
        t = t_new

        if np.random.random() * rate < rate_a:
            j = int(np.random.random() * n_a)
            if j >= n_a:
                j = n_a - 1
            i = live_a[j]
        else:
            j = int(np.random.random() * n_b)
            if j >= n_b:
                j = n_b - 1
            i = live_b[j]

        s_old = pos[i]
        step = 1 if np.random.random() < 0.5 else -1
        s_new = s_old + step
        if wrap:
            if s_new < 0:
                s_new += n_sites
            elif s_new >= n_sites:
                s_new -= n_sites
        else:
            if s_new < 0 or s_new >= n_sites:
                overflows += 1
                continue  # guard band exhausted; hold in place

        # detach i from s_old
        if prv[i] >= 0:
            nxt[prv[i]] = nxt[i]
        else:
            head[s_old] = nxt[i]
        if nxt[i] >= 0:
            prv[nxt[i]] = prv[i]
        if kind[i] == 1:
            cnt_a[s_old] -= 1
            if s_old == root:
                root_a -= 1
        else:
            cnt_b[s_old] -= 1
        pos[i] = s_new

        opp = cnt_b[s_new] if kind[i] == 1 else cnt_a[s_new]
        if opp > 0:
            best = -1
            best_brav = -1.0
            q = head[s_new]
            while q >= 0:
                if kind[q] != kind[i] and brav[q] > best_brav:
                    best = q
                    best_brav = brav[q]
                q = nxt[q]
            # remove target from its site
            if prv[best] >= 0:
                nxt[prv[best]] = nxt[best]
            else:
                head[s_new] = nxt[best]
            if nxt[best] >= 0:
                prv[nxt[best]] = prv[best]
            if kind[best] == 1:
                cnt_a[s_new] -= 1
                if s_new == root:
                    root_a -= 1
            else:
                cnt_b[s_new] -= 1
            alive[best] = False
            alive[i] = False
            # swap-remove both from live lists
            if kind[i] == 1:
                wj = where[i]
                n_a -= 1
                live_a[wj] = live_a[n_a]
                where[live_a[wj]] = wj
                wb = where[best]
                n_b -= 1
                live_b[wb] = live_b[n_b]
                where[live_b[wb]] = wb
            else:
                wj = where[i]
                n_b -= 1
                live_b[wj] = live_b[n_b]
                where[live_b[wj]] = wj
                wa = where[best]
                n_a -= 1
                live_a[wa] = live_a[n_a]
                where[live_a[wa]] = wa
        else:
            nxt[i] = head[s_new]
            if head[s_new] >= 0:
                prv[head[s_new]] = i
            prv[i] = -1
            head[s_new] = i
            if kind[i] == 1:
                cnt_a[s_new] += 1
                if s_new == root:
                    root_a += 1
            else:
                cnt_b[s_new] += 1

    while gi < n_grid:
        out_n[gi] = root_a
        out_v[gi] = v_acc + root_a * (t_grid[gi] - t_last)
        gi += 1
    return out_n, out_v, disc, n_a, overflows


# ---------------------------------------------------------------------------
# Root-directed subtree: visit counts and timed occupation


@njit(cache=True)
def tree_w_kernel(seed, d, n_levels, p):
    """Count distinct A-particles that ever reach the root when particles
    start one per site on levels 1..n_levels (the root stays empty).
    Untimed: uniform selection among live A's is the jump order."""
    np.random.seed(seed)
    offsets = np.empty(n_levels + 2, dtype=np.int64)
    offsets[0] = 0
    size = np.int64(1)
    total = np.int64(1)
    for k in range(1, n_levels + 1):
        offsets[k] = total
        size *= d
        total += size
    offsets[n_levels + 1] = total

    level_of = np.empty(total, dtype=np.int16)
    for k in range(n_levels + 1):
        for idx in range(offsets[k], offsets[k + 1] if k < n_levels else total):
            level_of[idx] = k
    b_here = np.zeros(total, dtype=np.bool_)
    pos = np.empty(total, dtype=np.int64)
    live = np.empty(total, dtype=np.int64)
    n_live = 0
    for node in range(1, total):
        if np.random.random() < p:
            pos[n_live] = node
            live[n_live] = n_live
            n_live += 1
        else:
            b_here[node] = True

    inv_d = 1.0 / d
    w = 0
    while n_live > 0:
        j = int(np.random.random() * n_live)
        if j >= n_live:
            j = n_live - 1
        i = live[j]
        if np.random.random() >= inv_d:
            n_live -= 1
            live[j] = live[n_live]
            continue
        node = pos[i]
        k = level_of[node]
        parent = (node - offsets[k]) // d + offsets[k - 1]
        if parent == 0:
            w += 1
            n_live -= 1
            live[j] = live[n_live]
            continue
        if b_here[parent]:
            b_here[parent] = False
            n_live -= 1
            live[j] = live[n_live]
            continue
        pos[i] = parent
    return w


@njit(cache=True)
def tree_v_kernel(seed, d, n_levels, p, t_grid):
    """Timed variant: exact root occupation integrated to each grid time
    (visitors stay Exp(1) at the root before escaping along out-edges)."""
    np.random.seed(seed)
    offsets = np.empty(n_levels + 2, dtype=np.int64)
    offsets[0] = 0
    size = np.int64(1)
    total = np.int64(1)
    for k in range(1, n_levels + 1):
        offsets[k] = total
        size *= d
        total += size
    offsets[n_levels + 1] = total

    level_of = np.empty(total, dtype=np.int16)
    for k in range(n_levels + 1):
        for idx in range(offsets[k], offsets[k + 1] if k < n_levels else total):
            level_of[idx] = k
    b_here = np.zeros(total, dtype=np.bool_)
    pos = np.empty(total, dtype=np.int64)
    live = np.empty(total, dtype=np.int64)
    n_live = 0
    for node in range(1, total):
        if np.random.random() < p:
            pos[n_live] = node
            live[n_live] = n_live
            n_live += 1
        else:
            b_here[node] = True

    inv_d = 1.0 / d
    n_grid = t_grid.size
    out_v = np.zeros(n_grid, dtype=np.float64)
    horizon = t_grid[n_grid - 1]
    t = 0.0
    t_last = 0.0
    v_acc = 0.0
    gi = 0
    root_a = 0
    w = 0
    while n_live > 0:
        t_new = t + np.random.exponential() / n_live
        while gi < n_grid and t_grid[gi] < t_new:
            out_v[gi] = v_acc + root_a * (t_grid[gi] - t_last)
            gi += 1
        if t_new > horizon:
            break
        v_acc += root_a * (t_new - t_last)
        t_last = t_new
        t = t_new

        j = int(np.random.random() * n_live)
        if j >= n_live:
            j = n_live - 1
        i = live[j]
        node = pos[i]
        if node == 0:
            # all out-edges from the root leave the subtree
            root_a -= 1
            n_live -= 1
            live[j] = live[n_live]
            continue
        if np.random.random() >= inv_d:
            n_live -= 1
            live[j] = live[n_live]
            continue
        k = level_of[node]
        parent = (node - offsets[k]) // d + offsets[k - 1]
        if parent == 0:
            w += 1
            root_a += 1
            pos[i] = parent
            continue
        if b_here[parent]:
            b_here[parent] = False
            n_live -= 1
            live[j] = live[n_live]
            continue
        pos[i] = parent
    while gi < n_grid:
        out_v[gi] = v_acc + root_a * (t_grid[gi] - t_last)
        gi += 1
    return out_v, w


# ---------------------------------------------------------------------------
# Half-line sequential release


@njit(cache=True)
def halfline_seq_kernel(seed, n_sites, p, horizon, step_cap):
    """Sequential release on sites 0..n_sites-1 in site order; walkers may
    roam all of Z but B-particles exist only inside the window.  Returns
    per-site root occupancy, visited-root flags, halt codes
    (0 HitB, 1 TimeUp, 2 StepCap) and the initial types."""
    np.random.seed(seed)
    is_a = np.empty(n_sites, dtype=np.bool_)
    b_alive = np.empty(n_sites, dtype=np.bool_)
    for s in range(n_sites):
        a = np.random.random() < p
        is_a[s] = a
        b_alive[s] = not a
    root_time = np.zeros(n_sites, dtype=np.float64)
    visited = np.zeros(n_sites, dtype=np.bool_)
    halt = np.full(n_sites, -1, dtype=np.int8)

    for s in range(n_sites):
        if not is_a[s]:
            continue
        x = s
        t_used = 0.0
        steps = 0
        code = np.int8(1)
        if x == 0:
            visited[s] = True
        while True:
            w = np.random.exponential()
            dwell = w
            if t_used + w >= horizon:
                dwell = horizon - t_used
            if x == 0:
                root_time[s] += dwell
            t_used += w
            if t_used >= horizon:
                code = 1
                break
            steps += 1
            if steps > step_cap:
                code = 2
                break
            x += 1 if np.random.random() < 0.5 else -1
            if 0 <= x < n_sites and b_alive[x]:
                b_alive[x] = False
                if x == 0:
                    visited[s] = True
                code = 0
                break
            if x == 0:
                visited[s] = True
        halt[s] = code
    return root_time, visited, halt, is_a


def warmup():
    """Trigger JIT compilation of all kernels on tiny inputs."""
    grid = np.array([0.5, 1.0])
    line_crs_kernel(1, 9, 4, False, 0.5, 1.0, 0.0, grid)
    line_crs_kernel(1, 8, 0, True, 0.5, 1.0, 1.0, grid)
    tree_w_kernel(1, 2, 3, 0.5)
    tree_v_kernel(1, 2, 3, 0.5, grid)
    halfline_seq_kernel(1, 16, 0.45, 1e300, 10000)
