"""Accelerated simulation inner loop.

Numba-compiled equivalent of the reference step loop in experiments.py.
It consumes the per-cell rng stream through exactly the same draw protocol
(initial n*n matrix, one scalar draw per forced exit, two length-n vectors
per rewired newcomer), so reference and fast traces stay aligned; the only
numerical difference is the edge-list matvec in the eigensolver versus the
reference's dense BLAS product.

Everything degrades gracefully: without numba the harness falls back to the
pure-numpy reference loop.
"""

from __future__ import annotations

import numpy as np

from .metrics import StepRecord

try:
    from numba import njit

    _NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap if not (args and callable(args[0])) else args[0]


def available() -> bool:
    return _NUMBA


@njit(cache=True)
def _edge_arrays(a):
    n = a.shape[0]
    m = 0
    for i in range(n):
        for j in range(n):
            if a[i, j]:
                m += 1
    src = np.empty(m, np.int64)  # follower
    dst = np.empty(m, np.int64)  # followed
    k = 0
    for i in range(n):
        for j in range(n):
            if a[i, j]:
                src[k] = j
                dst[k] = i
                k += 1
    return src, dst


@njit(cache=True)
def _csr_from_edges(n, src, dst):
    # out-neighbour lists in follower -> followed direction
    m = src.shape[0]
    counts = np.zeros(n + 1, np.int64)
    for e in range(m):
        counts[src[e] + 1] += 1
    indptr = np.cumsum(counts)
    indices = np.empty(m, np.int64)
    fill = indptr[:-1].copy()
    for e in range(m):
        s = src[e]
        indices[fill[s]] = dst[e]
        fill[s] += 1
    return indptr, indices


@njit(cache=True)
def _tarjan_labels(n, indptr, indices):
    index = np.full(n, -1, np.int64)
    low = np.zeros(n, np.int64)
    onstack = np.zeros(n, np.uint8)
    stack = np.empty(n, np.int64)
    sp = 0
    label = np.full(n, -1, np.int64)
    ncomp = 0
    counter = 0
    call_v = np.empty(n + 1, np.int64)
    call_ei = np.empty(n + 1, np.int64)
    for root in range(n):
        if index[root] != -1:
            continue
        depth = 0
        call_v[0] = root
        call_ei[0] = indptr[root]
        index[root] = counter
        low[root] = counter
        counter += 1
        stack[sp] = root
        sp += 1
        onstack[root] = 1
        while depth >= 0:
            v = call_v[depth]
            ei = call_ei[depth]
            if ei < indptr[v + 1]:
                call_ei[depth] = ei + 1
                w = indices[ei]
                if index[w] == -1:
                    depth += 1
                    call_v[depth] = w
                    call_ei[depth] = indptr[w]
                    index[w] = counter
                    low[w] = counter
                    counter += 1
                    stack[sp] = w
                    sp += 1
                    onstack[w] = 1
                elif onstack[w] and index[w] < low[v]:
                    low[v] = index[w]
            else:
                if low[v] == index[v]:
                    while True:
                        w = stack[sp - 1]
                        sp -= 1
                        onstack[w] = 0
                        label[w] = ncomp
                        if w == v:
                            break
                    ncomp += 1
                depth -= 1
                if depth >= 0:
                    parent = call_v[depth]
                    if low[v] < low[parent]:
                        low[parent] = low[v]
    return label, ncomp


@njit(cache=True)
def _acyclic_limit(n, src, dst, in_deg):
    # longest follower->followed path depth and count of longest paths per node
    left = in_deg.copy()
    depth = np.zeros(n, np.int64)
    count = np.ones(n, np.float64)
    ready = np.empty(n, np.int64)
    rp = 0
    for v in range(n):
        if left[v] == 0:
            ready[rp] = v
            rp += 1
    m = src.shape[0]
    while rp > 0:
        rp -= 1
        j = ready[rp]
        for e in range(m):
            if src[e] == j:
                i = dst[e]
                if depth[j] + 1 > depth[i]:
                    depth[i] = depth[j] + 1
                    count[i] = count[j]
                elif depth[j] + 1 == depth[i]:
                    count[i] += count[j]
                left[i] -= 1
                if left[i] == 0:
                    ready[rp] = i
                    rp += 1
    dmax = 0
    for v in range(n):
        if depth[v] > dmax:
            dmax = depth[v]
    b = np.zeros(n)
    cmax = 0.0
    for v in range(n):
        if depth[v] == dmax and count[v] > cmax:
            cmax = count[v]
    for v in range(n):
        if depth[v] == dmax:
            b[v] = count[v] / cmax
    return b


@njit(cache=True)
def _power_solve(n, src, dst, tol, cap):
    b = np.ones(n)
    w = np.empty(n)
    m = src.shape[0]
    it = 0
    res = 1.0
    while it < cap:
        for i in range(n):
            w[i] = b[i]
        for e in range(m):
            w[dst[e]] += b[src[e]]
        mx = w[0]
        for i in range(1, n):
            if w[i] > mx:
                mx = w[i]
        res = 0.0
        for i in range(n):
            w[i] = w[i] / mx
            d = abs(w[i] - b[i])
            if d > res:
                res = d
            b[i] = w[i]
        it += 1
        if res < tol:
            break
    return b, it, res


@njit(cache=True)
def _whole_network(n, src, dst, in_deg, out_deg):
    for v in range(n):
        if in_deg[v] + out_deg[v] == 0:
            return False
    parent = np.arange(n)
    for e in range(src.shape[0]):
        # union with path halving
        x = src[e]
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        y = dst[e]
        while parent[y] != y:
            parent[y] = parent[parent[y]]
            y = parent[y]
        if x != y:
            parent[x] = y
    root0 = 0
    while parent[root0] != root0:
        root0 = parent[root0]
    for v in range(n):
        x = v
        while parent[x] != x:
            x = parent[x]
        if x != root0:
            return False
    return True


@njit(cache=True)
def _run_trace(a, tau, p, t_max, tol, cap, rng):
    n = a.shape[0]
    b_mean = np.empty(t_max)
    lambda1 = np.empty(t_max)
    core_size = np.empty(t_max, np.int64)
    core_alive = np.zeros(t_max, np.uint8)
    departed = np.empty(t_max, np.int64)
    whole = np.zeros(t_max, np.uint8)
    max_out = np.empty(t_max, np.int64)
    unconverged = 0

    for t in range(t_max):
        src, dst = _edge_arrays(a)
        in_deg = np.zeros(n, np.int64)
        out_deg = np.zeros(n, np.int64)
        for e in range(src.shape[0]):
            out_deg[src[e]] += 1
            in_deg[dst[e]] += 1

        indptr, indices = _csr_from_edges(n, src, dst)
        label, ncomp = _tarjan_labels(n, indptr, indices)
        sizes = np.zeros(ncomp, np.int64)
        for v in range(n):
            sizes[label[v]] += 1
        q = sizes.max() if ncomp > 0 else 0
        core_size[t] = q
        core_alive[t] = 1 if q >= 2 else 0
        whole[t] = 1 if _whole_network(n, src, dst, in_deg, out_deg) else 0
        mo = 0
        for v in range(n):
            if out_deg[v] > mo:
                mo = out_deg[v]
        max_out[t] = mo

        if q < 2:  # acyclic network: exact limit of the shifted iteration
            b = _acyclic_limit(n, src, dst, in_deg)
        else:
            b, it, res = _power_solve(n, src, dst, tol, cap)
            if res >= tol:
                unconverged += 1

        s = 0.0
        mx = -1.0
        z = 0
        for v in range(n):
            s += b[v]
            if b[v] > mx:
                mx = b[v]
                z = v
        b_mean[t] = s / n
        lam = 0.0
        for e in range(src.shape[0]):
            if dst[e] == z:
                lam += b[src[e]]
        lambda1[t] = lam

        # departures: threshold rule, else one forced minimum
        nleave = 0
        for v in range(n):
            if b[v] < tau:
                nleave += 1
        leavers = np.empty(n, np.int64)
        if nleave > 0:
            k = 0
            for v in range(n):
                if b[v] < tau:
                    leavers[k] = v
                    k += 1
        else:
            bmin = b[0]
            for v in range(1, n):
                if b[v] < bmin:
                    bmin = b[v]
            nmins = 0
            for v in range(n):
                if b[v] == bmin:
                    leavers[nmins] = v  # temporarily collect the tied minima
                    nmins += 1
            pick = int(rng.random() * nmins)
            leavers[0] = leavers[pick]
            nleave = 1
        departed[t] = nleave

        newcomer = np.zeros(n, np.uint8)
        for k in range(nleave):
            newcomer[leavers[k]] = 1
        for k in range(nleave):
            v = leavers[k]
            for i in range(n):
                a[v, i] = 0
                a[i, v] = 0
        for k in range(nleave):
            v = leavers[k]
            out_draw = rng.random(n)
            in_draw = rng.random(n)
            for i in range(n):
                if i != v and out_draw[i] < p:
                    a[i, v] = 1
                if i != v and newcomer[i] == 0 and in_draw[i] < p:
                    a[v, i] = 1
    return b_mean, lambda1, core_size, core_alive, departed, whole, max_out, unconverged


@njit(cache=True)
def solve_edges(a, tol, cap):
    """Shifted power iteration over edge arrays (shared with the trace kernel)."""
    n = a.shape[0]
    src, dst = _edge_arrays(a)
    return _power_solve(n, src, dst, tol, cap)


def simulate_trace_fast(n, tau, p, solver, t_max, rng):
    """Drop-in accelerated version of experiments.simulate_trace."""
    a = (rng.random((n, n)) < p).astype(np.uint8)
    np.fill_diagonal(a, 0)
    cap = solver.iteration_cap(n)
    out = _run_trace(a, float(tau), float(p), int(t_max), float(solver.tolerance), cap, rng)
    b_mean, lambda1, core_size, core_alive, departed, whole, max_out, unconverged = out
    records = [
        StepRecord(
            t=t,
            b_mean=float(b_mean[t]),
            lambda1=float(lambda1[t]),
            core_size=int(core_size[t]),
            core_alive=bool(core_alive[t]),
            departed_count=int(departed[t]),
            y_remaining=1.0 - int(departed[t]) / n,
            whole_network=bool(whole[t]),
        )
        for t in range(t_max)
    ]
    return records, [int(v) for v in max_out], int(unconverged)
