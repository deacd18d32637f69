"""Graph kernels over CSR adjacency arrays.

Every kernel exists twice: a numba ``@njit`` version and a pure-numpy
version.  The numba path is used for graphs of at least
``NUMBA_MIN_NODES`` nodes when numba is installed and the environment
variable ``OPAQ_DISABLE_NUMBA`` is unset (or ``0``).  numba itself is only
imported the first time such a graph shows up.  Both paths return
identical arrays; ``tests/test_kernels.py`` checks this.

CSR layout: ``indptr`` has length ``n + 1`` (int64), ``indices`` holds
successor ids (int64).  Edge ``k`` of node ``u`` is ``indices[indptr[u] + k]``.
"""

import importlib.util
import os

import numpy as np

INF = np.iinfo(np.int64).max

# graphs with fewer nodes than this stay on the numpy path; the numba
# import and cache load cost more than they save on tiny graphs
NUMBA_MIN_NODES = int(os.environ.get("OPAQ_NUMBA_MIN_NODES", "2048"))


def _env_disabled():
    return os.environ.get("OPAQ_DISABLE_NUMBA", "0").lower() not in ("", "0", "false", "no")


USE_NUMBA = importlib.util.find_spec("numba") is not None and not _env_disabled()


def build_csr(n, src, dst):
    """CSR arrays for the edges ``src[i] -> dst[i]`` on ``n`` nodes.

    Returns ``(indptr, indices, order)`` where ``order`` maps CSR slot to
    the original edge index.
    """
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    order = np.argsort(src, kind="stable")
    counts = np.bincount(src, minlength=n) if src.size else np.zeros(n, np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, dst[order], order


# ---------------------------------------------------------------------------
# numpy implementations


def _gather(indptr, frontier):
    starts = indptr[frontier]
    counts = indptr[frontier + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, np.int64)
    base = np.repeat(starts - (np.cumsum(counts) - counts), counts)
    return base + np.arange(total, dtype=np.int64)


def reach_mask_np(indptr, indices, seeds):
    seen = np.array(seeds, dtype=np.bool_, copy=True)
    frontier = np.flatnonzero(seen)
    while frontier.size:
        nxt = indices[_gather(indptr, frontier)]
        nxt = np.unique(nxt[~seen[nxt]])
        seen[nxt] = True
        frontier = nxt
    return seen


def closure_np(indptr, indices, n):
    rows = []
    has_out = np.diff(indptr) > 0
    for s in range(n):
        if not has_out[s]:
            rows.append(np.array([s], np.int64))
            continue
        seeds = np.zeros(n, np.bool_)
        seeds[s] = True
        rows.append(np.flatnonzero(reach_mask_np(indptr, indices, seeds)))
    out_ptr = np.zeros(n + 1, np.int64)
    if rows:
        out_ptr[1:] = np.cumsum([r.size for r in rows])
    out_idx = np.concatenate(rows).astype(np.int64) if rows else np.empty(0, np.int64)
    return out_ptr, out_idx


def zero_one_dist_np(indptr, indices, weights, seeds):
    """Minimal number of weight-1 edges needed to reach each node."""
    n = indptr.size - 1
    dist = np.full(n, INF, dtype=np.int64)
    zero = weights == 0
    frontier = np.flatnonzero(seeds)
    level = 0
    seen = np.zeros(n, np.bool_)
    seen[frontier] = True
    while frontier.size:
        dist[frontier] = level
        # close the level under weight-0 edges
        layer = frontier
        while layer.size:
            slots = _gather(indptr, layer)
            nxt = indices[slots[zero[slots]]]
            nxt = np.unique(nxt[~seen[nxt]])
            seen[nxt] = True
            dist[nxt] = level
            layer = nxt
        members = np.flatnonzero(dist == level)
        slots = _gather(indptr, members)
        nxt = indices[slots[~zero[slots]]]
        nxt = np.unique(nxt[~seen[nxt]])
        seen[nxt] = True
        frontier = nxt
        level += 1
    return dist


# ---------------------------------------------------------------------------
# numba implementations

_NB = None


def _numba_kernels():
    """Compile (or load from the on-disk cache) the numba kernels on first use."""
    global _NB
    if _NB is not None:
        return _NB
    import numba

    @numba.njit(cache=True)
    def reach_mask_nb(indptr, indices, seeds):
        n = seeds.shape[0]
        seen = seeds.copy()
        stack = np.empty(n, np.int64)
        top = 0
        for u in range(n):
            if seen[u]:
                stack[top] = u
                top += 1
        while top > 0:
            top -= 1
            u = stack[top]
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                if not seen[v]:
                    seen[v] = True
                    stack[top] = v
                    top += 1
        return seen

    @numba.njit(cache=True)
    def closure_nb(indptr, indices, n):
        stamp = np.full(n, -1, np.int64)
        stack = np.empty(n, np.int64)
        out_ptr = np.zeros(n + 1, np.int64)
        cap = max(16, 2 * n)
        out_idx = np.empty(cap, np.int64)
        size = 0
        row = np.empty(n, np.int64)
        for s in range(n):
            stamp[s] = s
            stack[0] = s
            top = 1
            cnt = 0
            while top > 0:
                top -= 1
                u = stack[top]
                row[cnt] = u
                cnt += 1
                for k in range(indptr[u], indptr[u + 1]):
                    v = indices[k]
                    if stamp[v] != s:
                        stamp[v] = s
                        stack[top] = v
                        top += 1
            if size + cnt > cap:
                while size + cnt > cap:
                    cap *= 2
                grown = np.empty(cap, np.int64)
                grown[:size] = out_idx[:size]
                out_idx = grown
            chunk = np.sort(row[:cnt])
            out_idx[size:size + cnt] = chunk
            size += cnt
            out_ptr[s + 1] = size
        return out_ptr, out_idx[:size].copy()

    @numba.njit(cache=True)
    def zero_one_dist_nb(indptr, indices, weights, seeds):
        n = seeds.shape[0]
        inf = np.iinfo(np.int64).max
        dist = np.full(n, inf, np.int64)
        m = indices.shape[0]
        size = 2 * (m + n) + 2
        dq = np.empty(size, np.int64)
        head = m + n + 1
        tail = head
        for u in range(n):
            if seeds[u]:
                dist[u] = 0
                dq[tail] = u
                tail += 1
        done = np.zeros(n, np.bool_)
        while head < tail:
            u = dq[head]
            head += 1
            if done[u]:
                continue
            done[u] = True
            du = dist[u]
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                w = weights[k]
                nd = du + w
                if nd < dist[v]:
                    dist[v] = nd
                    if w == 0:
                        head -= 1
                        dq[head] = v
                    else:
                        dq[tail] = v
                        tail += 1
        return dist

    _NB = {"reach": reach_mask_nb, "closure": closure_nb, "zero_one": zero_one_dist_nb}
    return _NB


# ---------------------------------------------------------------------------
# dispatch


def _wants_numba(n):
    return USE_NUMBA and n >= NUMBA_MIN_NODES


def reach_mask(indptr, indices, seeds):
    """Boolean mask of nodes reachable from ``seeds`` (seeds included)."""
    seeds = np.asarray(seeds, dtype=np.bool_)
    if _wants_numba(seeds.shape[0]):
        return _numba_kernels()["reach"](indptr, indices, seeds)
    return reach_mask_np(indptr, indices, seeds)


def closure(indptr, indices, n):
    """Per-node reachable sets as CSR ``(ptr, idx)``; each row sorted."""
    if _wants_numba(n):
        return _numba_kernels()["closure"](indptr, indices, n)
    return closure_np(indptr, indices, n)


def zero_one_dist(indptr, indices, weights, seeds):
    """0/1-BFS distances; unreachable nodes get ``INF``."""
    seeds = np.asarray(seeds, dtype=np.bool_)
    weights = np.asarray(weights, dtype=np.int64)
    if _wants_numba(seeds.shape[0]):
        return _numba_kernels()["zero_one"](indptr, indices, weights, seeds)
    return zero_one_dist_np(indptr, indices, weights, seeds)


def backend():
    if not USE_NUMBA:
        return "numpy"
    return f"numba (graphs >= {NUMBA_MIN_NODES} nodes), numpy below"


def force(flag=None, min_nodes=None):
    """Override the backend choice at runtime (tests and benchmarks)."""
    global USE_NUMBA, NUMBA_MIN_NODES
    if flag is not None:
        USE_NUMBA = bool(flag) and importlib.util.find_spec("numba") is not None
    if min_nodes is not None:
        NUMBA_MIN_NODES = int(min_nodes)


def warmup():
    """Compile (or load from cache) the numba kernels on a toy graph."""
    if not USE_NUMBA:
        return
    nb = _numba_kernels()
    indptr, indices, _ = build_csr(2, np.array([0]), np.array([1]))
    seeds = np.array([True, False])
    nb["reach"](indptr, indices, seeds)
    nb["closure"](indptr, indices, 2)
    nb["zero_one"](indptr, indices, np.array([1], dtype=np.int64), seeds)
