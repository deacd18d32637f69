import importlib.util

import numpy as np
import pytest

from opaq import _kernels

HAS_NUMBA = importlib.util.find_spec("numba") is not None


def random_graph(rng, n, deg):
    src = rng.integers(0, n, n * deg)
    dst = rng.integers(0, n, n * deg)
    return _kernels.build_csr(n, src, dst), src, dst


def naive_reach(n, src, dst, seeds):
    seen = set(np.flatnonzero(seeds).tolist())
    stack = list(seen)
    adj = {}
    for s, d in zip(src.tolist(), dst.tolist()):
        adj.setdefault(s, []).append(d)
    while stack:
        x = stack.pop()
        for y in adj.get(x, ()):
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return seen


def naive_zero_one(n, src, dst, w, seeds):
    # Bellman-Ford style relaxation
    dist = [None] * n
    for s in np.flatnonzero(seeds).tolist():
        dist[s] = 0
    changed = True
    while changed:
        changed = False
        for s, d, c in zip(src.tolist(), dst.tolist(), w.tolist()):
            if dist[s] is not None and (dist[d] is None or dist[s] + c < dist[d]):
                dist[d] = dist[s] + c
                changed = True
    return dist


@pytest.mark.parametrize("n, deg", [(1, 0), (5, 1), (40, 2), (300, 1)])
def test_numpy_kernels_against_naive(n, deg):
    rng = np.random.default_rng(n)
    (indptr, indices, order), src, dst = random_graph(rng, n, deg)
    seeds = np.zeros(n, bool)
    seeds[rng.integers(0, n, 2)] = True
    assert set(np.flatnonzero(_kernels.reach_mask_np(indptr, indices, seeds)).tolist()) == naive_reach(
        n, src, dst, seeds
    )
    ptr, idx = _kernels.closure_np(indptr, indices, n)
    for s in range(min(n, 20)):
        one = np.zeros(n, bool)
        one[s] = True
        assert set(idx[ptr[s]:ptr[s + 1]].tolist()) == naive_reach(n, src, dst, one)
    w = rng.integers(0, 2, src.size)
    dist = _kernels.zero_one_dist_np(indptr, indices, w[order], seeds)
    expect = naive_zero_one(n, src, dst, w, seeds)
    for i in range(n):
        if expect[i] is None:
            assert dist[i] == _kernels.INF
        else:
            assert dist[i] == expect[i]


@pytest.mark.skipif(not HAS_NUMBA, reason="numba not installed")
@pytest.mark.parametrize("n, deg", [(1, 0), (7, 1), (64, 2), (500, 3)])
def test_numba_matches_numpy(n, deg):
    nb = _kernels._numba_kernels()
    rng = np.random.default_rng(100 + n)
    (indptr, indices, order), src, dst = random_graph(rng, n, deg)
    seeds = np.zeros(n, bool)
    seeds[0] = True
    assert np.array_equal(nb["reach"](indptr, indices, seeds), _kernels.reach_mask_np(indptr, indices, seeds))
    p1, i1 = nb["closure"](indptr, indices, n)
    p2, i2 = _kernels.closure_np(indptr, indices, n)
    assert np.array_equal(p1, p2) and np.array_equal(i1, i2)
    w = rng.integers(0, 2, src.size).astype(np.int64)[order]
    assert np.array_equal(
        nb["zero_one"](indptr, indices, w, seeds), _kernels.zero_one_dist_np(indptr, indices, w, seeds)
    )


def test_dispatch_respects_force():
    (indptr, indices, _), _, _ = random_graph(np.random.default_rng(0), 30, 2)
    seeds = np.zeros(30, bool)
    seeds[3] = True
    old = (_kernels.USE_NUMBA, _kernels.NUMBA_MIN_NODES)
    try:
        _kernels.force(False)
        assert _kernels.backend() == "numpy"
        a = _kernels.reach_mask(indptr, indices, seeds)
        _kernels.force(True, min_nodes=0)
        b = _kernels.reach_mask(indptr, indices, seeds)
        assert np.array_equal(a, b)
    finally:
        _kernels.USE_NUMBA, _kernels.NUMBA_MIN_NODES = old


def test_build_csr_empty():
    indptr, indices, order = _kernels.build_csr(3, np.array([], np.int64), np.array([], np.int64))
    assert indptr.tolist() == [0, 0, 0, 0] and indices.size == 0
