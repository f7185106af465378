"""Independent reference implementations used only by the tests.

None of these share code with the package: the W1 oracle enumerates basic
feasible solutions of the transportation polytope, curvature goes through
dense measures, Floyd-Warshall distances and scipy's LP solver.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np
from scipy.optimize import linprog


@lru_cache(maxsize=None)
def _bases(m: int, n: int):
    """All invertible bases of the ``m x n`` transportation constraint matrix.

    The matrix (last column-sum row dropped, it is redundant) is totally
    unimodular, so a basis is a set of ``m + n - 1`` cells with determinant +-1.
    Returns the cell index sets and the inverted basis matrices.
    """
    rows = m + n - 1
    full = np.zeros((m + n, m * n))
    for i in range(m):
        for j in range(n):
            full[i, i * n + j] = 1.0
            full[m + j, i * n + j] = 1.0
    a = full[:rows]
    combos = np.array(list(itertools.combinations(range(m * n), rows)), dtype=np.int64)
    mats = a[:, combos].transpose(1, 0, 2)  # (k, rows, rows)
    det = np.linalg.det(mats)
    keep = np.abs(det) > 0.5
    return combos[keep], np.linalg.inv(mats[keep])


def w1_bfs_enumeration(a, b, c) -> float:
    """Minimum transport cost over every basic feasible solution."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = c.shape
    combos, inv = _bases(m, n)
    rhs = np.concatenate([a, b])[: m + n - 1]
    x = inv @ rhs  # (k, rows)
    feasible = np.all(x >= -1e-12, axis=1)
    costs = np.sum(x * c.reshape(-1)[combos], axis=1)
    return float(np.min(costs[feasible]))


def floyd_warshall(n: int, edges, weights=None) -> np.ndarray:
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0.0)
    weights = np.ones(len(edges)) if weights is None else weights
    for (i, j), w in zip(edges, weights):
        d[i, j] = d[j, i] = min(d[i, j], w)
    for k in range(n):
        d = np.minimum(d, d[:, k : k + 1] + d[k : k + 1, :])
    return d


def dense_measure(n: int, edges, weights, i: int, alpha: float, uniform: bool = False) -> np.ndarray:
    mu = np.zeros(n)
    mu[i] = alpha
    nbrs = [(v, w) for (p, q), w in zip(edges, weights) for v in ((q,) if p == i else (p,) if q == i else ())]
    total = sum(1.0 if uniform else w for _, w in nbrs)
    for v, w in nbrs:
        mu[v] += (1 - alpha) * (1.0 if uniform else w) / total
    return mu


def lp_w1(mu: np.ndarray, nu: np.ndarray, dist: np.ndarray) -> float:
    """W1 by scipy's HiGHS LP on the supports of ``mu`` and ``nu``."""
    s = np.flatnonzero(mu > 0)
    t = np.flatnonzero(nu > 0)
    c = dist[np.ix_(s, t)]
    m, n = c.shape
    a_eq = np.zeros((m + n, m * n))
    for r in range(m):
        a_eq[r, r * n : (r + 1) * n] = 1.0
    for q in range(n):
        a_eq[m + q, q::n] = 1.0
    res = linprog(c.reshape(-1), A_eq=a_eq, b_eq=np.concatenate([mu[s], nu[t]]), bounds=(0, None), method="highs")
    assert res.status == 0
    return float(res.fun)


def curvature_oracle(n: int, edges, weights=None, alpha: float = 0.0, uniform: bool = False) -> dict:
    weights = np.ones(len(edges)) if weights is None else np.asarray(weights, dtype=float)
    dist = floyd_warshall(n, edges, weights)
    out = {}
    for i, j in edges:
        mu = dense_measure(n, edges, weights, i, alpha, uniform)
        nu = dense_measure(n, edges, weights, j, alpha, uniform)
        out[(i, j)] = 1.0 - lp_w1(mu, nu, dist) / dist[i, j]
    return out


def random_measure_pair(rng: np.random.Generator, max_support: int = 4, rational: bool = True):
    """Random masses and an integer cost matrix on supports of size 1..max_support."""
    m = int(rng.integers(1, max_support + 1))
    n = int(rng.integers(1, max_support + 1))

    def masses(k):
        if rational:
            w = rng.integers(1, 9, size=k).astype(float)
        else:
            w = rng.random(k) + 0.05
        return w / w.sum()

    c = rng.integers(0, 6, size=(m, n)).astype(float)
    return masses(m), masses(n), c
