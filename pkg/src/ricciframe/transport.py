"""Shortest paths, neighborhood measures and Wasserstein-1 transport between them."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy.special import logsumexp

from .graph import Graph

INF = math.inf


class TransportError(ValueError):
    pass


class SinkhornConvergenceError(TransportError):
    """Sinkhorn did not reach the marginal tolerance within ``max_iter``."""

    def __init__(self, residual: float, iterations: int):
        super().__init__(
            f"Sinkhorn did not converge after {iterations} iterations "
            f"(marginal residual {residual:.3e})"
        )
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class ProbabilityMeasure:
    """Finitely supported probability measure on graph nodes."""

    nodes: tuple[int, ...]
    masses: np.ndarray

    def __post_init__(self):
        masses = np.asarray(self.masses, dtype=float)
        object.__setattr__(self, "masses", masses)
        if len(self.nodes) != masses.size:
            raise ValueError("one mass per node required")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("support nodes must be distinct")
        if masses.size == 0 or np.any(masses <= 0):
            raise ValueError("masses must be positive")
        if abs(masses.sum() - 1.0) > 1e-12:
            raise ValueError(f"masses sum to {masses.sum()!r}, not 1")

    @classmethod
    def from_dict(cls, d: dict) -> "ProbabilityMeasure":
        items = sorted((int(k), float(v)) for k, v in d.items() if v > 0)
        return cls(tuple(k for k, _ in items), np.array([v for _, v in items]))

    @classmethod
    def dirac(cls, node: int) -> "ProbabilityMeasure":
        return cls((int(node),), np.ones(1))

    def as_dict(self) -> dict[int, float]:
        return {v: float(m) for v, m in zip(self.nodes, self.masses)}


@dataclass(frozen=True)
class TransportPlan:
    entries: tuple[tuple[int, int, float], ...]
    cost: float

    def matrix(self, source: ProbabilityMeasure, target: ProbabilityMeasure) -> np.ndarray:
        row = {v: k for k, v in enumerate(source.nodes)}
        col = {v: k for k, v in enumerate(target.nodes)}
        out = np.zeros((len(row), len(col)))
        for s, t, mass in self.entries:
            out[row[s], col[t]] += mass
        return out

    def marginal_residual(self, source: ProbabilityMeasure, target: ProbabilityMeasure) -> float:
        x = self.matrix(source, target)
        return float(
            max(
                np.max(np.abs(x.sum(axis=1) - source.masses)),
                np.max(np.abs(x.sum(axis=0) - target.masses)),
            )
        )


# -- shortest paths -------------------------------------------------------------

def shortest_path_distances(
    g: Graph,
    source: int,
    weights=None,
    targets: Iterable[int] | None = None,
) -> dict[int, float]:
    """Single-source Dijkstra distances.

    Parameters
    ----------
    g : Graph
    source : int
    weights : array_like, optional
        Edge weights in ``g.edges`` order, overriding ``g.weights``.
    targets : iterable of int, optional
        Stop as soon as every target is settled. The result then contains at
        least the targets (unreachable ones map to ``inf``).

    Returns
    -------
    dict
        ``node -> distance``. Without ``targets`` every node is present and
        unreachable nodes map to ``inf``.
    """
    if weights is None:
        nbr_w = g.neighbor_weights
    else:
        w = np.asarray(weights, dtype=float)
        if np.any(w <= 0):
            raise ValueError("weights must be positive")

        def nbr_w(u):
            return np.array([w[g.edge_id(u, int(v))] for v in g.neighbors(u)])

    remaining = None if targets is None else set(targets)
    settled: dict[int, float] = {}
    best = {source: 0.0}
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if u in settled:
            continue
        settled[u] = d
        if remaining is not None:
            remaining.discard(u)
            if not remaining:
                break
        for v, wv in zip(g.neighbors(u).tolist(), nbr_w(u).tolist()):
            nd = d + wv
            if v not in settled and nd < best.get(v, INF):
                best[v] = nd
                heapq.heappush(heap, (nd, v))
    if targets is None:
        return {v: settled.get(v, INF) for v in range(g.n)}
    for t in targets:
        settled.setdefault(t, INF)
    return settled


def node_measure(g: Graph, i: int, alpha: float, uniform: bool = False) -> ProbabilityMeasure:
    """Lazy neighborhood measure of node ``i``.

    Mass ``alpha`` stays on ``i``; the rest is spread over the neighbors in
    proportion to edge weight (or evenly when ``uniform`` is set).
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if not 0 <= i < g.n:
        raise ValueError(f"node {i} out of range")
    nbrs = g.neighbors(i)
    if alpha == 1.0:
        return ProbabilityMeasure.dirac(i)
    if nbrs.size == 0:
        raise ValueError(f"node {i} is isolated; its measure needs alpha = 1")
    w = np.ones(nbrs.size) if uniform else g.neighbor_weights(i)
    share = (1.0 - alpha) * w / w.sum()
    nodes = nbrs.tolist()
    masses = share.tolist()
    if alpha > 0.0:
        pos = int(np.searchsorted(nbrs, i))
        nodes.insert(pos, i)
        masses.insert(pos, alpha)
    masses = np.array(masses)
    # keep the sum at exactly 1 up to rounding of a single entry
    masses[np.argmax(masses)] += 1.0 - masses.sum()
    return ProbabilityMeasure(tuple(nodes), masses)


# -- transport solvers ------------------------------------------------------------

def _cost_matrix(mu: ProbabilityMeasure, nu: ProbabilityMeasure, dist) -> np.ndarray:
    if callable(dist):
        c = np.array([[dist(s, t) for t in nu.nodes] for s in mu.nodes], dtype=float)
    else:
        c = np.asarray(dist, dtype=float)
        if c.shape != (len(mu.nodes), len(nu.nodes)):
            raise ValueError(
                f"distance matrix has shape {c.shape}, expected {(len(mu.nodes), len(nu.nodes))}"
            )
    if not np.all(np.isfinite(c)):
        raise TransportError("infinite distance between the supports; the measures live in different components")
    if np.any(c < 0):
        raise ValueError("distances must be non-negative")
    return c


def _plan(mu, nu, x: np.ndarray, c: np.ndarray, tol: float = 0.0) -> TransportPlan:
    entries = tuple(
        (mu.nodes[r], nu.nodes[k], float(x[r, k]))
        for r, k in zip(*np.nonzero(x > tol))
    )
    return TransportPlan(entries, float(np.sum(x * c)))


def _tree_path(adj, start, goal):
    """Vertex path between two nodes of the basis tree (rows ``0..m-1``, cols ``m..``)."""
    parent = {start: None}
    stack = [start]
    while stack:
        u = stack.pop()
        if u == goal:
            break
        for v in adj[u]:
            if v not in parent:
                parent[v] = u
                stack.append(v)
    path = [goal]
    while path[-1] != start:
        path.append(parent[path[-1]])
    return path


def transport_simplex(a: np.ndarray, b: np.ndarray, c: np.ndarray, tol: float = 1e-12,
                      max_pivots: int | None = None) -> np.ndarray:
    """Optimal coupling of supplies ``a`` and demands ``b`` under cost ``c``.

    Primal transportation simplex (MODI): a least-cost start, potentials
    from the spanning-tree basis, Dantzig pricing, and Bland's rule once the
    pivot count suggests degenerate cycling.
    """
    m, n = c.shape
    x = np.zeros((m, n))
    if m == 1 or n == 1:
        x[:] = np.outer(a, b) if m == 1 and n == 1 else (b[None, :] if m == 1 else a[:, None])
        return x

    # least-cost start; each allocation closes exactly one line so the
    # m + n - 1 basic cells form a spanning tree even under degeneracy
    basis = []
    ra, rb = a.astype(float).copy(), b.astype(float).copy()
    open_r = np.ones(m, dtype=bool)
    open_c = np.ones(n, dtype=bool)
    masked = c.astype(float).copy()
    for _ in range(m + n - 1):
        i, j = divmod(int(np.argmin(masked)), n)
        q = min(ra[i], rb[j])
        x[i, j] = q
        basis.append((i, j))
        ra[i] -= q
        rb[j] -= q
        rows_left, cols_left = int(open_r.sum()), int(open_c.sum())
        if (ra[i] <= rb[j] and rows_left > 1) or cols_left == 1:
            open_r[i] = False
            masked[i, :] = np.inf
        else:
            open_c[j] = False
            masked[:, j] = np.inf
    x[x < 0] = 0.0
    in_basis = np.zeros((m, n), dtype=bool)
    for cell in basis:
        in_basis[cell] = True

    bland_after = 4 * m * n
    max_pivots = max_pivots or 200 * m * n + 1000
    scale = max(1.0, float(np.max(np.abs(c))))
    for pivot in range(max_pivots):
        adj = {k: [] for k in range(m + n)}
        for r, k in basis:
            adj[r].append(m + k)
            adj[m + k].append(r)
        u = np.full(m, np.nan)
        v = np.full(n, np.nan)
        u[0] = 0.0
        stack = [0]
        while stack:
            node = stack.pop()
            for nb in adj[node]:
                if node < m:
                    if np.isnan(v[nb - m]):
                        v[nb - m] = c[node, nb - m] - u[node]
                        stack.append(nb)
                elif np.isnan(u[nb]):
                    u[nb] = c[nb, node - m] - v[node - m]
                    stack.append(nb)
        reduced = c - u[:, None] - v[None, :]
        reduced[in_basis] = 0.0
        negative = reduced < -tol * scale
        if not negative.any():
            return x
        if pivot < bland_after:
            flat = int(np.argmin(reduced))
        else:
            flat = int(np.flatnonzero(negative)[0])
        er, ek = divmod(flat, n)

        path = _tree_path(adj, er, m + ek)  # col ek ... row er
        cycle = []
        for s in range(len(path) - 1):
            p, q = path[s], path[s + 1]
            cycle.append((q, p - m) if p >= m else (p, q - m))
        minus = cycle[0::2]
        plus = cycle[1::2]
        theta = min(x[cell] for cell in minus)
        leave = min((cell for cell in minus if x[cell] <= theta), key=lambda cl: cl[0] * n + cl[1])
        for cell in minus:
            x[cell] -= theta
        for cell in plus:
            x[cell] += theta
        x[er, ek] += theta
        x[leave] = 0.0
        in_basis[leave] = False
        in_basis[er, ek] = True
        basis[basis.index(leave)] = (er, ek)
    raise TransportError("transportation simplex exceeded its pivot budget")


def wasserstein1_exact(
    mu: ProbabilityMeasure,
    nu: ProbabilityMeasure,
    dist: np.ndarray | Callable[[int, int], float],
) -> tuple[float, TransportPlan]:
    """Exact W1 between two measures.

    ``dist`` is either a ``len(mu) x len(nu)`` matrix aligned with the supports
    or a callable ``dist(u, v)``.
    """
    c = _cost_matrix(mu, nu, dist)
    x = transport_simplex(mu.masses, nu.masses, c)
    plan = _plan(mu, nu, x, c)
    return plan.cost, plan


def _round_to_feasible(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Project a near-feasible plan onto the transportation polytope."""
    rows = p.sum(axis=1)
    p = p * np.minimum(1.0, np.divide(a, rows, out=np.ones_like(a), where=rows > 0))[:, None]
    cols = p.sum(axis=0)
    p = p * np.minimum(1.0, np.divide(b, cols, out=np.ones_like(b), where=cols > 0))[None, :]
    err_a = a - p.sum(axis=1)
    err_b = b - p.sum(axis=0)
    total = err_a.sum()
    if total > 0:
        p = p + np.outer(np.clip(err_a, 0, None), np.clip(err_b, 0, None)) / total
    return p


_ANNEAL_ITERS = 50


def _dual_newton_step(p, a, b, f, g, eps):
    """One Newton step on the entropic dual; the Hessian is the bordered plan matrix."""
    m = a.size
    r, s = p.sum(axis=1), p.sum(axis=0)
    hess = np.block([[np.diag(r), p], [p.T, np.diag(s)]])
    rhs = eps * np.concatenate([a - r, b - s])
    # the Hessian is singular along (1, -1); least squares picks the minimal step
    d = np.linalg.lstsq(hess, rhs, rcond=None)[0]
    return f + d[:m], g + d[m:]


def wasserstein1_sinkhorn(
    mu: ProbabilityMeasure,
    nu: ProbabilityMeasure,
    dist,
    reg: float = 0.01,
    max_iter: int = 10000,
    tol: float = 1e-9,
) -> tuple[float, TransportPlan]:
    """Entropic W1 by log-domain Sinkhorn, rounded to an exactly feasible plan.

    The regularization is annealed geometrically from the cost scale down to
    ``reg`` with warm-started potentials; at small ``reg`` a cold start stalls
    on nearly diagonal kernels. ``max_iter`` and ``tol`` govern the final
    stage, with ``tol`` bounding the summed L1 error of both marginals. When
    the sweeps stall, which happens when the kernel splits into weakly coupled
    blocks, a Newton step on the dual potentials is tried and kept if it
    lowers the residual. The reported cost is that of the rounded plan, so it never falls
    below the exact W1.
    """
    if reg <= 0:
        raise ValueError("reg must be positive")
    c = _cost_matrix(mu, nu, dist)
    a, b = mu.masses, nu.masses
    log_a, log_b = np.log(a), np.log(b)
    f = np.zeros(a.size)
    g = np.zeros(b.size)

    def residual_of(f, g, eps):
        p = np.exp((f[:, None] + g[None, :] - c) / eps)
        return p, float(np.abs(p.sum(axis=1) - a).sum() + np.abs(p.sum(axis=0) - b).sum())

    def run(eps, iters, stop):
        nonlocal f, g
        p, residual = residual_of(f, g, eps)
        last = residual
        for it in range(1, iters + 1):
            f = eps * (log_a - logsumexp((g[None, :] - c) / eps, axis=1))
            g = eps * (log_b - logsumexp((f[:, None] - c) / eps, axis=0))
            if it % 10 == 0 or it == iters:
                p, residual = residual_of(f, g, eps)
                if residual >= 0.9 * last:
                    # sweeps stalled on a weakly coupled kernel: try a dual Newton step
                    f2, g2 = _dual_newton_step(p, a, b, f, g, eps)
                    with np.errstate(over="ignore", invalid="ignore"):
                        p2, r2 = residual_of(f2, g2, eps)
                    if r2 < residual:
                        f, g, p, residual = f2, g2, p2, r2
                if residual < stop:
                    return p, residual, True
                last = residual
        return p, residual, False

    eps = max(float(c.max()), reg)
    while eps > reg:
        run(eps, _ANNEAL_ITERS, tol ** 0.5)
        eps = max(eps / 2.0, reg)
    p, residual, ok = run(reg, max_iter, tol)
    if not ok:
        raise SinkhornConvergenceError(residual, max_iter)
    p = _round_to_feasible(p, a, b)
    plan = _plan(mu, nu, p, c)
    return plan.cost, plan
