"""Ollivier-Ricci curvature of graph edges, its normalization, bounds and Ricci flow."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .graph import Edge, Graph, canonical, common_neighbors
from .transport import (
    node_measure,
    shortest_path_distances,
    wasserstein1_exact,
    wasserstein1_sinkhorn,
)

SOLVERS = ("exact", "sinkhorn")
WORKERS_ENV = "RICCIFRAME_WORKERS"

# Below this many edges a process pool costs more than it saves.
_PARALLEL_MIN_EDGES = 200


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class CurvatureConfig:
    alpha: float = 0.0
    solver: str = "exact"
    reg: float = 0.01
    tol: float = 1e-9
    max_iter: int = 10000
    workers: int = 1
    uniform_measure: bool = False

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}")
        if self.reg <= 0 or self.tol <= 0 or self.max_iter < 1:
            raise ValueError("reg, tol and max_iter must be positive")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class CurvatureMap:
    """Curvature per edge, in the graph's edge order."""

    edges: tuple[Edge, ...]
    values: np.ndarray
    normalized: np.ndarray | None = field(default=None)

    def __getitem__(self, edge) -> float:
        return float(self.values[self._position(edge)])

    def _position(self, edge) -> int:
        return self.edges.index(canonical(edge))

    def as_dict(self) -> dict[Edge, float]:
        return {e: float(v) for e, v in zip(self.edges, self.values)}

    @property
    def min(self) -> float:
        return float(self.values.min())

    @property
    def max(self) -> float:
        return float(self.values.max())


class _DistanceCache:
    """Truncated Dijkstra per source, settled out to the source's 3-hop ball.

    Any pair (s, t) with s in supp(m_i), t in supp(m_j) and i ~ j is at most
    three hops apart, so one run per source serves every edge.
    """

    def __init__(self, g: Graph):
        self.g = g
        self._rows: dict[int, dict[int, float]] = {}

    def __call__(self, s: int) -> dict[int, float]:
        row = self._rows.get(s)
        if row is None:
            ball = self.g.hop_distances(s, cutoff=3)
            row = shortest_path_distances(self.g, s, targets=ball)
            self._rows[s] = row
        return row


def _edge_curvature(g: Graph, i: int, j: int, cfg: CurvatureConfig, dist: _DistanceCache) -> float:
    mu = node_measure(g, i, cfg.alpha, uniform=cfg.uniform_measure)
    nu = node_measure(g, j, cfg.alpha, uniform=cfg.uniform_measure)
    cost = np.array([[dist(s)[t] for t in nu.nodes] for s in mu.nodes])
    if cfg.solver == "exact":
        w1, _ = wasserstein1_exact(mu, nu, cost)
    else:
        w1, _ = wasserstein1_sinkhorn(mu, nu, cost, reg=cfg.reg, max_iter=cfg.max_iter, tol=cfg.tol)
    return 1.0 - w1 / dist(i)[j]


def edge_curvature(g: Graph, edge: Sequence[int], cfg: CurvatureConfig = CurvatureConfig()) -> float:
    """``1 - W1(m_i, m_j) / d(i, j)`` for one edge."""
    i, j = canonical(edge)
    if not g.has_edge(i, j):
        raise KeyError(f"no edge {(i, j)}")
    return _edge_curvature(g, i, j, cfg, _DistanceCache(g))


def _curvature_chunk(args) -> list[float]:
    g, edges, cfg = args
    dist = _DistanceCache(g)
    return [_edge_curvature(g, i, j, cfg, dist) for i, j in edges]


def curvatures_for(g: Graph, edges: Sequence[Edge], cfg: CurvatureConfig) -> np.ndarray:
    """Curvature of the given edges, parallelized over ``cfg.workers`` processes."""
    edges = [canonical(e) for e in edges]
    for i, j in edges:
        if not g.has_edge(i, j):
            raise KeyError(f"no edge {(i, j)}")
    if cfg.workers == 1 or len(edges) < _PARALLEL_MIN_EDGES:
        return np.array(_curvature_chunk((g, edges, cfg)), dtype=float)
    chunks = np.array_split(np.arange(len(edges)), cfg.workers * 4)
    jobs = [(g, [edges[k] for k in chunk], cfg) for chunk in chunks if chunk.size]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        parts = list(pool.map(_curvature_chunk, jobs))
    return np.array([v for part in parts for v in part], dtype=float)


def all_curvatures(g: Graph, cfg: CurvatureConfig = CurvatureConfig()) -> CurvatureMap:
    return CurvatureMap(g.edges, curvatures_for(g, g.edges, cfg))


def normalize_curvatures(cmap: CurvatureMap) -> CurvatureMap:
    """Scale curvature into [-1, 1] by its largest magnitude (zero stays zero)."""
    if not cmap.edges:
        raise ValueError("curvature map is empty")
    peak = float(np.max(np.abs(cmap.values)))
    scaled = cmap.values / peak if peak > 0 else np.zeros_like(cmap.values)
    return replace(cmap, normalized=np.clip(scaled, -1.0, 1.0))


def ricci_flow_step(g: Graph, cfg: CurvatureConfig = CurvatureConfig()) -> dict[Edge, float]:
    """One discrete Ricci-flow update ``a_ij <- d(i, j) (1 - kappa_ij)``.

    Distances and curvature are both taken under the current weights of
    ``g``; ``g`` itself is left untouched.
    """
    kappa = curvatures_for(g, g.edges, cfg)
    dist = _DistanceCache(g)
    return {(i, j): dist(i)[j] * (1.0 - k) for (i, j), k in zip(g.edges, kappa)}


def jost_lower_bound(g: Graph, edge: Sequence[int]) -> float:
    """``-2 (1 - a_ij/d_i - a_ij/d_j)_+`` with weighted degrees; 0 if either degree <= 1."""
    i, j = canonical(edge)
    a = g.weight(i, j)
    di, dj = g.weighted_degree(i), g.weighted_degree(j)
    if di <= 1 or dj <= 1:
        return 0.0
    return -2.0 * max(0.0, 1.0 - a / di - a / dj)


def triangle_upper_bound(g: Graph, edge: Sequence[int]) -> float:
    """``#(i, j) / max(d_i, d_j)`` with neighbor-count degrees."""
    i, j = canonical(edge)
    if not g.has_edge(i, j):
        raise KeyError(f"no edge {(i, j)}")
    return common_neighbors(g, i, j).size / max(g.degree(i), g.degree(j))
