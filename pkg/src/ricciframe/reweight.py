"""Curvature-to-weight transforms and the curvature-enhanced normalized Laplacian."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .curvature import CurvatureConfig, CurvatureMap, all_curvatures, normalize_curvatures
from .graph import Graph


class ZetaKind(str, enum.Enum):
    HOM = "hom"
    HET = "het"


def zeta_hom(kappa):
    """``1 - kappa``: first Ricci-flow step on an unweighted graph."""
    return 1.0 - np.asarray(kappa, dtype=float) if np.ndim(kappa) else 1.0 - float(kappa)


def zeta_het(kappa_norm):
    """``(1 + kappa_norm) / 2`` for normalized curvature in [-1, 1]."""
    k = np.asarray(kappa_norm, dtype=float)
    if np.any(k < -1.0) or np.any(k > 1.0) or np.any(np.isnan(k)):
        raise ValueError("normalized curvature must lie in [-1, 1]")
    out = (1.0 + k) / 2.0
    return out if np.ndim(kappa_norm) else float(out)


@dataclass(frozen=True)
class ReweightedGraph:
    """A graph together with its transformed edge weights and Laplacian.

    ``zeta_weights`` follows ``base.edges``. Edges whose weight dropped to
    zero are kept (the topology is unchanged) and listed by ``zero_edges``.
    """

    base: Graph
    zeta_weights: np.ndarray
    laplacian: np.ndarray
    curvature: CurvatureMap | None = None
    kind: ZetaKind | None = None

    @property
    def zero_edges(self) -> list[tuple[int, int]]:
        return [e for e, w in zip(self.base.edges, self.zeta_weights) if w == 0.0]

    def as_graph(self) -> Graph:
        """The weighted graph carrying the zeta weights; zero-weight edges are dropped."""
        keep = self.zeta_weights > 0
        return Graph(
            self.base.n,
            [e for e, k in zip(self.base.edges, keep) if k],
            self.zeta_weights[keep],
            self.base.features,
            self.base.labels,
        )

    def weight_map(self) -> dict[tuple[int, int], float]:
        return {e: float(w) for e, w in zip(self.base.edges, self.zeta_weights)}


def build_curvature_laplacian(g: Graph, zeta_weights) -> ReweightedGraph:
    """``I - D^{-1/2} (A * zeta + I) D^{-1/2}`` with ``D`` the row sums of ``A * zeta + I``.

    ``zeta_weights`` is an array in ``g.edges`` order or a mapping edge -> weight.
    The self-loop keeps weight 1 whatever the transform, so no row sum is zero.
    """
    if isinstance(zeta_weights, dict):
        zeta_weights = [zeta_weights[e] for e in g.edges]
    z = np.asarray(zeta_weights, dtype=float).reshape(-1)
    if z.size != g.num_edges:
        raise ValueError("one zeta weight per edge required")
    if np.any(z < 0) or np.any(~np.isfinite(z)):
        raise ValueError("zeta weights must be finite and non-negative")
    a = np.eye(g.n)
    if g.num_edges:
        idx = np.array(g.edges)
        vals = g.weights * z
        a[idx[:, 0], idx[:, 1]] = vals
        a[idx[:, 1], idx[:, 0]] = vals
    inv_sqrt = 1.0 / np.sqrt(a.sum(axis=1))
    lap = np.eye(g.n) - inv_sqrt[:, None] * a * inv_sqrt[None, :]
    z.setflags(write=False)
    return ReweightedGraph(g, z, lap)


def reweight_pipeline(g: Graph, cfg: CurvatureConfig, kind) -> ReweightedGraph:
    """Curvature -> (normalization for het) -> zeta -> Laplacian."""
    kind = ZetaKind(kind)
    cmap = all_curvatures(g, cfg)
    if kind is ZetaKind.HOM:
        z = zeta_hom(cmap.values)
    else:
        cmap = normalize_curvatures(cmap)
        z = zeta_het(cmap.normalized)
    # curvature <= 1 can exceed 1 by rounding; keep zeta non-negative
    z = np.clip(z, 0.0, None)
    rg = build_curvature_laplacian(g, z)
    return ReweightedGraph(rg.base, rg.zeta_weights, rg.laplacian, cmap, kind)
