"""Undirected weighted graphs, normalized operators, spectra and synthetic generators."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

# Dense n x n matrices are only materialized up to this many nodes.
DENSE_CAP = 5000

Edge = tuple[int, int]


def canonical(edge: Sequence[int]) -> Edge:
    i, j = int(edge[0]), int(edge[1])
    return (i, j) if i < j else (j, i)


class Graph:
    """Immutable undirected simple graph with positive edge weights.

    Edges are stored as sorted ``(i, j)`` pairs with ``i < j`` together with
    a weight array aligned to that order. Neighbor lists are sorted arrays.
    Every "mutation" returns a new ``Graph``.

    Parameters
    ----------
    n : int
        Number of nodes, labelled ``0 .. n-1``.
    edges : iterable of pairs
        Unordered node pairs. Self-loops and duplicates are rejected.
    weights : sequence of float, optional
        One positive weight per edge (same order as ``edges``). Defaults to 1.
    features : array_like, optional
        ``n x d`` node feature matrix.
    labels : sequence of int, optional
        Class id per node.
    """

    __slots__ = ("n", "edges", "weights", "features", "labels", "_index", "_nbrs", "_nbr_w")

    def __init__(self, n, edges=(), weights=None, features=None, labels=None):
        n = int(n)
        if n < 0:
            raise ValueError("node count must be non-negative")
        pairs = []
        for e in edges:
            i, j = canonical(e)
            if i == j:
                raise ValueError(f"self-loop on node {i}")
            if i < 0 or j >= n:
                raise ValueError(f"edge {(i, j)} references a node outside 0..{n - 1}")
            pairs.append((i, j))
        if weights is None:
            w = np.ones(len(pairs))
        else:
            w = np.asarray(weights, dtype=float).reshape(-1)
            if w.shape[0] != len(pairs):
                raise ValueError("weights must have one entry per edge")
        if np.any(~np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("edge weights must be finite and > 0")

        order = sorted(range(len(pairs)), key=pairs.__getitem__)
        self.edges: tuple[Edge, ...] = tuple(pairs[k] for k in order)
        self.weights = w[order] if pairs else np.zeros(0)
        self.weights.setflags(write=False)
        self._index = {e: k for k, e in enumerate(self.edges)}
        if len(self._index) != len(self.edges):
            raise ValueError("duplicate edges")
        self.n = n

        nbrs: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for (i, j), wij in zip(self.edges, self.weights):
            nbrs[i].append((j, wij))
            nbrs[j].append((i, wij))
        self._nbrs = []
        self._nbr_w = []
        for lst in nbrs:
            lst.sort()
            self._nbrs.append(np.array([v for v, _ in lst], dtype=np.int64))
            self._nbr_w.append(np.array([x for _, x in lst], dtype=float))

        if features is not None:
            features = np.array(features, dtype=float)
            if features.ndim == 1:
                features = features[:, None]
            if features.shape[0] != n:
                raise ValueError("feature rows must match node count")
            features.setflags(write=False)
        if labels is not None:
            labels = np.array(labels, dtype=np.int64).reshape(-1)
            if labels.shape[0] != n:
                raise ValueError("label count must match node count")
            labels.setflags(write=False)
        self.features = features
        self.labels = labels

    # -- basic queries -------------------------------------------------
    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, i: int) -> np.ndarray:
        return self._nbrs[i]

    def neighbor_weights(self, i: int) -> np.ndarray:
        return self._nbr_w[i]

    def has_edge(self, i: int, j: int) -> bool:
        return canonical((i, j)) in self._index

    def edge_id(self, i: int, j: int) -> int:
        try:
            return self._index[canonical((i, j))]
        except KeyError:
            raise KeyError(f"no edge {canonical((i, j))}") from None

    def weight(self, i: int, j: int) -> float:
        return float(self.weights[self.edge_id(i, j)])

    def degree(self, i: int) -> int:
        """Number of neighbors of ``i``."""
        return len(self._nbrs[i])

    def weighted_degree(self, i: int) -> float:
        return float(self._nbr_w[i].sum())

    def degrees(self, weighted: bool = True) -> np.ndarray:
        if weighted:
            return np.array([w.sum() for w in self._nbr_w])
        return np.array([len(a) for a in self._nbrs], dtype=float)

    def is_weighted(self) -> bool:
        return bool(np.any(self.weights != 1.0))

    def weight_map(self) -> dict[Edge, float]:
        return {e: float(w) for e, w in zip(self.edges, self.weights)}

    def adjacency(self, weighted: bool = True) -> np.ndarray:
        """Dense symmetric adjacency matrix (no self-loops)."""
        _check_dense(self.n)
        a = np.zeros((self.n, self.n))
        if self.edges:
            idx = np.array(self.edges)
            vals = self.weights if weighted else np.ones(self.num_edges)
            a[idx[:, 0], idx[:, 1]] = vals
            a[idx[:, 1], idx[:, 0]] = vals
        return a

    # -- derived graphs ------------------------------------------------
    def with_weights(self, weights) -> "Graph":
        """Same topology, new weights (mapping edge -> weight, or array in edge order)."""
        if isinstance(weights, Mapping):
            w = [weights[e] for e in self.edges]
        else:
            w = weights
        return Graph(self.n, self.edges, w, self.features, self.labels)

    def remove_edges(self, edges: Iterable[Sequence[int]]) -> "Graph":
        drop = {canonical(e) for e in edges}
        missing = drop.difference(self._index)
        if missing:
            raise KeyError(f"cannot remove missing edges {sorted(missing)}")
        keep = [k for k, e in enumerate(self.edges) if e not in drop]
        return Graph(
            self.n,
            [self.edges[k] for k in keep],
            self.weights[keep],
            self.features,
            self.labels,
        )

    def relabel(self, perm: Sequence[int]) -> "Graph":
        """Return the graph with node ``v`` renamed to ``perm[v]``."""
        perm = np.asarray(perm, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(self.n)):
            raise ValueError("perm must be a permutation of 0..n-1")
        edges = [(int(perm[i]), int(perm[j])) for i, j in self.edges]
        inv = np.argsort(perm)
        feats = None if self.features is None else self.features[inv]
        labs = None if self.labels is None else self.labels[inv]
        return Graph(self.n, edges, self.weights, feats, labs)

    def with_labels(self, labels) -> "Graph":
        return Graph(self.n, self.edges, self.weights, self.features, labels)

    def with_features(self, features) -> "Graph":
        return Graph(self.n, self.edges, self.weights, features, self.labels)

    # -- traversal -----------------------------------------------------
    def hop_distances(self, source: int, cutoff: int | None = None) -> dict[int, int]:
        """Breadth-first hop counts from ``source``, optionally truncated at ``cutoff``."""
        dist = {source: 0}
        queue = deque([source])
        while queue:
            u = queue.popleft()
            du = dist[u]
            if cutoff is not None and du >= cutoff:
                continue
            for v in self._nbrs[u]:
                v = int(v)
                if v not in dist:
                    dist[v] = du + 1
                    queue.append(v)
        return dist

    def components(self) -> list[list[int]]:
        seen = np.zeros(self.n, dtype=bool)
        comps = []
        for s in range(self.n):
            if not seen[s]:
                comp = sorted(self.hop_distances(s))
                seen[comp] = True
                comps.append(comp)
        return comps

    def is_connected(self) -> bool:
        return self.n <= 1 or len(self.hop_distances(0)) == self.n

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and self.edges == other.edges
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self):
        return hash((self.n, self.edges, self.weights.tobytes()))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.num_edges}, weighted={self.is_weighted()})"


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenpairs of a symmetric matrix, eigenvalues ascending, eigenvectors as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def rho(self) -> float:
        """Largest eigenvalue."""
        return float(self.eigenvalues[-1]) if self.eigenvalues.size else 0.0

    def apply(self, f) -> np.ndarray:
        """Matrix function ``U f(Lambda) U^T``."""
        u = self.eigenvectors
        return (u * f(self.eigenvalues)) @ u.T

    def reconstruct(self) -> np.ndarray:
        return self.apply(lambda lam: lam)


@dataclass(frozen=True)
class LabeledPartition:
    labels: np.ndarray
    train_mask: np.ndarray

    def __post_init__(self):
        if self.labels.shape != self.train_mask.shape:
            raise ValueError("labels and train_mask must have equal length")

    @property
    def test_mask(self) -> np.ndarray:
        return ~self.train_mask

    def missing_train_classes(self) -> list[int]:
        present = set(self.labels[self.train_mask].tolist())
        return sorted(set(self.labels.tolist()) - present)

    @classmethod
    def stratified(cls, labels, train_fraction: float, seed: int) -> "LabeledPartition":
        """Random split with at least one training node per class."""
        labels = np.asarray(labels, dtype=np.int64)
        rng = np.random.default_rng(seed)
        mask = np.zeros(labels.shape[0], dtype=bool)
        for c in np.unique(labels):
            members = np.flatnonzero(labels == c)
            k = max(1, int(round(train_fraction * members.size)))
            mask[rng.choice(members, size=k, replace=False)] = True
        return cls(labels, mask)


def _check_dense(n: int) -> None:
    if n > DENSE_CAP:
        raise ValueError(
            f"graph has {n} nodes, above the dense cap of {DENSE_CAP}; "
            "use the Chebyshev (matrix-free) path instead"
        )


def build_normalized_adjacency(g: Graph, self_loops: bool = True) -> np.ndarray:
    """``D^{-1/2} (A + I) D^{-1/2}`` with degrees taken from ``A + I``.

    With ``self_loops=False`` the plain ``D^{-1/2} A D^{-1/2}`` is returned
    (isolated nodes get a zero row).
    """
    a = g.adjacency()
    if self_loops:
        a = a + np.eye(g.n)
    deg = a.sum(axis=1)
    inv_sqrt = np.zeros_like(deg)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
    return inv_sqrt[:, None] * a * inv_sqrt[None, :]


def build_normalized_laplacian(g: Graph, self_loops: bool = True) -> np.ndarray:
    """``I - A_hat``.

    The no-self-loop variant follows Chung's convention: the diagonal entry
    of an isolated node is 0 rather than 1.
    """
    a_hat = build_normalized_adjacency(g, self_loops=self_loops)
    lap = np.eye(g.n) - a_hat
    if not self_loops:
        iso = g.degrees() == 0
        lap[iso, iso] = 0.0
    return lap


def eigendecompose(m, tol: float = 1e-10) -> SpectralDecomposition:
    """Full eigendecomposition of a dense symmetric matrix.

    Eigenvector signs are fixed so that the largest-magnitude entry of each
    column is positive, which makes the output deterministic.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    _check_dense(m.shape[0])
    if m.size and np.max(np.abs(m - m.T)) > tol:
        raise ValueError("matrix is not symmetric")
    vals, vecs = np.linalg.eigh((m + m.T) / 2.0)
    if vecs.size:
        pivot = np.argmax(np.abs(vecs), axis=0)
        signs = np.sign(vecs[pivot, np.arange(vecs.shape[1])])
        signs[signs == 0] = 1.0
        vecs = vecs * signs
    return SpectralDecomposition(vals, vecs)


def homophily_measure(g: Graph) -> float:
    """Mean over non-isolated nodes of the fraction of same-label neighbors."""
    if g.labels is None:
        raise ValueError("graph has no labels")
    ratios = []
    for i in range(g.n):
        nb = g.neighbors(i)
        if nb.size == 0:
            continue
        ratios.append(np.mean(g.labels[nb] == g.labels[i]))
    if not ratios:
        raise ValueError("homophily undefined: every node is isolated")
    return float(np.mean(ratios))


def common_neighbors(g: Graph, i: int, j: int) -> np.ndarray:
    return np.intersect1d(g.neighbors(i), g.neighbors(j), assume_unique=True)


def triangle_count(g: Graph, edge: Sequence[int]) -> int:
    """Number of triangles through ``edge`` (common neighbors of its endpoints)."""
    i, j = int(edge[0]), int(edge[1])
    if not g.has_edge(i, j):
        raise KeyError(f"no edge {canonical((i, j))}")
    return int(common_neighbors(g, i, j).size)


def clustering_coefficient(g: Graph, i: int) -> float:
    """Local clustering ``sum_j #(i,j) / (d_i (d_i - 1))``; 0 when ``d_i < 2``."""
    d = g.degree(i)
    if d < 2:
        return 0.0
    total = sum(triangle_count(g, (i, int(j))) for j in g.neighbors(i))
    return total / (d * (d - 1))


# -- generators --------------------------------------------------------------

def _labels_param(params: Mapping, n: int):
    labels = params.get("labels")
    if labels is None:
        return None
    labels = list(labels)
    if len(labels) != n:
        raise ValueError(f"expected {n} labels, got {len(labels)}")
    return labels


def _positive_int(params: Mapping, key: str, minimum: int = 1) -> int:
    try:
        v = params[key]
    except KeyError:
        raise ValueError(f"missing parameter {key!r}") from None
    if int(v) != v or v < minimum:
        raise ValueError(f"{key} must be an integer >= {minimum}")
    return int(v)


def _prob(params: Mapping, key: str) -> float:
    p = float(params[key])
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{key} must lie in [0, 1]")
    return p


def _sbm_edges(sizes, p_in, p_out, rng):
    blocks = np.repeat(np.arange(len(sizes)), sizes)
    n = blocks.size
    iu, ju = np.triu_indices(n, k=1)
    probs = np.where(blocks[iu] == blocks[ju], p_in, p_out)
    keep = rng.random(iu.size) < probs
    return n, list(zip(iu[keep].tolist(), ju[keep].tolist())), blocks


def generate(kind: str, params: Mapping | None = None, seed: int | None = 0) -> Graph:
    """Build a synthetic graph.

    Kinds and their parameters:

    * ``path``, ``cycle``, ``complete``: ``n``
    * ``star``: ``leaves``
    * ``complete_bipartite``: ``a``, ``b`` (labels default to the side)
    * ``double_star``: ``leaves`` per hub (hubs are nodes 0 and 1)
    * ``barbell``: ``clique`` size and ``bridge`` path length (edges)
    * ``gnp``: ``n``, ``p``
    * ``sbm``: ``sizes``, ``p_in``, ``p_out``; optional ``block_labels``
    * ``bipartite_blocks``: ``blocks`` complete bipartite ``K_{side,side}``
      blocks labelled by side, plus random same-label edges (``p_in``) and
      random edges between blocks (``p_link``)

    Every kind accepts an optional ``labels`` list. Generation is a pure
    function of ``(kind, params, seed)``.
    """
    params = dict(params or {})
    rng = np.random.default_rng(seed)
    if kind in ("path", "cycle", "complete", "gnp"):
        n = _positive_int(params, "n")
        if kind == "path":
            edges = [(i, i + 1) for i in range(n - 1)]
        elif kind == "cycle":
            if n < 3:
                raise ValueError("cycle needs n >= 3")
            edges = [(i, (i + 1) % n) for i in range(n)]
        elif kind == "complete":
            edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
        else:
            p = _prob(params, "p")
            iu, ju = np.triu_indices(n, k=1)
            keep = rng.random(iu.size) < p
            edges = list(zip(iu[keep].tolist(), ju[keep].tolist()))
        return Graph(n, edges, labels=_labels_param(params, n))
    if kind == "star":
        k = _positive_int(params, "leaves")
        return Graph(k + 1, [(0, i) for i in range(1, k + 1)], labels=_labels_param(params, k + 1))
    if kind == "complete_bipartite":
        a = _positive_int(params, "a")
        b = _positive_int(params, "b")
        edges = [(i, a + j) for i in range(a) for j in range(b)]
        labels = _labels_param(params, a + b) or [0] * a + [1] * b
        return Graph(a + b, edges, labels=labels)
    if kind == "double_star":
        k = _positive_int(params, "leaves", minimum=0)
        edges = [(0, 1)]
        edges += [(0, 2 + t) for t in range(k)]
        edges += [(1, 2 + k + t) for t in range(k)]
        return Graph(2 + 2 * k, edges, labels=_labels_param(params, 2 + 2 * k))
    if kind == "barbell":
        c = _positive_int(params, "clique", minimum=2)
        bridge = _positive_int(params, "bridge", minimum=1)
        edges = [(i, j) for i in range(c) for j in range(i + 1, c)]
        right = c + bridge - 1
        edges += [(i + right, j + right) for i in range(c) for j in range(i + 1, c)]
        chain = [c - 1] + list(range(c, right)) + [right]
        edges += list(zip(chain[:-1], chain[1:]))
        n = right + c
        return Graph(n, edges, labels=_labels_param(params, n))
    if kind == "sbm":
        sizes = [int(s) for s in params["sizes"]]
        if not sizes or min(sizes) < 1:
            raise ValueError("block sizes must be positive")
        n, edges, blocks = _sbm_edges(sizes, _prob(params, "p_in"), _prob(params, "p_out"), rng)
        block_labels = params.get("block_labels")
        if block_labels is not None:
            if len(block_labels) != len(sizes):
                raise ValueError("one label per block required")
            labels = np.asarray(block_labels)[blocks]
        else:
            labels = _labels_param(params, n)
            labels = blocks if labels is None else labels
        return Graph(n, edges, labels=labels)
    if kind == "bipartite_blocks":
        nb = _positive_int(params, "blocks")
        side = _positive_int(params, "side")
        p_in, p_link = _prob(params, "p_in"), _prob(params, "p_link")
        n = 2 * side * nb
        node = np.arange(n)
        block = node // (2 * side)
        labels = (node % (2 * side)) // side
        iu, ju = np.triu_indices(n, k=1)
        same_block = block[iu] == block[ju]
        same_label = labels[iu] == labels[ju]
        draw = rng.random(iu.size)
        keep = (same_block & ~same_label) | (same_label & (draw < p_in)) | (
            ~same_block & ~same_label & (draw < p_link))
        edges = list(zip(iu[keep].tolist(), ju[keep].tolist()))
        return Graph(n, edges, labels=labels)
    raise ValueError(f"unknown graph kind {kind!r}")


def random_connected_graph(n: int, p: float, rng: np.random.Generator, weights=None) -> Graph:
    """G(n, p) sample with a random spanning tree added so the result is connected.

    ``weights`` may be a ``(low, high)`` pair for uniform random weights.
    """
    perm = rng.permutation(n)
    edges = {canonical((int(perm[k]), int(perm[rng.integers(0, k)]))) for k in range(1, n)}
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    edges.update(zip(iu[keep].tolist(), ju[keep].tolist()))
    edges = sorted(edges)
    w = None
    if weights is not None:
        w = rng.uniform(weights[0], weights[1], size=len(edges))
    return Graph(n, edges, w)


def spectral_radius(m) -> float:
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvalsh((m + m.T) / 2.0))))
