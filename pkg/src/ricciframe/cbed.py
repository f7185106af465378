"""Curvature-based edge dropping: destroy triangles around the most curved edge."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .curvature import CurvatureConfig, curvatures_for
from .graph import Edge, Graph, canonical, common_neighbors

TARGET = "target"
ITERATION_CAP = "iteration_cap"


@dataclass(frozen=True)
class CbedConfig:
    max_iterations: int = 10
    target_kappa_upper: float = 0.7
    cuts_per_iteration: int = 1
    seed: int = 0
    connectivity_guard: bool = False
    curvature: CurvatureConfig = field(default_factory=CurvatureConfig)
    local_refresh: bool = True

    def __post_init__(self):
        if self.max_iterations < 1 or self.cuts_per_iteration < 1:
            raise ValueError("max_iterations and cuts_per_iteration must be positive")
        if self.target_kappa_upper > 1:
            raise ValueError("target_kappa_upper must be <= 1")


@dataclass
class CbedReport:
    iterations: int = 0
    removed: list[Edge] = field(default_factory=list)
    kappa_max: list[float] = field(default_factory=list)
    terminated_by: str = ITERATION_CAP
    note: str | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["removed"] = [list(e) for e in self.removed]
        d["kappa_max"] = [v if math.isfinite(v) else None for v in self.kappa_max]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def supporting_triangles(g: Graph, edge: Sequence[int]) -> list[int]:
    """Third vertices of the triangles containing ``edge``."""
    i, j = canonical(edge)
    if not g.has_edge(i, j):
        raise KeyError(f"no edge {(i, j)}")
    return common_neighbors(g, i, j).tolist()


def _select_max(kappa: dict[Edge, float]) -> tuple[Edge, float]:
    top = max(kappa.values())
    # ties within rounding go to the lexicographically smallest edge
    edge = min(e for e, v in kappa.items() if v >= top - 1e-12)
    return edge, top


def _still_connected(g: Graph, edge: Edge) -> bool:
    i, j = edge
    return j in g.remove_edges([edge]).hop_distances(i)


def _affected_edges(g: Graph, removed: Sequence[Edge]) -> list[Edge]:
    """Edges of ``g`` with an endpoint within two hops of a removed edge's endpoint.

    Hops are measured in ``g``, the graph before the removals. Curvature of
    every other edge is unchanged: its measures are untouched and the
    distances it uses (at most three hops) cannot route through the removed edges.
    """
    near: set[int] = set()
    for e in removed:
        for v in e:
            near.update(g.hop_distances(v, cutoff=2))
    return [e for e in g.edges if e[0] in near or e[1] in near]


def cbed_run(g: Graph, cfg: CbedConfig = CbedConfig()) -> tuple[Graph, CbedReport]:
    """Drop edges until the maximal curvature is at most the target or the iteration cap is hit.

    Each iteration takes the maximal-curvature edge (ties: smallest edge) and
    makes up to ``cuts_per_iteration`` cuts, each removing one of the two
    other edges of a uniformly chosen supporting triangle. Once no triangle
    is left the iteration ends early. An edge with no triangle at the start
    of the iteration is removed itself.
    """
    if g.num_edges == 0:
        raise ValueError("graph has no edges")
    rng = np.random.default_rng(cfg.seed)
    report = CbedReport()
    kappa = dict(zip(g.edges, curvatures_for(g, g.edges, cfg.curvature)))
    local = cfg.local_refresh and not g.is_weighted()

    for _ in range(cfg.max_iterations):
        if not kappa:
            break
        target, top = _select_max(kappa)
        report.kappa_max.append(float(top))
        if top <= cfg.target_kappa_upper:
            report.terminated_by = TARGET
            return g, report

        before = g
        removed: list[Edge] = []
        if not supporting_triangles(g, target):
            if cfg.connectivity_guard and not _still_connected(g, target):
                report.terminated_by = ITERATION_CAP
                report.note = f"connectivity guard: removing {target} would disconnect the graph"
                return g, report
            removed.append(target)
            g = g.remove_edges([target])
        else:
            i, j = target
            for _cut in range(cfg.cuts_per_iteration):
                thirds = supporting_triangles(g, target)
                if not thirds:
                    break
                k = thirds[int(rng.integers(len(thirds)))]
                victim = canonical((i, k)) if rng.integers(2) == 0 else canonical((j, k))
                removed.append(victim)
                g = g.remove_edges([victim])

        report.iterations += 1
        report.removed.extend(removed)
        for e in removed:
            kappa.pop(e)
        stale = _affected_edges(before, removed) if local else list(g.edges)
        stale = [e for e in stale if e in kappa]
        if stale:
            kappa.update(zip(stale, curvatures_for(g, stale, cfg.curvature)))

    top = _select_max(kappa)[1] if kappa else -math.inf
    report.kappa_max.append(float(top))
    report.terminated_by = TARGET if top <= cfg.target_kappa_upper else ITERATION_CAP
    return g, report
