"""Ollivier-Ricci curvature on graphs, curvature-reweighted Laplacians,
curvature-based edge dropping and tight graph framelet dynamics."""

from __future__ import annotations

from .cbed import CbedConfig, CbedReport, cbed_run, supporting_triangles
from .curvature import (
    CurvatureConfig,
    CurvatureMap,
    all_curvatures,
    edge_curvature,
    jost_lower_bound,
    normalize_curvatures,
    ricci_flow_step,
    triangle_upper_bound,
)
from .framelet import (
    FilterBank,
    FrameletCoefficients,
    FrameletSystem,
    build_chebyshev_framelets,
    build_exact_framelets,
    decompose,
    haar_filter_bank,
    reconstruct,
    verify_tightness,
)
from .graph import (
    Graph,
    LabeledPartition,
    SpectralDecomposition,
    build_normalized_adjacency,
    build_normalized_laplacian,
    eigendecompose,
    generate,
    homophily_measure,
)
from .reweight import ReweightedGraph, ZetaKind, build_curvature_laplacian, reweight_pipeline, zeta_het, zeta_hom
from .transport import ProbabilityMeasure, node_measure, wasserstein1_exact, wasserstein1_sinkhorn

__version__ = "0.1.0"
