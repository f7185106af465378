"""Dirichlet energy, framelet feature propagation and energy-regime classification."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .framelet import FrameletSystem
from .graph import Graph, SpectralDecomposition

LFD = "LFD"
HFD = "HFD"
UNDETERMINED = "undetermined"

NONLINEARITIES = {
    "identity": lambda x: x,
    "relu": lambda x: np.maximum(x, 0.0),
}


@dataclass(frozen=True)
class PropagationConfig:
    """Fixed-weight framelet propagation.

    ``theta`` is the high-pass gain (a scalar for every high-pass band, or
    one value per high-pass band). ``low_gain`` scales the low-pass band.
    ``mixer`` is a symmetric ``c x c`` channel matrix, or one per band for
    the spatial rule; ``None`` means identity.
    """

    theta: float | Sequence[float] = 1.0
    low_gain: float = 1.0
    mixer: np.ndarray | Sequence[np.ndarray] | None = None
    tau: float = 1.0
    steps: int = 300
    mode: str = "spectral"
    nonlinearity: str = "identity"
    eps_low: float = 0.01
    eps_high: float = 0.01
    window: float = 0.1

    def __post_init__(self):
        if np.any(np.asarray(self.theta, dtype=float) < 0) or self.low_gain < 0:
            raise ValueError("band gains must be non-negative")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.mode not in ("spectral", "spatial"):
            raise ValueError("mode must be 'spectral' or 'spatial'")
        if self.nonlinearity not in NONLINEARITIES:
            raise ValueError(f"nonlinearity must be one of {sorted(NONLINEARITIES)}")
        for w in self._mixers():
            if w.ndim != 2 or w.shape[0] != w.shape[1] or not np.allclose(w, w.T, atol=1e-12):
                raise ValueError("channel mixer must be a symmetric square matrix")

    def _mixers(self) -> list[np.ndarray]:
        if self.mixer is None:
            return []
        if isinstance(self.mixer, np.ndarray) and self.mixer.ndim == 2:
            return [self.mixer]
        return [np.asarray(w, dtype=float) for w in self.mixer]

    def gains(self, system: FrameletSystem) -> np.ndarray:
        """One gain per band, low-pass first."""
        high = np.broadcast_to(np.asarray(self.theta, dtype=float), (len(system) - 1,))
        return np.concatenate([[self.low_gain], high])

    def mixer_for(self, band: int, c: int) -> np.ndarray:
        ms = self._mixers()
        if not ms:
            return np.eye(c)
        w = ms[0] if len(ms) == 1 else ms[band]
        if w.shape[0] != c:
            raise ValueError(f"mixer is {w.shape[0]}x{w.shape[0]}, signal has {c} channels")
        return w


@dataclass(frozen=True)
class EnergyTrace:
    """``E(H(t) / ||H(t)||)`` for ``t = 0..steps`` in the trace convention.

    With the trace convention the high-frequency limit is ``rho``; the
    half-trace values (``half``) approach ``rho / 2``.
    """

    values: np.ndarray
    regime: str
    rho: float
    config: PropagationConfig = field(repr=False, default=None)

    @property
    def half(self) -> np.ndarray:
        return self.values / 2.0

    @property
    def final(self) -> float:
        return float(self.values[-1])

    def to_csv(self) -> str:
        return "step,energy\n" + "".join(f"{t},{v!r}\n" for t, v in enumerate(self.values.tolist()))


def _as_matrix(h) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    return h[:, None] if h.ndim == 1 else h


def dirichlet_energy(lap, h) -> float:
    """``Tr(H^T L H)``."""
    h = _as_matrix(h)
    lap = np.asarray(lap, dtype=float)
    if lap.shape != (h.shape[0], h.shape[0]):
        raise ValueError("Laplacian and signal shapes do not conform")
    return float(np.sum(h * (lap @ h)))


def dirichlet_energy_sum(g: Graph, h) -> float:
    """``1/2 sum_ij a_ij ||h_i / sqrt(1 + d_i) - h_j / sqrt(1 + d_j)||^2``.

    Equals :func:`dirichlet_energy` with the self-loop normalized Laplacian.
    """
    h = _as_matrix(h)
    if h.shape[0] != g.n:
        raise ValueError("signal must have one row per node")
    scaled = h / np.sqrt(1.0 + g.degrees())[:, None]
    total = 0.0
    for (i, j), w in zip(g.edges, g.weights):
        total += w * float(np.sum((scaled[i] - scaled[j]) ** 2))
    # the ordered double sum visits each edge twice, cancelling the 1/2
    return total


def normalized_energy(lap, h) -> float:
    h = _as_matrix(h)
    norm = np.linalg.norm(h)
    if norm == 0:
        return math.nan
    return dirichlet_energy(lap, h / norm)


def _check_signal(system: FrameletSystem, h) -> np.ndarray:
    h = _as_matrix(h)
    if h.shape[0] != system.n:
        raise ValueError(f"signal must have {system.n} rows")
    return h


def spectral_step(system: FrameletSystem, cfg: PropagationConfig, h) -> np.ndarray:
    """``sigma(tau * sum_b theta_b W_b^T W_b H W_mix)``."""
    h = _check_signal(system, h)
    gains = cfg.gains(system)
    acc = sum(g * (w.T @ (w @ h)) for g, w in zip(gains, system.matrices))
    return NONLINEARITIES[cfg.nonlinearity](cfg.tau * acc @ cfg.mixer_for(0, h.shape[1]))


def spatial_step(system: FrameletSystem, a_hat, cfg: PropagationConfig, h) -> np.ndarray:
    """``sum_b W_b^T sigma(tau * theta_b * A_hat W_b H W_mix_b)``."""
    h = _check_signal(system, h)
    a_hat = np.asarray(a_hat, dtype=float)
    if a_hat.shape != (system.n, system.n):
        raise ValueError("adjacency shape does not match the system")
    sigma = NONLINEARITIES[cfg.nonlinearity]
    gains = cfg.gains(system)
    out = np.zeros_like(h)
    for k, (g, w) in enumerate(zip(gains, system.matrices)):
        out += w.T @ sigma(cfg.tau * g * (a_hat @ (w @ h)) @ cfg.mixer_for(k, h.shape[1]))
    return out


def closed_form_propagation(decomp: SpectralDecomposition, theta: float, h0, steps: int,
                            tau: float = 1.0, mixer=None, m: int = 2) -> np.ndarray:
    """Eigen-expansion of ``steps`` linear Haar spectral steps with ``J = 1``.

    ``H(steps) = tau^steps U [(s_i mu_k)^steps c_ik] Phi^T`` where
    ``s_i = cos^2(lam_i / 2**(m+1)) + theta sin^2(lam_i / 2**(m+1))``,
    ``(mu_k, Phi)`` are eigenpairs of the mixer and ``c = U^T H0 Phi``.
    """
    h0 = _as_matrix(h0)
    c = h0.shape[1]
    w = np.eye(c) if mixer is None else np.asarray(mixer, dtype=float)
    mu, phi = np.linalg.eigh(w)
    angle = np.asarray(decomp.eigenvalues, dtype=float) / 2.0 ** (m + 1)
    s = np.cos(angle) ** 2 + theta * np.sin(angle) ** 2
    u = decomp.eigenvectors
    coef = u.T @ h0 @ phi
    factor = (tau * np.outer(s, mu)) ** steps
    return u @ (factor * coef) @ phi.T


def classify_regime(values: np.ndarray, rho: float, cfg: PropagationConfig) -> str:
    """LFD if the final window stays below ``eps_low``; HFD if the half-trace
    energy stays within ``eps_high`` (relative) of ``rho / 2``."""
    steps = values.size - 1
    width = max(1, math.ceil(cfg.window * steps))
    tail = values[-width:]
    if np.any(np.isnan(tail)):
        return UNDETERMINED
    if np.max(tail) < cfg.eps_low:
        return LFD
    if rho > 0 and np.max(np.abs(tail / 2.0 - rho / 2.0)) <= cfg.eps_high * rho / 2.0:
        return HFD
    return UNDETERMINED


def propagate(lap, system: FrameletSystem, cfg: PropagationConfig, h0) -> EnergyTrace:
    """Iterate the configured step and record the normalized energy at each step.

    ``H`` is rescaled to unit Frobenius norm after each step; the recorded
    quantity does not depend on the scale. Spatial mode uses ``I - lap`` as
    the aggregation matrix.
    """
    lap = np.asarray(lap, dtype=float)
    h = _check_signal(system, h0)
    if not np.any(h):
        raise ValueError("initial signal is zero")
    a_hat = np.eye(lap.shape[0]) - lap
    rho = float(np.max(np.linalg.eigvalsh((lap + lap.T) / 2.0))) if lap.size else 0.0
    values = np.full(cfg.steps + 1, math.nan)
    h = h / np.linalg.norm(h)
    values[0] = dirichlet_energy(lap, h)
    for t in range(1, cfg.steps + 1):
        if cfg.mode == "spectral":
            h = spectral_step(system, cfg, h)
        else:
            h = spatial_step(system, a_hat, cfg, h)
        norm = np.linalg.norm(h)
        if norm == 0 or not np.isfinite(norm):
            break
        h = h / norm
        values[t] = dirichlet_energy(lap, h)
    return EnergyTrace(values, classify_regime(values, rho, cfg), rho, cfg)


def generic_initial_signal(decomp: SpectralDecomposition, channels: int, seed: int,
                           floor: float = 1e-6, tol: float = 1e-9, max_draws: int = 100) -> np.ndarray:
    """Seeded Gaussian signal with a non-negligible component in both the
    lowest and the highest eigenspace; redrawn otherwise."""
    lam = decomp.eigenvalues
    u = decomp.eigenvectors
    low = u[:, lam <= lam[0] + tol]
    high = u[:, lam >= lam[-1] - tol]
    rng = np.random.default_rng(seed)
    n = lam.size
    for _ in range(max_draws):
        h = rng.standard_normal((n, channels))
        if np.linalg.norm(low.T @ h) >= floor and np.linalg.norm(high.T @ h) >= floor:
            return h
    raise RuntimeError("could not draw a generic initial signal")


# -- label-propagation experiment --------------------------------------------

VARIANTS = ("plain", "hom", "het", "het_cbed")


@dataclass(frozen=True)
class ExperimentConfig:
    """Fixed-weight label propagation on a variant's framelet system.

    ``theta="auto"`` picks the low-pass gain regime from the training labels:
    ``theta_low`` (smoothing) when the edges among training nodes are mostly
    same-label, ``theta_high`` (sharpening) otherwise. The rule sees only
    training labels and is shared by all variants.
    """

    k: int = 4
    theta: float | str = "auto"
    theta_low: float = 0.5
    theta_high: float = 2.0
    scale: int | str = "auto"
    curvature: "CurvatureConfig" = None
    cbed_target: float = 0.7
    cbed_iterations: int = 100
    cbed_cuts: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.theta != "auto" and float(self.theta) < 0:
            raise ValueError("theta must be non-negative or 'auto'")


def train_homophily(g: Graph, labels: np.ndarray, train_mask: np.ndarray) -> float:
    """Fraction of same-label edges among edges joining two training nodes (nan if none)."""
    hits = [labels[i] == labels[j] for i, j in g.edges if train_mask[i] and train_mask[j]]
    return float(np.mean(hits)) if hits else math.nan


def variant_laplacian(g: Graph, variant: str, cfg: ExperimentConfig, seed: int = 0) -> np.ndarray:
    from .cbed import CbedConfig, cbed_run
    from .curvature import CurvatureConfig
    from .graph import build_normalized_laplacian
    from .reweight import reweight_pipeline

    ccfg = cfg.curvature or CurvatureConfig()
    if variant == "plain":
        return build_normalized_laplacian(g)
    if variant == "hom":
        return reweight_pipeline(g, ccfg, "hom").laplacian
    if variant == "het":
        return reweight_pipeline(g, ccfg, "het").laplacian
    if variant == "het_cbed":
        pruned, _ = cbed_run(g, CbedConfig(cfg.cbed_iterations, cfg.cbed_target, cfg.cbed_cuts,
                                           seed, curvature=ccfg))
        return reweight_pipeline(pruned, ccfg, "het").laplacian
    raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


def label_propagation_experiment(g: Graph, partition, variant: str,
                                 cfg: ExperimentConfig = ExperimentConfig(), seed: int = 0) -> float:
    """Test accuracy of ``k`` spectral framelet steps from one-hot training labels."""
    from .framelet import build_exact_framelets
    from .graph import eigendecompose

    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    labels = np.asarray(partition.labels)
    train = np.asarray(partition.train_mask, dtype=bool)
    if labels.shape[0] != g.n:
        raise ValueError("partition does not match the graph")
    missing = partition.missing_train_classes()
    if missing:
        raise ValueError(f"classes without training nodes: {missing}")
    test = ~train
    if not test.any():
        raise ValueError("no test nodes")
    classes = np.unique(labels)
    if classes.size == 1:
        return 1.0
    theta = cfg.theta
    if theta == "auto":
        h = train_homophily(g, labels, train)
        theta = cfg.theta_low if (math.isnan(h) or h >= 0.5) else cfg.theta_high
    lap = variant_laplacian(g, variant, cfg, seed)
    system = build_exact_framelets(eigendecompose(lap), J=1, m=cfg.scale)
    pcfg = PropagationConfig(theta=float(theta), steps=cfg.k)
    col = np.searchsorted(classes, labels)
    h = np.zeros((g.n, classes.size))
    h[train, col[train]] = 1.0
    for _ in range(cfg.k):
        h = spectral_step(system, pcfg, h)
    pred = np.argmax(h, axis=1)
    return float(np.mean(pred[test] == col[test]))
