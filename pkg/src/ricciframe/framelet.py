"""Undecimated tight framelet systems on graphs.

A filter bank ``(a, b_1, ..., b_L)`` satisfying ``a^2 + sum_r b_r^2 = 1`` on
``[0, pi]`` is applied to the spectrum of a normalized Laplacian at dyadic
scales. Level ``j = 1..J`` evaluates the symbols at ``xi_j = lam / 2**(m + j - 1)``,
so with the Haar pair ``a(xi) = cos(xi / 2)`` level one realizes
``cos(lam / 2**(m + 1))``; the default ``m = 2`` gives ``cos(lam / 8)``.

Bands::

    (0, J):  prod_{j=1..J} a(xi_j)
    (r, j):  b_r(xi_j) * prod_{i<j} a(xi_i)

and the squared symbols telescope to one, so ``sum_b W_b^T W_b = I``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import chebyshev as cheb

from .graph import Graph, SpectralDecomposition, build_normalized_laplacian

Symbol = Callable[[np.ndarray], np.ndarray]
BandId = tuple[int, int]


@dataclass(frozen=True)
class FilterBank:
    """Low-pass symbol and ``L`` high-pass symbols on ``[0, pi]``."""

    lowpass: Symbol
    highpass: tuple[Symbol, ...]
    name: str = "custom"
    check: bool = True

    def __post_init__(self):
        if not self.highpass:
            raise ValueError("at least one high-pass symbol is required")
        if self.check:
            err = self.partition_residual()
            if err > 1e-12:
                raise ValueError(f"symbols do not form a partition of unity (residual {err:.3g})")
            if abs(float(self.lowpass(np.zeros(1))[0]) - 1.0) > 1e-12:
                raise ValueError("low-pass symbol must equal 1 at the origin")

    @property
    def L(self) -> int:
        return len(self.highpass)

    def partition_residual(self, points: int = 1001) -> float:
        xi = np.linspace(0.0, np.pi, points)
        total = self.lowpass(xi) ** 2 + sum(b(xi) ** 2 for b in self.highpass)
        return float(np.max(np.abs(total - 1.0)))


def _haar_low(xi):
    return np.cos(np.asarray(xi, dtype=float) / 2.0)


def _haar_high(xi):
    return np.sin(np.asarray(xi, dtype=float) / 2.0)


def haar_filter_bank() -> FilterBank:
    return FilterBank(_haar_low, (_haar_high,), name="haar")


def default_scale(rho_bound: float) -> int:
    """Smallest ``m >= 0`` with ``rho_bound / 2**m <= pi``."""
    m = 0
    while rho_bound / 2.0**m > np.pi:
        m += 1
    return m


def band_ids(J: int, L: int) -> list[BandId]:
    return [(0, J)] + [(r, j) for r in range(1, L + 1) for j in range(1, J + 1)]


def _band_factors(band: BandId, J: int) -> list[tuple[int, int]]:
    """``(symbol index, level)`` factors whose product defines the band; index 0 is low-pass."""
    r, j = band
    if r == 0:
        return [(0, i) for i in range(1, J + 1)]
    return [(0, i) for i in range(1, j)] + [(r, j)]


def _resolve_scale(m, rho_bound: float) -> int:
    if m == "auto":
        return default_scale(rho_bound)
    m = int(m)
    if m < 0:
        raise ValueError("m must be non-negative")
    return m


@dataclass(frozen=True)
class FrameletSystem:
    """Ordered framelet bands with their ``n x n`` matrices.

    ``construction`` is ``"exact"`` or ``"chebyshev(<degree>)"``. Chebyshev
    systems also carry ``operator`` and per-band coefficient lists so bands
    can be applied without materializing a matrix.
    """

    band_ids: tuple[BandId, ...]
    matrices: tuple[np.ndarray, ...]
    J: int
    L: int
    m: int
    construction: str
    dilation: int = 2
    operator: np.ndarray | None = field(default=None, repr=False)
    rho_bound: float | None = None
    coefficients: tuple[tuple[np.ndarray, ...], ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.band_ids) != len(self.matrices):
            raise ValueError("one matrix per band required")

    @property
    def n(self) -> int:
        return self.matrices[0].shape[0]

    def __len__(self) -> int:
        return len(self.band_ids)

    def band(self, band_id: BandId) -> np.ndarray:
        return self.matrices[self.band_ids.index(tuple(band_id))]

    def apply(self, k: int, x: np.ndarray, matrix_free: bool = False) -> np.ndarray:
        """Band ``k`` applied to ``x``; ``matrix_free`` uses the Chebyshev recurrences."""
        if not matrix_free:
            return self.matrices[k] @ x
        if self.coefficients is None:
            raise ValueError("matrix-free application needs a Chebyshev system")
        out = np.asarray(x, dtype=float)
        for coef in self.coefficients[k]:
            out = chebyshev_apply(self.operator, coef, self.rho_bound, out)
        return out

    def with_band(self, k: int, matrix: np.ndarray) -> "FrameletSystem":
        mats = list(self.matrices)
        mats[k] = np.asarray(matrix, dtype=float)
        return FrameletSystem(self.band_ids, tuple(mats), self.J, self.L, self.m,
                              self.construction, self.dilation)


def build_exact_framelets(decomp: SpectralDecomposition, bank: FilterBank | None = None,
                          J: int = 1, m=2, tol: float = 1e-9) -> FrameletSystem:
    """Bands ``U f_b(Lambda) U^T`` from a full eigendecomposition."""
    bank = bank or haar_filter_bank()
    if J < 1:
        raise ValueError("J must be >= 1")
    lam = np.asarray(decomp.eigenvalues, dtype=float)
    if lam.size and lam.min() < -tol:
        raise ValueError("eigenvalues must be non-negative")
    lam = np.clip(lam, 0.0, None)
    m = _resolve_scale(m, float(lam.max()) if lam.size else 0.0)
    if lam.size and lam.max() / 2.0**m > np.pi + tol:
        raise ValueError(f"scaled spectrum leaves [0, pi] at m={m}; increase m")
    symbols = [bank.lowpass, *bank.highpass]
    ids = band_ids(J, bank.L)
    mats = []
    for band in ids:
        diag = np.ones_like(lam)
        for k, level in _band_factors(band, J):
            diag = diag * symbols[k](lam / 2.0 ** (m + level - 1))
        mats.append(decomp.apply(lambda _l, d=diag: d))
    return FrameletSystem(tuple(ids), tuple(mats), J, bank.L, m, "exact")


def chebyshev_coefficients(f: Symbol, degree: int, rho_bound: float) -> np.ndarray:
    """Interpolation coefficients of ``f`` at Chebyshev points of ``[0, rho_bound]``."""
    if degree < 0:
        raise ValueError("degree must be >= 0")
    return cheb.chebinterpolate(lambda x: f((x + 1.0) * rho_bound / 2.0), degree)


def chebyshev_apply(op, coef: np.ndarray, rho_bound: float, x: np.ndarray) -> np.ndarray:
    """``p(op) x`` for the Chebyshev series ``coef`` on ``[0, rho_bound]``.

    Uses the three-term recurrence on ``X = 2 op / rho_bound - I`` so ``op``
    may be any object supporting ``@`` (dense, sparse, linear operator).
    """
    x = np.asarray(x, dtype=float)
    shift = lambda v: (op @ v) * (2.0 / rho_bound) - v  # noqa: E731
    t_prev = x
    out = coef[0] * t_prev
    if coef.size == 1:
        return out
    t_cur = shift(x)
    out = out + coef[1] * t_cur
    for c in coef[2:]:
        t_prev, t_cur = t_cur, 2.0 * shift(t_cur) - t_prev
        out = out + c * t_cur
    return out


def build_chebyshev_framelets(lap_or_graph, bank: FilterBank | None = None, J: int = 1, m=2,
                              degree: int = 30, rho_bound: float = 2.0) -> FrameletSystem:
    """Bands as products of Chebyshev approximations of the dilated symbols.

    Each factor ``sym(lam / 2**(m + level - 1))`` is interpolated once on
    ``[0, rho_bound]``; a band applies its factors in sequence.
    """
    bank = bank or haar_filter_bank()
    if J < 1:
        raise ValueError("J must be >= 1")
    if rho_bound <= 0:
        raise ValueError("rho_bound must be positive")
    op = build_normalized_laplacian(lap_or_graph) if isinstance(lap_or_graph, Graph) else lap_or_graph
    n = op.shape[0]
    m = _resolve_scale(m, rho_bound)
    cache: dict[tuple[int, int], np.ndarray] = {}
    symbols = [bank.lowpass, *bank.highpass]
    ids = band_ids(J, bank.L)
    coefs = []
    for band in ids:
        per_band = []
        for key in _band_factors(band, J):
            if key not in cache:
                sym, scale = symbols[key[0]], 2.0 ** (m + key[1] - 1)
                cache[key] = chebyshev_coefficients(lambda lam, s=sym, c=scale: s(lam / c), degree, rho_bound)
            per_band.append(cache[key])
        coefs.append(tuple(per_band))
    eye = np.eye(n)
    mats = []
    for band_coefs in coefs:
        mat = eye
        for coef in band_coefs:
            mat = chebyshev_apply(op, coef, rho_bound, mat)
        mats.append((mat + mat.T) / 2.0)
    return FrameletSystem(tuple(ids), tuple(mats), J, bank.L, m, f"chebyshev({degree})",
                          operator=op, rho_bound=float(rho_bound), coefficients=tuple(coefs))


@dataclass(frozen=True)
class FrameletCoefficients:
    band_ids: tuple[BandId, ...]
    values: tuple[np.ndarray, ...]

    def __getitem__(self, band_id) -> np.ndarray:
        return self.values[self.band_ids.index(tuple(band_id))]

    def __len__(self) -> int:
        return len(self.values)


def _as_signal(system: FrameletSystem, h) -> tuple[np.ndarray, bool]:
    h = np.asarray(h, dtype=float)
    vec = h.ndim == 1
    if vec:
        h = h[:, None]
    if h.ndim != 2 or h.shape[0] != system.n:
        raise ValueError(f"signal must have {system.n} rows")
    return h, vec


def decompose(system: FrameletSystem, h) -> FrameletCoefficients:
    h, vec = _as_signal(system, h)
    vals = tuple((w @ h)[:, 0] if vec else w @ h for w in system.matrices)
    return FrameletCoefficients(system.band_ids, vals)


def reconstruct(system: FrameletSystem, coeffs: FrameletCoefficients) -> np.ndarray:
    if tuple(coeffs.band_ids) != tuple(system.band_ids):
        raise ValueError("coefficient bands do not match the system")
    return sum(w.T @ c for w, c in zip(system.matrices, coeffs.values))


def frame_operator(system: FrameletSystem) -> np.ndarray:
    """``sum_b W_b^T W_b``."""
    return sum(w.T @ w for w in system.matrices)


def verify_tightness(system: FrameletSystem) -> float:
    """``max |sum_b W_b^T W_b - I|`` entrywise."""
    return float(np.max(np.abs(frame_operator(system) - np.eye(system.n))))


def band_error(approx: FrameletSystem, exact: FrameletSystem) -> list[float]:
    """Per-band spectral-norm difference between two systems on the same graph."""
    if approx.band_ids != exact.band_ids:
        raise ValueError("systems have different bands")
    return [float(np.linalg.norm(a - e, 2)) for a, e in zip(approx.matrices, exact.matrices)]
