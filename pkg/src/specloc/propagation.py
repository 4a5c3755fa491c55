"""Weightless multi-layer message passing with per-layer over-smoothing metrics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist

from .errors import InapplicableCheckError, NumericOverflowError, ValidationError
from .graph import Graph, degree_fluctuation, normalized_laplacian
from .spectral import (
    DEAD_BAND_RTOL,
    SpectralBasis,
    band_energy_fractions,
    column_participation,
    eigendecompose,
)

OPERATORS = ("laplacian_complement", "gcn_selfloop")
NONLINEARITIES = ("none", "relu")
BIPARTITE_TOL = 1e-9


@dataclass(frozen=True)
class PropagationConfig:
    operator: str = "laplacian_complement"
    depth: int = 10
    nonlinearity: str = "none"
    record_every: int = 1

    def __post_init__(self):
        if self.operator not in OPERATORS:
            raise ValidationError(f"operator must be one of {OPERATORS}, got {self.operator!r}")
        if self.nonlinearity not in NONLINEARITIES:
            raise ValidationError(
                f"nonlinearity must be one of {NONLINEARITIES}, got {self.nonlinearity!r}"
            )
        if int(self.depth) != self.depth or self.depth < 0:
            raise ValidationError(f"depth must be a nonnegative integer, got {self.depth!r}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValidationError(f"record_every must be >= 1, got {self.record_every!r}")

    def recorded_layers(self) -> list[int]:
        layers = list(range(0, self.depth + 1, self.record_every))
        if layers[-1] != self.depth:
            layers.append(self.depth)
        return layers


@dataclass(frozen=True)
class LayerMetrics:
    """Snapshot of the signal after ``layer`` propagation steps.

    Band quantities refer to the eigenbasis of the original graph's normalized
    Laplacian; ``band_p`` is NaN for absent (dead) bands.
    """

    layer: int
    coeff_norms: np.ndarray
    band_p: np.ndarray
    dirichlet_energy: float
    feature_distance: float
    effective_fluctuation: float


@dataclass(frozen=True)
class PropagationResult:
    metrics: list
    final_signal: np.ndarray
    config: PropagationConfig
    basis: SpectralBasis
    rewired: bool = False
    bipartite: bool = False
    effective_fluctuations: tuple = ()
    warnings: tuple = ()


@dataclass(frozen=True)
class DecayReport:
    eigenvalues: np.ndarray
    max_residual: np.ndarray
    layers: tuple
    passed: bool
    warnings: tuple = field(default=())

    @property
    def worst_band(self) -> int:
        return int(np.argmax(self.max_residual))


def _operator_matrix(adjacency: np.ndarray, kind: str) -> np.ndarray:
    # isolated nodes (possible only on rewired graphs) map onto themselves
    a = np.asarray(adjacency, dtype=float)
    n = a.shape[0]
    if kind == "gcn_selfloop":
        a = a + np.eye(n)
    deg = a.sum(axis=1)
    isolated = deg <= 0
    safe = np.where(isolated, 1.0, deg)
    m = a / np.sqrt(np.outer(safe, safe))
    m[isolated, isolated] = 1.0
    return 0.5 * (m + m.T)


def build_operator(g: Graph, kind: str) -> np.ndarray:
    """Static propagation operator.

    ``laplacian_complement`` is ``I - L_sym`` (spectrum in [-1, 1]);
    ``gcn_selfloop`` is ``D~^{-1/2}(A + I)D~^{-1/2}`` (spectrum in (-1, 1]).
    """
    if kind not in OPERATORS:
        raise ValidationError(f"operator must be one of {OPERATORS}, got {kind!r}")
    # raises on isolated nodes for both kinds
    normalized_laplacian(g)
    return _operator_matrix(g.adjacency, kind)


def _stationary_scale(g: Graph, kind: str) -> np.ndarray:
    k = np.asarray(g.degrees, dtype=float)
    return np.sqrt(k + 1.0) if kind == "gcn_selfloop" else np.sqrt(k)


def dirichlet_energy(g: Graph, x: np.ndarray) -> float:
    """``trace(X^T L_sym X)`` as a sum over edges of squared degree-normalized differences."""
    u, v, w = g.edge_array
    s = 1.0 / np.sqrt(np.asarray(g.degrees))
    diff = x[u] * s[u, None] - x[v] * s[v, None]
    return float(np.sum(w[:, None] * diff * diff))


def feature_distance(x: np.ndarray, scale: np.ndarray) -> float:
    """Mean pairwise Euclidean distance between rows ``x_i / scale_i``.

    ``scale`` is the operator's stationary vector (square-root degrees), so the
    fully smoothed state has distance exactly zero.
    """
    if x.shape[0] < 2:
        return 0.0
    return float(np.mean(pdist(x / scale[:, None])))


def _metrics(layer, x, g, basis, scale, eff_dk) -> LayerMetrics:
    coeffs = basis.eigenvectors.T @ x
    norms = np.linalg.norm(coeffs, axis=1)
    total = float(np.linalg.norm(x))
    if total > 0:
        p = column_participation(basis.eigenvectors * norms)
        p[norms < DEAD_BAND_RTOL * total] = np.nan
    else:
        p = np.full(norms.size, np.nan)
    return LayerMetrics(
        layer=layer,
        coeff_norms=norms,
        band_p=p,
        dirichlet_energy=dirichlet_energy(g, x),
        feature_distance=feature_distance(x, scale),
        effective_fluctuation=eff_dk,
    )


def propagate(g: Graph, signal0, cfg: PropagationConfig, rewire=None,
              basis: SpectralBasis | None = None) -> PropagationResult:
    """Run ``X_{l+1} = f(P_l X_l)`` for ``cfg.depth`` layers.

    ``P_l`` is the static operator of ``g`` or, when ``rewire`` (a
    :class:`~specloc.rewiring.RewireConfig`) is given, the operator of the
    effective graph returned by ``rewire_step`` for that layer.
    """
    x = np.array(signal0, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] != g.n_nodes:
        raise ValidationError(f"signal must have {g.n_nodes} rows, got shape {np.shape(signal0)}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("initial signal contains non-finite values")
    static = build_operator(g, cfg.operator)
    if basis is None:
        basis = eigendecompose(normalized_laplacian(g))
    elif basis.n != g.n_nodes:
        raise ValidationError("basis size does not match graph")
    scale = _stationary_scale(g, cfg.operator)
    bipartite = bool(basis.eigenvalues[-1] >= 2.0 - BIPARTITE_TOL)
    warnings = []
    if bipartite and cfg.operator == "laplacian_complement":
        warnings.append("graph is bipartite: the lambda=2 band oscillates and never decays")

    if rewire is not None:
        from .rewiring import rewire_step

    base_dk = degree_fluctuation(g)
    recorded = set(cfg.recorded_layers())
    metrics = [_metrics(0, x, g, basis, scale, base_dk)]
    eff = []
    for layer in range(1, cfg.depth + 1):
        if rewire is None:
            op, dk = static, base_dk
        else:
            step = layer - 1 if rewire.per_layer else 0
            eg = rewire_step(g, rewire, step)
            op, dk = _operator_matrix(eg.adjacency, cfg.operator), degree_fluctuation(eg)
        eff.append(dk)
        with np.errstate(over="ignore", invalid="ignore"):
            x = op @ x
        if cfg.nonlinearity == "relu":
            x = np.maximum(x, 0.0)
        if not np.all(np.isfinite(x)):
            raise NumericOverflowError(layer)
        if layer in recorded:
            metrics.append(_metrics(layer, x, g, basis, scale, dk))
    return PropagationResult(
        metrics=metrics,
        final_signal=x,
        config=cfg,
        basis=basis,
        rewired=rewire is not None,
        bipartite=bipartite,
        effective_fluctuations=tuple(eff),
        warnings=tuple(warnings),
    )


def coefficient_decay_check(basis: SpectralBasis, run: PropagationResult,
                            rtol: float = 1e-8) -> DecayReport:
    """Compare per-band coefficient norms with ``|1 - lambda|^l * |c^(0)|``.

    A band passes at layer ``l`` when ``|observed - predicted| <= rtol * (1 + |predicted|)``.
    Only linear, static runs of ``laplacian_complement`` satisfy the law.
    """
    cfg = run.config
    if run.rewired:
        raise InapplicableCheckError("decay check does not apply to rewired runs")
    if cfg.nonlinearity != "none":
        raise InapplicableCheckError("decay check requires nonlinearity 'none'")
    if cfg.operator != "laplacian_complement":
        raise InapplicableCheckError("decay check requires the laplacian_complement operator")
    lam = np.asarray(basis.eigenvalues)
    if run.metrics[0].coeff_norms.size != lam.size:
        raise ValidationError("metrics and basis have different band counts")
    factor = np.abs(1.0 - lam)
    c0 = run.metrics[0].coeff_norms
    worst = np.zeros(lam.size)
    passed = True
    for m in run.metrics:
        predicted = factor ** m.layer * c0
        resid = np.abs(m.coeff_norms - predicted)
        worst = np.maximum(worst, resid)
        passed &= bool(np.all(resid <= rtol * (1.0 + np.abs(predicted))))
    return DecayReport(
        eigenvalues=lam,
        max_residual=worst,
        layers=tuple(m.layer for m in run.metrics),
        passed=passed,
        warnings=run.warnings,
    )


def energy_fraction(metrics: LayerMetrics, mask: np.ndarray) -> float:
    return float(np.sum(band_energy_fractions(metrics.coeff_norms)[mask]))
