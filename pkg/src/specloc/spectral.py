"""Eigendecomposition of graph operators and participation-degree metrics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, UndefinedRatioError, ValidationError

SYMMETRY_TOL = 1e-10
DEGENERACY_TOL = 1e-9
DEAD_BAND_RTOL = 1e-12
# relative slack when deciding which entries tie for the largest magnitude
_SIGN_TIE_RTOL = 1e-9


@dataclass(frozen=True)
class SpectralBasis:
    """Eigenpairs of a symmetric matrix, ascending; column ``i`` of
    ``eigenvectors`` pairs with ``eigenvalues[i]``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    @property
    def degenerate(self) -> np.ndarray:
        """Mask of eigenvalues sharing a cluster with a neighbour.

        Participation of an individual eigenvector in such a cluster depends on
        the (arbitrary) basis the solver picked for the eigenspace.
        """
        lam = self.eigenvalues
        close = np.abs(np.diff(lam)) <= DEGENERACY_TOL * max(1.0, float(np.max(np.abs(lam))))
        mask = np.zeros(lam.size, dtype=bool)
        mask[:-1] |= close
        mask[1:] |= close
        return mask

    def coefficients(self, signal) -> np.ndarray:
        """Graph Fourier coefficients ``V^T X`` (``N x d``)."""
        x = _as_signal(signal, self.n)
        return self.eigenvectors.T @ x

    def reconstruct(self) -> np.ndarray:
        v, lam = self.eigenvectors, self.eigenvalues
        return (v * lam) @ v.T


@dataclass(frozen=True)
class BandProjection:
    band_index: int
    eigenvalue: float
    coefficients: np.ndarray
    spatial_component: np.ndarray

    @property
    def coeff_norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))


@dataclass(frozen=True)
class BandParticipation:
    band_index: int
    eigenvalue: float
    coeff_norm: float
    p: float | None
    degenerate: bool = False

    @property
    def present(self) -> bool:
        return self.p is not None


def _sign_fix(vecs: np.ndarray) -> np.ndarray:
    mags = np.abs(vecs)
    peak = mags.max(axis=0)
    # first row whose magnitude ties (within rounding) with the column maximum
    idx = np.argmax(mags >= peak * (1.0 - _SIGN_TIE_RTOL), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def symmetric_eigh(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Dense symmetric eigensolve with the deterministic sign convention.

    Each eigenvector is flipped so its largest-magnitude entry is positive,
    with ties going to the lowest index.
    """
    try:
        lam, vecs = np.linalg.eigh(matrix)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"symmetric eigensolver failed: {exc}") from exc
    if not (np.all(np.isfinite(lam)) and np.all(np.isfinite(vecs))):
        raise NumericError("symmetric eigensolver returned non-finite values")
    return lam, _sign_fix(vecs)


def _check_symmetric(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValidationError(f"expected a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix contains non-finite entries")
    asym = float(np.max(np.abs(m - m.T)))
    if asym > SYMMETRY_TOL:
        raise ValidationError(f"matrix is not symmetric (max asymmetry {asym:.3g})")
    return m


def eigendecompose(laplacian) -> SpectralBasis:
    m = _check_symmetric(laplacian)
    lam, vecs = symmetric_eigh(m)
    lam.flags.writeable = False
    vecs.flags.writeable = False
    return SpectralBasis(lam, vecs)


def participation_ratio(vec) -> float:
    """``(sum v_i^2)^2 / (N * sum v_i^4)``: 1 for a uniform vector, 1/N for a one-hot."""
    v = np.asarray(vec, dtype=float).ravel()
    if v.size == 0:
        raise UndefinedRatioError("participation ratio of an empty vector")
    peak = np.max(np.abs(v))
    if not np.isfinite(peak):
        raise ValidationError("vector contains non-finite entries")
    if peak == 0:
        raise UndefinedRatioError("participation ratio of an all-zero vector is undefined")
    # rescaling by the peak keeps the fourth powers in range for any input scale
    u = v / peak
    sq = u * u
    return float(sq.sum() ** 2 / (v.size * np.sum(sq * sq)))


def column_participation(matrix) -> np.ndarray:
    """Participation ratio of every column; all-zero columns give NaN."""
    m = np.asarray(matrix, dtype=float)
    peak = np.max(np.abs(m), axis=0)
    safe = np.where(peak > 0, peak, 1.0)
    sq = (m / safe) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        p = sq.sum(axis=0) ** 2 / (m.shape[0] * np.sum(sq * sq, axis=0))
    p[peak == 0] = np.nan
    return p


def eigenvector_participation_spectrum(basis: SpectralBasis) -> list[tuple[float, float]]:
    p = column_participation(basis.eigenvectors)
    return [(float(lam), float(pi)) for lam, pi in zip(basis.eigenvalues, p)]


def _as_signal(signal, n) -> np.ndarray:
    x = np.asarray(signal, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] != n:
        raise ValidationError(f"signal must have {n} rows, got shape {np.shape(signal)}")
    return x


def band_project(basis: SpectralBasis, signal, band_index: int) -> BandProjection:
    """Project every feature channel onto one eigenvector.

    ``coefficients[c] = v^T x_c``; the per-node footprint of the band is
    ``v_i * ||coefficients||``, which for a single channel is just the band
    component ``v_i * c`` up to sign.
    """
    x = _as_signal(signal, basis.n)
    if not (0 <= band_index < basis.n):
        raise ValidationError(f"band_index {band_index} out of range [0, {basis.n})")
    v = basis.eigenvectors[:, band_index]
    coeffs = v @ x
    spatial = v * np.linalg.norm(coeffs)
    return BandProjection(band_index, float(basis.eigenvalues[band_index]), coeffs, spatial)


def band_participation(basis: SpectralBasis, signal) -> list[BandParticipation]:
    """Participation of each band's spatial footprint.

    Bands whose coefficient norm is below ``1e-12 * ||signal||_F`` are returned
    with ``p=None`` (absent) instead of a ratio computed from rounding noise.
    """
    x = _as_signal(signal, basis.n)
    total = float(np.linalg.norm(x))
    if total == 0:
        raise ValidationError("band participation of an all-zero signal is undefined")
    norms = np.linalg.norm(basis.eigenvectors.T @ x, axis=1)
    present = norms >= DEAD_BAND_RTOL * total
    p = column_participation(basis.eigenvectors * norms)
    degenerate = basis.degenerate
    return [
        BandParticipation(
            band_index=i,
            eigenvalue=float(basis.eigenvalues[i]),
            coeff_norm=float(norms[i]),
            p=float(p[i]) if present[i] else None,
            degenerate=bool(degenerate[i]),
        )
        for i in range(basis.n)
    ]


def band_energy_fractions(coeff_norms: np.ndarray) -> np.ndarray:
    """Share of ``||X||_F^2`` carried by each band."""
    e = np.asarray(coeff_norms, dtype=float) ** 2
    total = e.sum()
    return e / total if total > 0 else np.zeros_like(e)
