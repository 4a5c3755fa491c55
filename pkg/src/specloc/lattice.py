"""Disordered lattices: Anderson tight-binding chains and scalar mass-spring networks.

Vibration modes of a spring lattice solve ``H e = omega^2 e`` with ``H`` the
dynamical matrix (unit masses). The participation ratio, density of states and
localization-length estimators here are shared with the graph side of the
package: a spring network with unit stiffness has ``H`` equal to the
combinatorial Laplacian of its bond graph.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._rng import check_seed, rng_for, stream_id
from .errors import ConstructionError, InsufficientSupportError, ValidationError
from .spectral import _check_symmetric, column_participation, symmetric_eigh

PSD_TOL = 1e-8
SUPPORT_RTOL = 1e-12
EXTENDED_SLOPE = -1e-6
MIN_SUPPORT = 8

_ONSITE_STREAM = stream_id("anderson.onsite")
_STIFFNESS_STREAM = stream_id("spring.stiffness")


@dataclass(frozen=True)
class AndersonChain:
    """1D tight-binding chain with on-site energies uniform in ``[-W/2, W/2]``."""

    n_sites: int
    disorder_w: float = 0.0
    hopping: float = 1.0
    boundary: str = "open"
    seed: int = 0

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 2:
            raise ValidationError(f"n_sites must be an integer >= 2, got {self.n_sites!r}")
        if self.boundary not in ("open", "periodic"):
            raise ValidationError(f"boundary must be 'open' or 'periodic', got {self.boundary!r}")
        if self.boundary == "periodic" and self.n_sites < 3:
            raise ValidationError("periodic chains need at least 3 sites")
        if not math.isfinite(self.disorder_w) or self.disorder_w < 0:
            raise ValidationError(f"disorder_w must be >= 0, got {self.disorder_w!r}")
        if not math.isfinite(self.hopping):
            raise ValidationError("hopping must be finite")
        object.__setattr__(self, "seed", check_seed(self.seed))

    @property
    def onsite(self) -> np.ndarray:
        rng = rng_for(self.seed, _ONSITE_STREAM)
        half = self.disorder_w / 2.0
        return rng.uniform(-half, half, self.n_sites)

    def positions(self) -> np.ndarray:
        return np.arange(self.n_sites, dtype=float)


@dataclass(frozen=True)
class SpringLattice:
    """Scalar harmonic network on a chain (``dimension=1``) or square grid (``2``).

    ``sites`` is the count per side. Bond stiffnesses are ``1 +/- disorder_eps``
    with equal odds (``bimodal``) or uniform on ``[1 - eps, 1 + eps]``.
    """

    dimension: int
    sites: int
    disorder_eps: float = 0.0
    distribution: str = "bimodal"
    boundary: str = "periodic"
    seed: int = 0

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValidationError(f"dimension must be 1 or 2, got {self.dimension!r}")
        if int(self.sites) != self.sites or self.sites < 2:
            raise ValidationError(f"sites must be an integer >= 2, got {self.sites!r}")
        if self.boundary not in ("open", "periodic"):
            raise ValidationError(f"boundary must be 'open' or 'periodic', got {self.boundary!r}")
        if self.boundary == "periodic" and self.sites < 3:
            raise ValidationError("periodic lattices need at least 3 sites per side")
        if not (0.0 <= self.disorder_eps < 1.0):
            raise ValidationError(f"disorder_eps must lie in [0, 1), got {self.disorder_eps!r}")
        if self.distribution not in ("bimodal", "uniform"):
            raise ValidationError(
                f"distribution must be 'bimodal' or 'uniform', got {self.distribution!r}"
            )
        object.__setattr__(self, "seed", check_seed(self.seed))

    @property
    def n_sites(self) -> int:
        return self.sites ** self.dimension

    def bonds(self) -> np.ndarray:
        """``(n_bonds, 2)`` site pairs in a fixed order."""
        L = self.sites
        wrap = self.boundary == "periodic"
        pairs = []
        if self.dimension == 1:
            pairs = [(i, i + 1) for i in range(L - 1)]
            if wrap:
                pairs.append((L - 1, 0))
        else:
            for r in range(L):
                for c in range(L):
                    i = r * L + c
                    if c + 1 < L:
                        pairs.append((i, i + 1))
                    elif wrap:
                        pairs.append((i, r * L))
                    if r + 1 < L:
                        pairs.append((i, i + L))
                    elif wrap:
                        pairs.append((i, c))
        return np.array(pairs, dtype=np.int64)

    def stiffness(self) -> np.ndarray:
        n_bonds = len(self.bonds())
        eps = self.disorder_eps
        rng = rng_for(self.seed, _STIFFNESS_STREAM)
        if self.distribution == "bimodal":
            signs = np.where(rng.random(n_bonds) < 0.5, -1.0, 1.0)
            return 1.0 + eps * signs
        return rng.uniform(1.0 - eps, 1.0 + eps, n_bonds)

    def positions(self) -> np.ndarray:
        if self.dimension == 1:
            return np.arange(self.sites, dtype=float)
        r, c = np.divmod(np.arange(self.n_sites), self.sites)
        return np.column_stack([r, c]).astype(float)


@dataclass(frozen=True)
class VibrationModes:
    eigenvalues: np.ndarray
    frequencies: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class DensityOfStates:
    edges: np.ndarray
    density: np.ndarray

    @property
    def integral(self) -> float:
        return float(np.sum(self.density * np.diff(self.edges)))


@dataclass(frozen=True)
class LocalizationFit:
    disorder_values: tuple
    xi_values: tuple
    gamma: float
    fit_r2: float
    intercept: float = field(default=0.0)

    def to_dict(self) -> dict:
        return {
            "disorder_values": list(self.disorder_values),
            "xi_values": list(self.xi_values),
            "gamma": self.gamma,
            "fit_r2": self.fit_r2,
            "intercept": self.intercept,
        }


def anderson_hamiltonian(chain: AndersonChain) -> np.ndarray:
    n, t = chain.n_sites, chain.hopping
    h = np.diag(chain.onsite)
    idx = np.arange(n - 1)
    h[idx, idx + 1] = t
    h[idx + 1, idx] = t
    if chain.boundary == "periodic":
        h[0, n - 1] = h[n - 1, 0] = t
    return h


def spring_dynamical_matrix(lat: SpringLattice) -> np.ndarray:
    """``H_ii = sum_j kappa_ij``, ``H_ij = -kappa_ij``; rows sum to zero."""
    n = lat.n_sites
    bonds = lat.bonds()
    kappa = lat.stiffness()
    if np.any(kappa <= 0):
        raise ConstructionError("non-positive spring constant")
    h = np.zeros((n, n))
    i, j = bonds[:, 0], bonds[:, 1]
    np.add.at(h, (i, j), -kappa)
    np.add.at(h, (j, i), -kappa)
    np.add.at(h, (i, i), kappa)
    np.add.at(h, (j, j), kappa)
    return h


def vibration_modes(matrix) -> VibrationModes:
    """Eigenmodes of a PSD dynamical matrix; ``omega = sqrt(max(eigenvalue, 0))``.

    Raises :class:`ConstructionError` if an eigenvalue is below ``-1e-8``.
    """
    m = _check_symmetric(matrix)
    lam, vecs = symmetric_eigh(m)
    if lam[0] < -PSD_TOL:
        raise ConstructionError(f"dynamical matrix is not PSD (min eigenvalue {lam[0]:.3g})")
    return VibrationModes(lam, np.sqrt(np.clip(lam, 0.0, None)), vecs)


def participation_spectrum(modes: VibrationModes) -> list[tuple[float, float]]:
    p = column_participation(modes.eigenvectors)
    return [(float(w), float(pi)) for w, pi in zip(modes.frequencies, p)]


def density_of_states(frequencies, bins: int, lower: float = 0.0) -> DensityOfStates:
    """Histogram of frequencies normalized to unit integral over ``[lower, max]``."""
    f = np.asarray(frequencies, dtype=float).ravel()
    if f.size == 0:
        raise ValidationError("density of states needs at least one frequency")
    if int(bins) != bins or bins < 1:
        raise ValidationError(f"bins must be a positive integer, got {bins!r}")
    if not np.all(np.isfinite(f)):
        raise ValidationError("frequencies must be finite")
    upper = float(f.max())
    lower = float(min(lower, f.min()))
    if upper <= lower:
        upper = lower + 1.0
    density, edges = np.histogram(f, bins=int(bins), range=(lower, upper), density=True)
    return DensityOfStates(edges, density)


def localization_length(mode_vector, site_positions=None) -> float:
    """Decay length from a least-squares fit of ``ln|e_i|`` against distance to the peak.

    Returns ``math.inf`` for extended modes: when the fitted slope is
    ``>= -1e-6``, or when the decay length exceeds the span of the fitted
    sites (no decay is resolved inside the sample).
    """
    e = np.abs(np.asarray(mode_vector, dtype=float).ravel())
    if site_positions is None:
        x = np.arange(e.size, dtype=float)
    else:
        x = np.asarray(site_positions, dtype=float)
        if x.ndim != 1 or x.size != e.size:
            raise ValidationError("localization_length needs one 1D position per site")
    peak = int(np.argmax(e))
    if e[peak] == 0 or not np.isfinite(e[peak]):
        raise ValidationError("mode has no finite amplitude peak")
    usable = e > SUPPORT_RTOL * e[peak]
    if np.count_nonzero(usable) < MIN_SUPPORT:
        raise InsufficientSupportError(
            f"only {np.count_nonzero(usable)} sites above the amplitude floor; need {MIN_SUPPORT}"
        )
    dist = np.abs(x[usable] - x[peak])
    logs = np.log(e[usable])
    if np.ptp(dist) == 0:
        raise InsufficientSupportError("all usable sites are equidistant from the peak")
    slope = np.polyfit(dist, logs, 1)[0]
    if slope >= EXTENDED_SLOPE:
        return math.inf
    xi = -1.0 / slope
    if xi > np.ptp(dist):
        return math.inf
    return float(xi)


def fit_gamma(sweep) -> LocalizationFit:
    """Fit ``xi ~ disorder^(-gamma)`` by linear regression in log-log space."""
    pts = [(float(d), float(x)) for d, x in sweep]
    if len(pts) < 3:
        raise ValidationError(f"fit_gamma needs at least 3 disorder values, got {len(pts)}")
    for d, x in pts:
        if not math.isfinite(x):
            raise ValidationError(f"unbounded localization length at disorder {d:g}: "
                                  "the sweep left the localized regime")
        if d <= 0 or x <= 0:
            raise ValidationError(f"disorder and xi must be positive, got ({d:g}, {x:g})")
    d = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    slope, intercept = np.polyfit(d, y, 1)
    resid = y - (slope * d + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return LocalizationFit(
        disorder_values=tuple(p[0] for p in pts),
        xi_values=tuple(p[1] for p in pts),
        gamma=float(-slope),
        fit_r2=r2,
        intercept=float(intercept),
    )


# ------------------------------------------------------------------ ensembles


def mode_localization_lengths(modes: VibrationModes, positions) -> np.ndarray:
    """``xi`` for every mode of a 1D system; NaN where the estimator has no support."""
    out = np.empty(modes.eigenvalues.size)
    for i in range(out.size):
        try:
            out[i] = localization_length(modes.eigenvectors[:, i], positions)
        except InsufficientSupportError:
            out[i] = np.nan
    return out


def anderson_modes(chain: AndersonChain) -> VibrationModes:
    """Eigenstates of the chain; ``eigenvalues`` are energies, ``frequencies`` unused copies."""
    h = anderson_hamiltonian(chain)
    lam, vecs = symmetric_eigh(h)
    return VibrationModes(lam, lam.copy(), vecs)


def band_center_xi(chain: AndersonChain, energy: float = 0.0) -> float:
    modes = anderson_modes(chain)
    i = int(np.argmin(np.abs(modes.eigenvalues - energy)))
    return localization_length(modes.eigenvectors[:, i], chain.positions())


def ensemble_map(fn, items, max_workers: int = 1) -> list:
    """Order-preserving map, threaded when ``max_workers > 1``."""
    items = list(items)
    if max_workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def anderson_xi_sweep(w_values, n_sites: int, seeds, energy: float = 0.0,
                      hopping: float = 1.0, boundary: str = "open",
                      max_workers: int = 1) -> list[tuple[float, float]]:
    """Median band-centre localization length per disorder strength."""
    seeds = list(seeds)
    out = []
    for w in w_values:
        chains = [AndersonChain(n_sites, float(w), hopping, boundary, s) for s in seeds]
        xis = ensemble_map(lambda c: band_center_xi(c, energy), chains, max_workers)
        out.append((float(w), float(np.median(xis))))
    return out
