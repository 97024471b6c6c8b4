"""Kernel density estimation and the truncated-Gaussian observed-density family."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import ndtr

from . import _kernels
from ._kernels import CUT, _POW2
from .errors import DegenerateDimension, DimensionCapExceeded, DimensionMismatch

__all__ = [
    "MAX_KDE_DIMS",
    "GaussianKde",
    "ObservedDensity",
    "FixedNoise",
    "AffineNoise",
    "NoiseModel",
    "silverman_bandwidth",
    "scott_bandwidth",
    "resolve_bandwidth",
    "kde_fit",
    "kde_eval",
    "gaussian_profile_eval",
    "truncnorm_normalizer_1d",
]

# KDE quality degrades quickly with data-space dimension; refuse beyond this.
MAX_KDE_DIMS = 4

BandwidthRule = Union[str, Sequence[float], np.ndarray]


def silverman_bandwidth(points: np.ndarray) -> np.ndarray:
    """Per-dimension Silverman bandwidths h_d = sd_d * (4 / ((m+2) n))^(1/(m+4))."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n, m = pts.shape
    if n < 2:
        raise ValueError("bandwidth selection needs at least two points")
    sd = pts.std(axis=0, ddof=1)
    for d in range(m):
        if sd[d] <= 0.0:
            raise DegenerateDimension(d)
    return sd * (4.0 / ((m + 2) * n)) ** (1.0 / (m + 4))


def scott_bandwidth(points: np.ndarray) -> np.ndarray:
    """Per-dimension Scott bandwidths h_d = sd_d * n^(-1/(m+4))."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n, m = pts.shape
    if n < 2:
        raise ValueError("bandwidth selection needs at least two points")
    sd = pts.std(axis=0, ddof=1)
    for d in range(m):
        if sd[d] <= 0.0:
            raise DegenerateDimension(d)
    return sd * float(n) ** (-1.0 / (m + 4))


def resolve_bandwidth(points: np.ndarray, rule: BandwidthRule) -> np.ndarray:
    if isinstance(rule, str):
        if rule == "silverman":
            return silverman_bandwidth(points)
        if rule == "scott":
            return scott_bandwidth(points)
        raise ValueError(f"unknown bandwidth rule {rule!r}")
    h = np.asarray(rule, dtype=np.float64).ravel()
    m = np.atleast_2d(points).shape[1]
    if h.size != m:
        raise DimensionMismatch(f"fixed bandwidth has {h.size} entries for {m} dims")
    if np.any(h <= 0) or not np.all(np.isfinite(h)):
        raise ValueError("fixed bandwidths must be positive and finite")
    return h


@dataclass(frozen=True)
class GaussianKde:
    """Gaussian product-kernel density estimate with diagonal bandwidths.

    Points are stored sorted along the first dimension so evaluations can be
    windowed.  Instances are immutable and evaluation is thread-safe.
    """

    points: np.ndarray            # (n, m), sorted by column 0, read-only
    bandwidth: np.ndarray         # (m,)
    order: np.ndarray = field(repr=False, default=None)  # argsort of the fit input

    # Incremented on every fit; tests use it to check fit reuse.
    fit_count = 0

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dims(self) -> int:
        return self.points.shape[1]

    @property
    def _norm(self) -> float:
        return float(self.n * np.prod(self.bandwidth) * (2.0 * math.pi) ** (self.dims / 2.0))

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Density at query points (nq, m) or a single m-vector."""
        q = np.asarray(x, dtype=np.float64)
        single = q.ndim <= 1
        q = np.atleast_2d(q)
        if q.shape[1] != self.dims:
            raise DimensionMismatch(f"queries have {q.shape[1]} dims, KDE has {self.dims}")
        if not np.all(np.isfinite(q)):
            raise ValueError("query points must be finite")
        invh = 1.0 / self.bandwidth
        if self.dims == 1:
            sums = _kernels.gauss_sums_1d(
                self.points[:, 0], np.ascontiguousarray(q[:, 0]), invh[0], CUT, _POW2)
        else:
            sums = _kernels.gauss_sums_nd(self.points, np.ascontiguousarray(q), invh, CUT, _POW2)
        dens = sums / self._norm
        return float(dens[0]) if single else dens

    def self_densities(self) -> np.ndarray:
        """Density at the fit points, returned in the original input order."""
        invh = 1.0 / self.bandwidth
        if self.dims == 1:
            sums = _kernels.gauss_self_sums_1d(self.points[:, 0], invh[0], CUT, _POW2)
        else:
            sums = _kernels.gauss_self_sums_nd(self.points, invh, CUT, _POW2)
        dens = np.empty_like(sums)
        dens[self.order] = sums / self._norm
        return dens


def kde_fit(points: np.ndarray, rule: BandwidthRule = "silverman") -> GaussianKde:
    """Fit a Gaussian KDE on an (n, m) cloud."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.ndim != 2:
        raise ValueError("points must be a 2-d array")
    n, m = pts.shape
    if m > MAX_KDE_DIMS:
        raise DimensionCapExceeded(f"{m} data dimensions exceed the KDE cap of {MAX_KDE_DIMS}")
    if n < 2:
        raise ValueError("KDE needs at least two points")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    h = resolve_bandwidth(pts, rule)
    order = np.argsort(pts[:, 0], kind="stable")
    sorted_pts = np.ascontiguousarray(pts[order])
    sorted_pts.setflags(write=False)
    GaussianKde.fit_count += 1
    return GaussianKde(points=sorted_pts, bandwidth=h, order=order)


def kde_eval(kde: GaussianKde, x: np.ndarray):
    return kde.evaluate(x)


@dataclass
class ObservedDensity:
    """Unnormalized Gaussian profile centered at a point of the data space.

    ``norm_constant`` is the profile's mass over the attainable data range;
    it is unset until the inference stage computes it from prior samples.
    """

    center: np.ndarray
    sigma: np.ndarray
    norm_constant: Optional[float] = None

    def __post_init__(self):
        self.center = np.atleast_1d(np.asarray(self.center, dtype=np.float64))
        self.sigma = np.atleast_1d(np.asarray(self.sigma, dtype=np.float64))
        if self.sigma.shape != self.center.shape:
            raise DimensionMismatch("center and sigma must have the same length")
        if np.any(self.sigma <= 0):
            raise ValueError("sigma must be positive")

    @property
    def dims(self) -> int:
        return self.center.size

    def peak(self) -> float:
        """Profile value at its own center."""
        return float(np.prod(1.0 / (self.sigma * math.sqrt(2.0 * math.pi))))


def gaussian_profile_eval(obs: ObservedDensity, x: np.ndarray):
    """Unnormalized profile value(s) prod_d phi((x_d - q_d)/sigma_d)/sigma_d.

    No truncation is applied here: evaluation sites are model outputs, which
    always lie in the attainable range; normalization happens downstream.
    """
    q = np.asarray(x, dtype=np.float64)
    single = q.ndim <= 1 and obs.dims >= 1 and q.size == obs.dims
    pts = np.atleast_2d(q)
    if pts.shape[1] != obs.dims:
        raise DimensionMismatch(f"points have {pts.shape[1]} dims, observation has {obs.dims}")
    z = (pts - obs.center) / obs.sigma
    vals = np.exp(-0.5 * np.sum(z * z, axis=1)) * obs.peak()
    return float(vals[0]) if single else vals


@dataclass(frozen=True)
class FixedNoise:
    """Constant per-dimension observation noise."""

    sigma: tuple[float, ...]

    def __post_init__(self):
        s = tuple(float(v) for v in np.atleast_1d(np.asarray(self.sigma, dtype=np.float64)))
        object.__setattr__(self, "sigma", s)
        if any(v <= 0 for v in s):
            raise ValueError("noise sigma must be positive")

    def sigma_at(self, centers: np.ndarray) -> np.ndarray:
        """Noise levels for observation centers (nc, m)."""
        c = np.atleast_2d(centers)
        s = np.asarray(self.sigma)
        if s.size == 1 and c.shape[1] > 1:
            s = np.full(c.shape[1], s[0])
        if s.size != c.shape[1]:
            raise DimensionMismatch(f"noise has {s.size} sigmas for {c.shape[1]} dims")
        return np.broadcast_to(s, c.shape).copy()

    @property
    def min_sigma(self) -> float:
        return min(self.sigma)


@dataclass(frozen=True)
class AffineNoise:
    """Noise growing with signal magnitude: sigma_d(q) = a + b |q_d|."""

    a: float
    b: float

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("affine noise requires a > 0")
        if self.b < 0:
            raise ValueError("affine noise requires b >= 0")

    def sigma_at(self, centers: np.ndarray) -> np.ndarray:
        c = np.atleast_2d(centers)
        return self.a + self.b * np.abs(c)

    @property
    def min_sigma(self) -> float:
        return self.a


NoiseModel = Union[FixedNoise, AffineNoise]


def truncnorm_normalizer_1d(q: float, sigma: float, lo: float, hi: float) -> float:
    """Mass of the Gaussian profile N(q, sigma^2) over [lo, hi].

    erf-based reference implementation, accurate to ~1e-15; the inference
    stage estimates the same constant from prior samples and tests compare
    the two routes.
    """
    if not lo < hi:
        raise ValueError("range must satisfy lo < hi")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return float(ndtr((hi - q) / sigma) - ndtr((lo - q) / sigma))
