"""Information gain of a posterior and expected information gain of a design.

The gain of one observed density is the KL divergence of the posterior from
the prior.  Substituting the posterior ratio form turns it into an expectation
with respect to the prior of (obs/push) log(obs/push) evaluated at the sample
QoI values, so the Monte Carlo estimate is a plain mean over the prior samples
with no parameter-space densities involved.  Natural log throughout; gains are
in nats.

The expected gain of a design averages that estimate over observation centers
drawn from the push-forward (the QoI values of the leading samples), reusing
one KDE fit for every center.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _kernels
from ._kernels import CUT, _POW2
from .core import DesignCandidate, SampleSet, UniformPrior, select_design
from .density import (
    AffineNoise,
    BandwidthRule,
    FixedNoise,
    NoiseModel,
    ObservedDensity,
    gaussian_profile_eval,
    resolve_bandwidth,
    truncnorm_normalizer_1d,
)
from .errors import AllCentersInfeasible, UnsupportedModel, WideSigmaWarning
from .inference import C_MIN, PUSH_FLOOR, PosteriorRatios, PushForward, fit_push_forward

__all__ = [
    "InformationGain",
    "EigEstimate",
    "kl_from_ratios",
    "expected_information_gain",
    "kl_quadrature_oracle",
    "eig_quadrature_oracle",
]

# Warn when observation noise exceeds this fraction of the data range.
WIDE_SIGMA_FRACTION = 0.5


@dataclass(frozen=True)
class InformationGain:
    """KL divergence of one posterior from the prior, in nats."""

    value: float
    design_id: int = -1
    center: Optional[np.ndarray] = None


@dataclass(frozen=True)
class EigEstimate:
    """Expected information gain of one design.

    ``per_center`` holds the gain for each observation center in sample
    order, NaN where the center was infeasible; ``eig`` is the fixed-order
    mean of the finite entries.
    """

    design_id: int
    eig: float
    n_samples: int
    m_centers: int
    per_center: np.ndarray
    n_infeasible_centers: int


def kl_from_ratios(
    ratios: PosteriorRatios,
    design_id: int = -1,
    center: Optional[np.ndarray] = None,
    lambda_volume: Optional[float] = None,
) -> InformationGain:
    """Monte Carlo information gain from posterior ratios.

    I = mean(s log s) over the normalized ratios s = r/C, with 0 log 0 = 0.

    ``lambda_volume`` multiplies the estimate by the parameter-space volume.
    That variant treats the samples as volume-measure quadrature nodes rather
    than prior draws; it is kept only so tests can demonstrate it does not
    reproduce reference gains.  Leave it unset.
    """
    s = ratios.normalized()
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(s > 0.0, s * np.log(s), 0.0)
    value = float(terms.mean())
    if lambda_volume is not None:
        value *= lambda_volume
    return InformationGain(value=value, design_id=design_id, center=center)


def _per_center_gains(csum: np.ndarray, tsum: np.ndarray, n: int):
    """Gains from per-center ratio sums; NaN where the center is infeasible."""
    cbar = csum / n
    feasible = cbar >= C_MIN
    gains = np.full(cbar.size, np.nan)
    good = feasible & (cbar > 0)
    gains[good] = tsum[good] / (n * cbar[good]) - np.log(cbar[good])
    return gains, int((~feasible).sum())


def expected_information_gain(
    samples: SampleSet,
    design: DesignCandidate,
    noise: NoiseModel,
    m_centers: Optional[int] = None,
    rule: BandwidthRule = "silverman",
    floor: float = PUSH_FLOOR,
    push_forward: Optional[PushForward] = None,
) -> EigEstimate:
    """Average information gain over observation centers drawn from the push-forward.

    The push-forward KDE is fitted once (or reused if ``push_forward`` is
    given) and shared by all centers; centers are the QoI values of the first
    ``m_centers`` samples.  Centers whose observed density has essentially no
    mass over the data range are excluded and counted.
    """
    dataspace = select_design(samples, design)
    n, m = dataspace.n, dataspace.dims
    if m_centers is None:
        m_centers = n
    if not 1 <= m_centers <= n:
        raise ValueError(f"m_centers must lie in [1, {n}]")

    centers = dataspace.cloud[:m_centers]
    sigmas = noise.sigma_at(centers)

    ranges = np.array([hi - lo for lo, hi in dataspace.per_dim_range])
    wide = sigmas.mean(axis=0) > WIDE_SIGMA_FRACTION * ranges
    if wide.any():
        warnings.warn(
            f"design {design.id}: observation noise exceeds half the data range "
            f"in dimension(s) {np.flatnonzero(wide).tolist()}; gains may reflect "
            "low-probability regions rather than informative measurements",
            WideSigmaWarning,
            stacklevel=2,
        )

    # Every Monte Carlo normalization constant obeys
    #   C_j <= prod_d h_d / sigma_d(q_j),
    # because the profile peak is prod_d 1/(sigma_d sqrt(2 pi)) and the KDE at
    # a sample is at least its own kernel, 1/(n prod_d h_d (2 pi)^(m/2)).
    # When even that bound is below the feasibility cutoff, no center can
    # survive, so both quadratic-cost sweeps are skipped.
    if push_forward is not None:
        bandwidth = push_forward.kde.bandwidth
    else:
        bandwidth = resolve_bandwidth(dataspace.cloud, rule)
    c_bound = float(np.prod(bandwidth / sigmas.min(axis=0)))
    if c_bound < C_MIN:
        raise AllCentersInfeasible(
            f"design {design.id}: normalization bound {c_bound:.3e} below {C_MIN:g} "
            "for every observation center")

    pf = push_forward if push_forward is not None else fit_push_forward(
        dataspace, rule, floor, design.id)

    kde = pf.kde
    push_sorted = pf.eval_at_samples[kde.order]
    pushinv = 1.0 / push_sorted
    logpush = np.log(push_sorted)

    if m == 1 and isinstance(noise, FixedNoise) and m_centers == n:
        csum_s, tsum_s = _kernels.ratio_stats_sym_1d(
            kde.points[:, 0], pushinv, logpush, float(sigmas[0, 0]), CUT, _POW2)
        csum = np.empty(n)
        tsum = np.empty(n)
        csum[kde.order] = csum_s
        tsum[kde.order] = tsum_s
    elif m == 1:
        csum, tsum = _kernels.ratio_stats_1d(
            kde.points[:, 0], pushinv, logpush,
            np.ascontiguousarray(centers[:, 0]), np.ascontiguousarray(sigmas[:, 0]),
            CUT, _POW2)
    else:
        csum, tsum = _kernels.ratio_stats_nd(
            kde.points, pushinv, logpush,
            np.ascontiguousarray(centers), np.ascontiguousarray(sigmas), CUT, _POW2)

    per_center, n_infeasible = _per_center_gains(csum, tsum, n)
    finite = np.isfinite(per_center)
    if not finite.any():
        raise AllCentersInfeasible(
            f"design {design.id}: all {m_centers} observation centers infeasible")
    eig = float(per_center[finite].mean())
    return EigEstimate(
        design_id=design.id,
        eig=eig,
        n_samples=n,
        m_centers=m_centers,
        per_center=per_center,
        n_infeasible_centers=n_infeasible,
    )


def kl_quadrature_oracle(
    prior: UniformPrior,
    qoi_map: Callable[[np.ndarray], np.ndarray],
    obs: ObservedDensity,
    push_density: Callable[[np.ndarray], np.ndarray],
    cells: int = 4000,
) -> float:
    """Brute-force parameter-space information gain for low-dimensional models.

    Midpoint quadrature over the parameter box of post log(post/prior), with
    the caller supplying the exact push-forward density, so the oracle shares
    no code path (and no KDE) with the Monte Carlo estimate it checks.
    """
    ndim = prior.space.dims
    if ndim > 2:
        raise UnsupportedModel("quadrature oracle supports 1-d and 2-d parameter spaces")
    per_dim = cells if ndim == 1 else int(math.sqrt(cells)) + 1
    edges = [np.linspace(lo, hi, per_dim + 1) for lo, hi in prior.space.bounds]
    mids = [0.5 * (e[:-1] + e[1:]) for e in edges]
    if ndim == 1:
        grid = mids[0][:, None]
        cell = edges[0][1] - edges[0][0]
    else:
        g0, g1 = np.meshgrid(mids[0], mids[1], indexing="ij")
        grid = np.column_stack([g0.ravel(), g1.ravel()])
        cell = (edges[0][1] - edges[0][0]) * (edges[1][1] - edges[1][0])

    q = np.atleast_2d(np.asarray(qoi_map(grid), dtype=np.float64))
    if q.shape[0] != grid.shape[0]:
        q = q.T
    push = np.asarray(push_density(q), dtype=np.float64)
    prof = gaussian_profile_eval(obs, q)
    prior_vals = prior.density(grid)
    tilde = prior_vals * prof / push
    c = float(tilde.sum() * cell)
    post = tilde / c
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(post > 0.0, post * np.log(post / prior_vals), 0.0)
    return float(terms.sum() * cell)


def eig_quadrature_oracle(
    lo: float,
    hi: float,
    sigma: float,
    center_cells: int = 400,
    data_cells: int = 4000,
) -> float:
    """Nested-quadrature expected gain for a uniform push-forward on [lo, hi].

    Covers any model whose single QoI is an increasing affine function of a
    one-dimensional uniform parameter (the push-forward is then exactly
    uniform on the QoI range).  The outer integral runs over observation
    centers weighted by the push-forward; the inner one evaluates each
    center's gain as the data-space divergence of the normalized truncated
    Gaussian from the uniform push-forward.  KDE-free and estimator-free.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    push = 1.0 / (hi - lo)
    y_edges = np.linspace(lo, hi, data_cells + 1)
    y = 0.5 * (y_edges[:-1] + y_edges[1:])
    dy = y_edges[1] - y_edges[0]
    q_edges = np.linspace(lo, hi, center_cells + 1)
    q_mids = 0.5 * (q_edges[:-1] + q_edges[1:])
    dq = q_edges[1] - q_edges[0]
    gains = np.empty(center_cells)
    for k, q in enumerate(q_mids):
        c_q = truncnorm_normalizer_1d(q, sigma, lo, hi)
        z = (y - q) / sigma
        obs_norm = np.exp(-0.5 * z * z) / (sigma * math.sqrt(2.0 * math.pi)) / c_q
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(obs_norm > 0.0, obs_norm * np.log(obs_norm / push), 0.0)
        gains[k] = terms.sum() * dy
    return float((gains * push).sum() * dq)
