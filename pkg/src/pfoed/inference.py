"""Stochastic inverse problem solution on a fixed prior sample set.

The posterior density is prior * observed/push-forward, both evaluated at the
sample QoI values.  The observed profile stays unnormalized; its mass over the
attainable data range is recovered as the mean of the ratios, which needs no
model evaluations beyond the ones already paid for.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .core import DataSpace, DesignCandidate, SampleSet, UniformPrior, select_design
from .density import (
    BandwidthRule,
    GaussianKde,
    ObservedDensity,
    gaussian_profile_eval,
    kde_fit,
)
from .errors import InfeasibleObservation, TooFewAccepted, UnsupportedModel
from .rng import stream

__all__ = [
    "PUSH_FLOOR",
    "C_MIN",
    "NORMALIZED_FLAG_BELOW",
    "PushForward",
    "PosteriorRatios",
    "PosteriorSamples",
    "fit_push_forward",
    "posterior_ratios",
    "ratios_from_values",
    "posterior_density",
    "posterior_density_at",
    "rejection_sample",
    "consistency_error",
]

# Push-forward values are floored before division; KDE tails can undershoot
# the true density at samples in thin regions of the cloud.
PUSH_FLOOR = 1e-12

# Below this mass over the data range, dividing by the normalization constant
# amplifies nothing but estimation noise; the observation is rejected.
C_MIN = 1e-6

# Mass below one by more than this flags data the model cannot fully reach;
# the density is renormalized rather than rejected.
NORMALIZED_FLAG_BELOW = 0.95


@dataclass(frozen=True)
class PushForward:
    """Fitted density of the prior's image in one design's data space."""

    kde: GaussianKde
    design_id: int
    eval_at_samples: np.ndarray  # density at the cloud points, floored

    @property
    def n(self) -> int:
        return self.eval_at_samples.size


@dataclass
class PosteriorRatios:
    """Observed/push-forward ratios at the prior samples.

    ``ratios`` uses the unnormalized observed profile; ``norm_constant`` is
    their mean, estimating the profile's mass over the data range.
    ``infeasible_normalized`` flags observations whose support extends beyond
    the attainable range (mass noticeably below one).
    """

    ratios: np.ndarray
    norm_constant: float
    infeasible_normalized: bool

    @property
    def n(self) -> int:
        return self.ratios.size

    def normalized(self) -> np.ndarray:
        return self.ratios / self.norm_constant


@dataclass(frozen=True)
class PosteriorSamples:
    """Indices of prior samples accepted as posterior samples."""

    accepted_indices: np.ndarray
    acceptance_rate: float

    @property
    def n_accepted(self) -> int:
        return self.accepted_indices.size


def fit_push_forward(
    dataspace: DataSpace,
    rule: BandwidthRule = "silverman",
    floor: float = PUSH_FLOOR,
    design_id: int = -1,
) -> PushForward:
    """Fit the push-forward KDE and cache its floored values at the cloud."""
    if floor <= 0:
        raise ValueError("floor must be positive")
    kde = kde_fit(dataspace.cloud, rule)
    vals = np.maximum(kde.self_densities(), floor)
    vals.setflags(write=False)
    return PushForward(kde=kde, design_id=design_id, eval_at_samples=vals)


def ratios_from_values(observed_values: np.ndarray, pf: PushForward) -> PosteriorRatios:
    """Build posterior ratios from observed-density values at the cloud points."""
    vals = np.asarray(observed_values, dtype=np.float64)
    if vals.shape != pf.eval_at_samples.shape:
        raise ValueError("observed values must align with the push-forward samples")
    r = vals / pf.eval_at_samples
    c = float(r.mean())
    if not c >= C_MIN:
        raise InfeasibleObservation(c)
    return PosteriorRatios(
        ratios=r, norm_constant=c, infeasible_normalized=c < NORMALIZED_FLAG_BELOW)


def posterior_ratios(
    pf: PushForward, obs: ObservedDensity, dataspace: DataSpace
) -> PosteriorRatios:
    """Ratios of the observed profile to the push-forward at every sample.

    Also stores the estimated normalization constant on ``obs``.
    """
    ratios = ratios_from_values(gaussian_profile_eval(obs, dataspace.cloud), pf)
    obs.norm_constant = ratios.norm_constant
    return ratios


def posterior_density(ratios: PosteriorRatios, prior: UniformPrior, index: int) -> float:
    """Normalized posterior density at prior sample ``index``."""
    if not 0 <= index < ratios.n:
        raise IndexError(f"sample index {index} outside [0, {ratios.n})")
    return (1.0 / prior.space.volume()) * float(ratios.ratios[index]) / ratios.norm_constant


def posterior_density_at(
    pf: PushForward,
    obs: ObservedDensity,
    norm_constant: float,
    prior: UniformPrior,
    params: np.ndarray,
    qoi_values: np.ndarray,
) -> np.ndarray:
    """Normalized posterior density at arbitrary parameter points.

    ``qoi_values`` are the design's QoI evaluated at ``params`` (this is the
    one posterior interrogation that costs extra model evaluations; it exists
    for grids and plots).
    """
    push = np.maximum(pf.kde.evaluate(qoi_values), PUSH_FLOOR)
    prof = gaussian_profile_eval(obs, qoi_values)
    return prior.density(params) * (prof / push) / norm_constant


def rejection_sample(ratios: PosteriorRatios, seed: int) -> PosteriorSamples:
    """Accept sample i iff eta_i < r_i / max(r), eta from the (seed, "rejection") stream.

    The maximum is exact over the available ratios, so acceptance is exact
    for this finite sample set.  Acceptance decisions are per-index and
    independent of sample order.
    """
    r = ratios.ratios
    n = r.size
    if n < 1:
        raise ValueError("need at least one sample")
    m = float(r.max())
    if m == 0.0:
        return PosteriorSamples(accepted_indices=np.empty(0, dtype=np.int64), acceptance_rate=0.0)
    eta = stream(seed, "rejection").random(n)
    accepted = np.flatnonzero(eta < r / m)
    return PosteriorSamples(accepted_indices=accepted, acceptance_rate=accepted.size / n)


def consistency_error(
    posterior: PosteriorSamples,
    samples: SampleSet,
    design: DesignCandidate,
    obs: ObservedDensity,
    rule: BandwidthRule = "silverman",
    cells: int = 256,
) -> float:
    """L1 distance between the accepted samples' QoI density and the observation.

    Estimates how well the accepted set pushes forward onto the normalized
    observed density: midpoint quadrature over the data range of the absolute
    difference between a KDE on the accepted QoI values and the observed
    profile divided by its normalization constant.  Restricted to data spaces
    of dimension <= 2.
    """
    if posterior.n_accepted < 50:
        raise TooFewAccepted(f"{posterior.n_accepted} accepted samples; need at least 50")
    if obs.norm_constant is None:
        raise ValueError("observed density has no normalization constant yet")
    dataspace = select_design(samples, design)
    m = dataspace.dims
    if m > 2:
        raise UnsupportedModel("consistency diagnostic is limited to 1-d and 2-d data spaces")
    accepted_cloud = dataspace.cloud[posterior.accepted_indices]
    kde = kde_fit(accepted_cloud, rule)

    edges = [np.linspace(lo, hi, cells + 1) for lo, hi in dataspace.per_dim_range]
    mids = [0.5 * (e[:-1] + e[1:]) for e in edges]
    if m == 1:
        grid = mids[0][:, None]
        cell_measure = edges[0][1] - edges[0][0]
    else:
        g0, g1 = np.meshgrid(mids[0], mids[1], indexing="ij")
        grid = np.column_stack([g0.ravel(), g1.ravel()])
        cell_measure = (edges[0][1] - edges[0][0]) * (edges[1][1] - edges[1][0])
    post_pf = kde.evaluate(grid)
    obs_norm = gaussian_profile_eval(obs, grid) / obs.norm_constant
    return float(np.abs(post_pf - obs_norm).sum() * cell_measure)
