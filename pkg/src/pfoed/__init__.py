"""Optimal experimental design by expected information gain over push-forward densities.

The library solves stochastic inverse problems on a fixed set of prior
samples (posterior = prior x observed / push-forward), measures a design's
worth as the expected KL divergence of the posterior from the prior over
observation centers drawn from the push-forward, and searches discrete design
spaces exhaustively or greedily for the gain-maximizing set of measurements.
"""

from .core import (
    DataSpace,
    DesignCandidate,
    ParameterSpace,
    SampleSet,
    UniformPrior,
    evaluate_designs,
    prior_density,
    sample_prior,
    select_design,
)
from .density import (
    AffineNoise,
    FixedNoise,
    GaussianKde,
    ObservedDensity,
    gaussian_profile_eval,
    kde_eval,
    kde_fit,
    scott_bandwidth,
    silverman_bandwidth,
    truncnorm_normalizer_1d,
)
from .inference import (
    PosteriorRatios,
    PosteriorSamples,
    PushForward,
    consistency_error,
    fit_push_forward,
    posterior_density,
    posterior_density_at,
    posterior_ratios,
    ratios_from_values,
    rejection_sample,
)
from .information import (
    EigEstimate,
    InformationGain,
    eig_quadrature_oracle,
    expected_information_gain,
    kl_from_ratios,
    kl_quadrature_oracle,
)
from .models import ConvDiffAmplitude, LinearHighDim, Nonlinear2x2, build_model
from .oed import (
    DesignSpace,
    EigReport,
    enumerate_subsets,
    exhaustive_oed,
    greedy_oed,
    rank_designs,
)

__version__ = "0.1.0"
