"""Push-forward fitting, posterior ratios, rejection sampling, consistency."""

import math

import numpy as np
import pytest

from pfoed.core import DesignCandidate, ParameterSpace, UniformPrior, select_design
from pfoed.density import ObservedDensity, truncnorm_normalizer_1d
from pfoed.errors import InfeasibleObservation, TooFewAccepted
from pfoed.inference import (
    PUSH_FLOOR,
    PosteriorRatios,
    consistency_error,
    fit_push_forward,
    posterior_density,
    posterior_density_at,
    posterior_ratios,
    ratios_from_values,
    rejection_sample,
)

D0 = DesignCandidate(id=0, qoi_indices=(0,))


class TestFitPushForward:
    def test_uniform_identity_interior(self, identity_samples_10k):
        _, _, samples = identity_samples_10k
        pf = fit_push_forward(select_design(samples, D0))
        interior = pf.kde.evaluate(np.linspace(0.2, 0.8, 13)[:, None])
        np.testing.assert_allclose(interior, 1.0, atol=0.05)

    def test_uniform_identity_boundary_halving(self, identity_samples_10k):
        # A KDE at the support edge sees kernels on one side only.
        _, _, samples = identity_samples_10k
        pf = fit_push_forward(select_design(samples, D0))
        assert pf.kde.evaluate([0.0]) == pytest.approx(0.5, abs=0.1)
        assert pf.kde.evaluate([1.0]) == pytest.approx(0.5, abs=0.1)

    def test_floor_applied(self, identity_samples_10k):
        _, _, samples = identity_samples_10k
        pf = fit_push_forward(select_design(samples, D0), floor=1e-3)
        assert pf.eval_at_samples.min() >= 1e-3

    def test_eval_matches_kde(self, identity_samples_10k):
        _, _, samples = identity_samples_10k
        ds = select_design(samples, D0)
        pf = fit_push_forward(ds)
        np.testing.assert_allclose(
            pf.eval_at_samples, np.maximum(pf.kde.evaluate(ds.cloud), PUSH_FLOOR), rtol=1e-12)


class TestPosteriorRatios:
    def test_norm_constant_matches_erf_oracle(self, identity_samples_10k):
        _, _, samples = identity_samples_10k
        ds = select_design(samples, D0)
        pf = fit_push_forward(ds)
        obs = ObservedDensity(center=[0.5], sigma=[0.3])
        ratios = posterior_ratios(pf, obs, ds)
        lo, hi = ds.per_dim_range[0]
        want = truncnorm_normalizer_1d(0.5, 0.3, lo, hi)
        assert ratios.norm_constant == pytest.approx(want, abs=0.05)

    def test_sets_norm_constant_on_observation(self, identity_samples_10k):
        _, _, samples = identity_samples_10k
        ds = select_design(samples, D0)
        pf = fit_push_forward(ds)
        obs = ObservedDensity(center=[0.5], sigma=[0.1])
        ratios = posterior_ratios(pf, obs, ds)
        assert obs.norm_constant == ratios.norm_constant

    def test_far_observation_infeasible(self, identity_samples_10k):
        _, _, samples = identity_samples_10k
        ds = select_design(samples, D0)
        pf = fit_push_forward(ds)
        hi = ds.per_dim_range[0][1]
        obs = ObservedDensity(center=[hi + 20 * 0.01], sigma=[0.01])
        with pytest.raises(InfeasibleObservation):
            posterior_ratios(pf, obs, ds)

    def test_joint_observation_mass_below_one(self, nonlinear_samples_8k):
        # Correlated QoI make the attainable set non-rectangular, so a
        # product of feasible marginals can still lose mass.
        _, _, samples = nonlinear_samples_8k
        design = DesignCandidate(id=0, qoi_indices=(0, 1))
        ds = select_design(samples, design)
        pf = fit_push_forward(ds)
        obs = ObservedDensity(center=[0.3, 0.982], sigma=[0.04, 0.01])
        ratios = posterior_ratios(pf, obs, ds)
        assert ratios.norm_constant < 0.95
        assert ratios.infeasible_normalized

    def test_normalized_mean_is_one(self, identity_samples_10k):
        _, _, samples = identity_samples_10k
        ds = select_design(samples, D0)
        pf = fit_push_forward(ds)
        ratios = posterior_ratios(pf, ObservedDensity(center=[0.5], sigma=[0.1]), ds)
        assert ratios.normalized().mean() == pytest.approx(1.0, rel=1e-12)


class TestPosteriorDensity:
    def test_constant_ratios_reduce_to_prior(self):
        prior = UniformPrior(ParameterSpace(((0.0, 2.0),)))
        ratios = PosteriorRatios(
            ratios=np.full(10, 3.7), norm_constant=3.7, infeasible_normalized=False)
        for i in range(10):
            assert posterior_density(ratios, prior, i) == pytest.approx(0.5, rel=1e-14)

    def test_zero_ratio_zero_density(self):
        prior = UniformPrior(ParameterSpace(((0.0, 1.0),)))
        ratios = PosteriorRatios(
            ratios=np.array([0.0, 2.0]), norm_constant=1.0, infeasible_normalized=False)
        assert posterior_density(ratios, prior, 0) == 0.0

    def test_identity_posterior_matches_truncnorm(self, identity_samples_10k):
        # With an identity map the posterior in parameter space is the
        # normalized observed density itself.
        _, prior, samples = identity_samples_10k
        ds = select_design(samples, D0)
        pf = fit_push_forward(ds)
        obs = ObservedDensity(center=[0.5], sigma=[0.1])
        ratios = posterior_ratios(pf, obs, ds)
        i_near = int(np.argmin(np.abs(ds.cloud[:, 0] - 0.5)))
        c_oracle = truncnorm_normalizer_1d(0.5, 0.1, 0.0, 1.0)
        want = (1.0 / (0.1 * math.sqrt(2 * math.pi))) / c_oracle
        got = posterior_density(ratios, prior, i_near)
        assert got == pytest.approx(want, rel=0.10)

    def test_quadrature_integrates_to_one_2d(self, nonlinear_samples_8k):
        model, prior, samples = nonlinear_samples_8k
        design = DesignCandidate(id=0, qoi_indices=(0, 1))
        ds = select_design(samples, design)
        pf = fit_push_forward(ds)
        obs = ObservedDensity(center=[0.3, 1.015], sigma=[0.01, 0.01])
        ratios = posterior_ratios(pf, obs, ds)
        n = 150
        los, his = model.space.lows, model.space.highs
        edges = [np.linspace(lo, hi, n + 1) for lo, hi in zip(los, his)]
        mids = [0.5 * (e[:-1] + e[1:]) for e in edges]
        g0, g1 = np.meshgrid(*mids, indexing="ij")
        grid = np.column_stack([g0.ravel(), g1.ravel()])
        cell = float(np.prod([e[1] - e[0] for e in edges]))
        post = posterior_density_at(
            pf, obs, ratios.norm_constant, prior, grid, model.evaluate_all(grid))
        assert post.sum() * cell == pytest.approx(1.0, abs=0.05)

    def test_profile_scaling_cancels(self):
        # Multiplying the unnormalized profile by k scales r and C alike.
        prior = UniformPrior(ParameterSpace(((0.0, 1.0),)))
        r = np.array([0.5, 2.0, 1.0])
        a = PosteriorRatios(ratios=r, norm_constant=r.mean(), infeasible_normalized=False)
        b = PosteriorRatios(ratios=7 * r, norm_constant=7 * r.mean(), infeasible_normalized=False)
        for i in range(3):
            assert posterior_density(a, prior, i) == pytest.approx(
                posterior_density(b, prior, i), rel=1e-14)
        accept_a = rejection_sample(a, seed=3).accepted_indices
        accept_b = rejection_sample(b, seed=3).accepted_indices
        assert np.array_equal(accept_a, accept_b)


class TestRejectionSample:
    def test_constant_ratios_accept_all(self):
        ratios = PosteriorRatios(
            ratios=np.full(100, 2.5), norm_constant=2.5, infeasible_normalized=False)
        out = rejection_sample(ratios, seed=1)
        assert out.acceptance_rate == 1.0
        assert out.n_accepted == 100

    def test_acceptance_rate_matches_mean_over_max(self, identity_samples_10k):
        _, _, samples = identity_samples_10k
        ds = select_design(samples, D0)
        pf = fit_push_forward(ds)
        ratios = posterior_ratios(pf, ObservedDensity(center=[0.5], sigma=[0.1]), ds)
        out = rejection_sample(ratios, seed=2)
        p = ratios.ratios.mean() / ratios.ratios.max()
        se = math.sqrt(p * (1 - p) / ratios.n)
        assert abs(out.acceptance_rate - p) < 3 * se

    def test_deterministic(self, identity_samples_10k):
        _, _, samples = identity_samples_10k
        ds = select_design(samples, D0)
        pf = fit_push_forward(ds)
        ratios = posterior_ratios(pf, ObservedDensity(center=[0.5], sigma=[0.1]), ds)
        a = rejection_sample(ratios, seed=5)
        b = rejection_sample(ratios, seed=5)
        assert np.array_equal(a.accepted_indices, b.accepted_indices)

    def test_accepted_are_posterior_draws(self, nonlinear_samples_8k):
        # Push-forward of the accepted set must sit on the observed density.
        _, _, samples = nonlinear_samples_8k
        ds = select_design(samples, D0)
        pf = fit_push_forward(ds)
        obs = ObservedDensity(center=[0.3], sigma=[0.01])
        ratios = posterior_ratios(pf, obs, ds)
        out = rejection_sample(ratios, seed=4)
        q1 = ds.cloud[out.accepted_indices, 0]
        assert q1.mean() == pytest.approx(0.3, abs=0.005)


class TestConsistencyError:
    def test_identity_model_consistent(self, identity_samples_10k):
        _, _, samples = identity_samples_10k
        ds = select_design(samples, D0)
        pf = fit_push_forward(ds)
        obs = ObservedDensity(center=[0.5], sigma=[0.1])
        ratios = posterior_ratios(pf, obs, ds)
        posterior = rejection_sample(ratios, seed=6)
        err = consistency_error(posterior, samples, D0, obs)
        assert err <= 0.10

    def test_wide_observation_low_error(self, identity_samples_10k):
        # A wide observation is close to the push-forward itself, so the
        # accepted set's push-forward has to reproduce a near-flat density.
        _, _, samples = identity_samples_10k
        ds = select_design(samples, D0)
        pf = fit_push_forward(ds)
        obs = ObservedDensity(center=[0.5], sigma=[1.5])
        ratios = posterior_ratios(pf, obs, ds)
        posterior = rejection_sample(ratios, seed=6)
        assert posterior.n_accepted > 3000
        assert consistency_error(posterior, samples, D0, obs) <= 0.10

    def test_too_few_accepted(self, identity_samples_10k):
        _, _, samples = identity_samples_10k
        ds = select_design(samples, D0)
        pf = fit_push_forward(ds)
        obs = ObservedDensity(center=[0.5], sigma=[0.1])
        obs.norm_constant = 1.0
        from pfoed.inference import PosteriorSamples
        tiny = PosteriorSamples(accepted_indices=np.arange(5), acceptance_rate=5e-4)
        with pytest.raises(TooFewAccepted):
            consistency_error(tiny, samples, D0, obs)


class TestRatiosFromValues:
    def test_identity_values_give_unit_ratios(self, identity_samples_10k):
        _, _, samples = identity_samples_10k
        ds = select_design(samples, D0)
        pf = fit_push_forward(ds)
        ratios = ratios_from_values(pf.eval_at_samples.copy(), pf)
        np.testing.assert_allclose(ratios.ratios, 1.0, rtol=1e-14)
        assert ratios.norm_constant == pytest.approx(1.0, rel=1e-14)
