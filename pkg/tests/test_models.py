"""Forward models: closed forms, the convection-diffusion solve, linear map."""

import math

import numpy as np
import pytest

from pfoed.core import UniformPrior, evaluate_designs, sample_prior
from pfoed.errors import DimensionMismatch, OutOfDomain
from pfoed.models import (
    ConvDiffAmplitude,
    LinearHighDim,
    MODEL_NAMES,
    Nonlinear2x2,
    build_model,
    convdiff_unit_solve,
)


def solve_2x2_newton(lam, tol=1e-13):
    """Independent root-finder for the two-equation system.

    Newton iteration on (a x1^2 + x2^2 - 1, x1^2 - b x2^2 - 1) from (1, 1);
    checks the closed-form solution used by the model.
    """
    a, b = lam
    x1, x2 = 1.0, 1.0
    for _ in range(100):
        r1 = a * x1 * x1 + x2 * x2 - 1.0
        r2 = x1 * x1 - b * x2 * x2 - 1.0
        if math.hypot(r1, r2) < tol:
            break
        j11, j12 = 2.0 * a * x1, 2.0 * x2
        j21, j22 = 2.0 * x1, -2.0 * b * x2
        det = j11 * j22 - j12 * j21
        x1 -= (j22 * r1 - j12 * r2) / det
        x2 -= (-j21 * r1 + j11 * r2) / det
    return x1, x2


class TestNonlinear2x2:
    def test_known_corner_value(self):
        q1, q2 = Nonlinear2x2().evaluate([0.99, 0.0])
        assert q1 == pytest.approx(0.1, abs=1e-12)
        assert q2 == pytest.approx(1.0, abs=1e-12)

    def test_second_reference_point(self):
        q1, q2 = Nonlinear2x2().evaluate([0.9, 1.0])
        assert q1 == pytest.approx(math.sqrt(0.1 / 1.9), abs=1e-12)
        assert q2 == pytest.approx(math.sqrt(2.0 / 1.9), abs=1e-12)
        assert (q1, q2) == pytest.approx((0.22942, 1.02598), abs=5e-6)

    def test_closed_form_matches_newton(self):
        model = Nonlinear2x2()
        rng = np.random.default_rng(0)
        lows, highs = model.space.lows, model.space.highs
        lams = lows + rng.random((200, 2)) * (highs - lows)
        for lam in lams:
            q1, q2 = model.evaluate(lam)
            x1, x2 = solve_2x2_newton(lam)
            assert q1 == pytest.approx(x2, abs=1e-10)
            assert q2 == pytest.approx(x1, abs=1e-10)

    def test_residuals_vanish(self):
        model = Nonlinear2x2()
        rng = np.random.default_rng(1)
        lows, highs = model.space.lows, model.space.highs
        lams = lows + rng.random((500, 2)) * (highs - lows)
        out = model.evaluate_all(lams)
        x2, x1 = out[:, 0], out[:, 1]
        a, b = lams[:, 0], lams[:, 1]
        res1 = np.abs(a * x1**2 + x2**2 - 1.0)
        res2 = np.abs(x1**2 - b * x2**2 - 1.0)
        assert res1.max() <= 1e-12 and res2.max() <= 1e-12
        assert np.all(x1 >= 0) and np.all(x2 >= 0)

    def test_out_of_domain(self):
        with pytest.raises(OutOfDomain):
            Nonlinear2x2().evaluate([0.5, 0.0])

    def test_qoi_ranges_cover_reference_observations(self):
        model = Nonlinear2x2()
        samples = sample_prior(UniformPrior(model.space), 100_000, seed=17)
        out = evaluate_designs(model, samples).qoi
        assert out[:, 0].min() < 0.3 < out[:, 0].max()
        assert out[:, 1].min() < 1.015 < out[:, 1].max()
        assert out[:, 1].min() < 0.982 < out[:, 1].max()


@pytest.fixture(scope="module")
def unit25():
    return convdiff_unit_solve(25, 25)


class TestConvDiffSolve:
    def test_dirichlet_edges_zero(self, unit25):
        u, _, _ = unit25
        assert np.all(u[0, :] == 0.0) and np.all(u[:, 0] == 0.0)

    def test_nonnegative_everywhere(self, unit25):
        u, _, _ = unit25
        assert u.min() >= 0.0

    def test_peak_downstream_of_source(self, unit25):
        u, xs, ys = unit25
        i, j = np.unravel_index(np.argmax(u), u.shape)
        assert 0.5 <= xs[i] <= 0.7 and 0.5 <= ys[j] <= 0.7

    def test_grid_refinement_behavior(self):
        # First-order upwinding: the 25->50 change at a probe point stays
        # bounded and roughly halves again from 50->100.
        vals = {}
        for n in (25, 50, 100):
            model = ConvDiffAmplitude(sensors=[(0.6, 0.6)], nx=n, ny=n)
            vals[n] = model.measure(100.0, (0.6, 0.6))
        change_1 = abs(vals[50] - vals[25]) / vals[25]
        change_2 = abs(vals[100] - vals[50]) / vals[50]
        assert change_1 < 0.20
        assert change_2 < change_1

    def test_outflow_gradient_zero(self, unit25):
        u, _, _ = unit25
        np.testing.assert_allclose(u[-1, 1:], u[-2, 1:], rtol=1e-12)
        np.testing.assert_allclose(u[1:, -1], u[1:, -2], rtol=1e-12)


class TestConvDiffAmplitude:
    def test_sensor_on_dirichlet_edge_reads_zero(self):
        model = ConvDiffAmplitude(sensors=[(0.0, 0.4)])
        for amp in (50.0, 100.0, 150.0):
            assert model.measure(amp, (0.0, 0.4)) == 0.0

    def test_linearity_in_amplitude(self):
        model = ConvDiffAmplitude(sensors=[(0.6, 0.6)])
        assert model.measure(140.0, (0.6, 0.6)) == pytest.approx(
            2.0 * model.measure(70.0, (0.6, 0.6)), rel=1e-14)

    def test_near_source_beats_far_corner(self):
        model = ConvDiffAmplitude(sensors=[(0.55, 0.55), (0.05, 0.95)])
        assert model.measure(100.0, (0.55, 0.55)) > model.measure(100.0, (0.05, 0.95))

    def test_one_solve_for_full_qoi_matrix(self):
        model = ConvDiffAmplitude(sensors=[(0.3, 0.3), (0.6, 0.6), (0.9, 0.9)])
        prior = UniformPrior(model.space)
        samples = sample_prior(prior, 300, seed=5)
        before = ConvDiffAmplitude.solve_count
        out = evaluate_designs(model, samples)
        evaluate_designs(model, samples)  # reuse, no second solve
        assert ConvDiffAmplitude.solve_count == before + 1
        assert out.qoi.shape == (300, 3)

    def test_sensor_outside_domain(self):
        with pytest.raises(OutOfDomain):
            ConvDiffAmplitude(sensors=[(1.2, 0.5)])

    def test_amplitude_outside_range(self):
        model = ConvDiffAmplitude(sensors=[(0.6, 0.6)])
        with pytest.raises(OutOfDomain):
            model.evaluate_all(np.array([[10.0]]))


class TestLinearHighDim:
    def test_zero_weights_constant(self):
        model = LinearHighDim(n_params=20, n_qoi=2, seed=3, scale=0.0, offset=1.5)
        out = model.evaluate_all(np.random.default_rng(0).uniform(-1, 1, (40, 20)))
        assert np.all(out == 1.5)

    def test_basis_vector_reads_weight_column(self):
        model = LinearHighDim(n_params=10, n_qoi=3, seed=4)
        e1 = np.zeros((1, 10))
        e1[0, 0] = 1.0
        np.testing.assert_allclose(
            model.evaluate_all(e1)[0], model.weights[:, 0], rtol=1e-14)

    def test_dimension_mismatch(self):
        model = LinearHighDim(n_params=10)
        with pytest.raises(DimensionMismatch):
            model.evaluate_all(np.zeros((5, 7)))

    def test_seeded_weights_reproducible(self):
        a = LinearHighDim(n_params=30, seed=9)
        b = LinearHighDim(n_params=30, seed=9)
        assert np.array_equal(a.weights, b.weights)


class TestRegistry:
    def test_names(self):
        assert MODEL_NAMES == ("nonlinear2x2", "convdiff_amplitude", "linear_highdim")

    def test_build_each(self):
        assert isinstance(build_model("nonlinear2x2", {}), Nonlinear2x2)
        assert isinstance(
            build_model("convdiff_amplitude", {}, sensors=[(0.5, 0.5)]), ConvDiffAmplitude)
        assert isinstance(build_model("linear_highdim", {"n_params": 10}), LinearHighDim)

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            build_model("mystery", {})
