"""Shared fixtures and toy models for the test suite."""

import numpy as np
import pytest

from pfoed import _kernels
from pfoed.core import ParameterSpace, UniformPrior, evaluate_designs, sample_prior
from pfoed.models import Nonlinear2x2


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # One-time JIT compilation so individual tests measure only their own work.
    _kernels.warm_up()


class IdentityModel:
    """Single QoI equal to the single parameter on [lo, hi]."""

    def __init__(self, lo=0.0, hi=1.0):
        self.space = ParameterSpace(((lo, hi),))

    n_params = 1
    n_qoi = 1
    qoi_coords = None

    def evaluate_all(self, params):
        return np.atleast_2d(np.asarray(params, dtype=float))[:, [0]]


class AffineModel:
    """Single QoI a + b*lam on [0, 1]."""

    def __init__(self, a=0.0, b=1.0):
        self.space = ParameterSpace(((0.0, 1.0),))
        self.a, self.b = a, b

    n_params = 1
    n_qoi = 1
    qoi_coords = None

    def evaluate_all(self, params):
        pts = np.atleast_2d(np.asarray(params, dtype=float))
        return self.a + self.b * pts[:, [0]]


class ColumnScaleModel:
    """QoI k is scales[k] * lam (1 parameter, len(scales) QoI)."""

    def __init__(self, scales):
        self.space = ParameterSpace(((0.0, 1.0),))
        self.scales = np.asarray(scales, dtype=float)

    n_params = 1
    qoi_coords = None

    @property
    def n_qoi(self):
        return self.scales.size

    def evaluate_all(self, params):
        pts = np.atleast_2d(np.asarray(params, dtype=float))
        return pts[:, [0]] * self.scales[None, :]


class DuplicateQoiModel:
    """Three QoI on [0,1]^2: lam_0, a copy of lam_0, and lam_1."""

    def __init__(self):
        self.space = ParameterSpace(((0.0, 1.0), (0.0, 1.0)))

    n_params = 2
    n_qoi = 3
    qoi_coords = None

    def evaluate_all(self, params):
        pts = np.atleast_2d(np.asarray(params, dtype=float))
        return np.column_stack([pts[:, 0], pts[:, 0], pts[:, 1]])


@pytest.fixture(scope="session")
def identity_samples_10k():
    model = IdentityModel()
    prior = UniformPrior(model.space)
    samples = evaluate_designs(model, sample_prior(prior, 10_000, seed=99))
    return model, prior, samples


@pytest.fixture(scope="session")
def nonlinear_samples_8k():
    model = Nonlinear2x2()
    prior = UniformPrior(model.space)
    samples = evaluate_designs(model, sample_prior(prior, 8_000, seed=11))
    return model, prior, samples
