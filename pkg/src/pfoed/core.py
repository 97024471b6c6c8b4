"""Parameter/data-space types, uniform priors, sampling, and design slicing."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import IndexOutOfRange, ModelEvaluationFailed
from .rng import stream

__all__ = [
    "ParameterSpace",
    "UniformPrior",
    "SampleSet",
    "DesignCandidate",
    "DataSpace",
    "sample_prior",
    "prior_density",
    "evaluate_designs",
    "select_design",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ParameterSpace:
    """A compact axis-aligned box of admissible parameter values."""

    bounds: tuple[tuple[float, float], ...]

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        object.__setattr__(self, "bounds", bounds)
        if not bounds:
            raise ValueError("parameter space needs at least one dimension")
        for d, (lo, hi) in enumerate(bounds):
            if not (np.isfinite(lo) and np.isfinite(hi)):
                raise ValueError(f"dimension {d}: bounds must be finite")
            if not lo < hi:
                raise ValueError(f"dimension {d}: lower bound must be below upper")

    @property
    def dims(self) -> int:
        return len(self.bounds)

    @property
    def lows(self) -> np.ndarray:
        return np.array([b[0] for b in self.bounds])

    @property
    def highs(self) -> np.ndarray:
        return np.array([b[1] for b in self.bounds])

    def volume(self) -> float:
        return float(np.prod(self.highs - self.lows))

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of rows lying inside the box (boundary included)."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return np.all((pts >= self.lows) & (pts <= self.highs), axis=1)


@dataclass(frozen=True)
class UniformPrior:
    """Uniform probability density over a parameter space.

    Anything with ``density(points)`` and ``sample(n, rng)`` can stand in for
    this class wherever a prior is accepted, so non-uniform priors remain
    possible.
    """

    space: ParameterSpace

    def density(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        inside = self.space.contains(pts)
        return np.where(inside, 1.0 / self.space.volume(), 0.0)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        u = rng.random((n, self.space.dims))
        return self.space.lows + u * (self.space.highs - self.space.lows)


@dataclass(frozen=True)
class SampleSet:
    """Prior parameter samples plus, once evaluated, their QoI values.

    The one reusable asset of the offline stage: all candidate QoI are
    evaluated per sample, so every design afterwards is a column selection.
    Arrays are read-only; instances are safe to share across threads.
    """

    params: np.ndarray
    seed: int
    qoi: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "params", _readonly(self.params))
        if self.qoi is not None:
            q = _readonly(self.qoi)
            if q.shape[0] != self.params.shape[0]:
                raise ValueError("qoi must have one row per sample")
            object.__setattr__(self, "qoi", q)

    @property
    def n(self) -> int:
        return self.params.shape[0]

    @property
    def n_qoi(self) -> int:
        if self.qoi is None:
            raise ValueError("sample set has no QoI evaluations yet")
        return self.qoi.shape[1]

    def with_qoi(self, qoi: np.ndarray) -> "SampleSet":
        return SampleSet(params=self.params, seed=self.seed, qoi=qoi)


@dataclass(frozen=True)
class DesignCandidate:
    """A subset of QoI columns forming one experimental design."""

    id: int
    qoi_indices: tuple[int, ...]
    coords: Optional[tuple[tuple[float, ...], ...]] = None

    def __post_init__(self):
        idx = tuple(int(i) for i in self.qoi_indices)
        object.__setattr__(self, "qoi_indices", idx)
        if not idx:
            raise IndexOutOfRange("design must select at least one QoI column")
        if len(set(idx)) != len(idx):
            raise IndexOutOfRange(f"design {self.id}: duplicate QoI indices {idx}")
        if self.coords is not None:
            object.__setattr__(
                self, "coords", tuple(tuple(float(c) for c in xy) for xy in self.coords)
            )

    @property
    def dims(self) -> int:
        return len(self.qoi_indices)


@dataclass(frozen=True)
class DataSpace:
    """The sample cloud of one design: selected QoI columns plus their ranges."""

    cloud: np.ndarray
    per_dim_range: tuple[tuple[float, float], ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "cloud", _readonly(np.atleast_2d(self.cloud)))
        rng = tuple(
            (float(c.min()), float(c.max())) for c in self.cloud.T
        ) if self.cloud.size else ()
        object.__setattr__(self, "per_dim_range", rng)

    @property
    def dims(self) -> int:
        return self.cloud.shape[1]

    @property
    def n(self) -> int:
        return self.cloud.shape[0]


def sample_prior(prior: UniformPrior, n_samples: int, seed: int) -> SampleSet:
    """Draw i.i.d. prior samples from the (seed, "prior") stream."""
    if n_samples < 0:
        raise ValueError("n_samples must be nonnegative")
    params = prior.sample(n_samples, stream(seed, "prior"))
    return SampleSet(params=params, seed=seed)


def prior_density(prior: UniformPrior, lam: Sequence[float]) -> float:
    """Prior density at a single parameter point."""
    lam = np.asarray(lam, dtype=np.float64)
    if not np.all(np.isfinite(lam)):
        raise ValueError("parameter point must be finite")
    return float(prior.density(lam)[0])


def evaluate_designs(model, samples: SampleSet) -> SampleSet:
    """Evaluate every candidate QoI of the model at every sample.

    Pure in (model, params): repeated calls return identical matrices.
    """
    qoi = np.asarray(model.evaluate_all(samples.params), dtype=np.float64)
    if qoi.ndim == 1:
        qoi = qoi[:, None]
    bad = ~np.all(np.isfinite(qoi), axis=1)
    if bad.any():
        raise ModelEvaluationFailed(int(np.argmax(bad)))
    return samples.with_qoi(qoi)


def select_design(samples: SampleSet, design: DesignCandidate) -> DataSpace:
    """Slice the QoI matrix down to one design's columns, in design order."""
    if samples.qoi is None:
        raise ValueError("sample set has no QoI evaluations; run evaluate_designs first")
    k = samples.qoi.shape[1]
    for idx in design.qoi_indices:
        if not 0 <= idx < k:
            raise IndexOutOfRange(f"QoI index {idx} outside [0, {k})")
    return DataSpace(cloud=samples.qoi[:, list(design.qoi_indices)])
