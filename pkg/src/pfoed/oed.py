"""Discrete design-space search: ranking, exhaustive argmax, greedy selection."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

from .core import DesignCandidate, SampleSet
from .density import MAX_KDE_DIMS, BandwidthRule, NoiseModel
from .errors import (
    AllCentersInfeasible,
    DegenerateDimension,
    DimensionCapExceeded,
    EmptyDesignSpace,
    InfeasibleObservation,
)
from .inference import PUSH_FLOOR
from .information import expected_information_gain

__all__ = [
    "DesignSpace",
    "DesignResult",
    "EigReport",
    "rank_designs",
    "exhaustive_oed",
    "greedy_oed",
    "enumerate_subsets",
    "MAX_SUBSET_CANDIDATES",
]

# Cap on enumerated multi-sensor subsets; beyond this, use the greedy search.
MAX_SUBSET_CANDIDATES = 20_000

# Per-design failures that demote a design instead of aborting the study.
_DESIGN_ERRORS = (AllCentersInfeasible, DegenerateDimension, InfeasibleObservation)

_STATUS_NAMES = {
    AllCentersInfeasible: "infeasible",
    DegenerateDimension: "degenerate",
    InfeasibleObservation: "infeasible",
}


@dataclass(frozen=True)
class DesignSpace:
    """An ordered set of candidate designs with dense ids 0..Z-1."""

    candidates: tuple[DesignCandidate, ...]
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        ids = [c.id for c in self.candidates]
        if ids != list(range(len(ids))):
            raise ValueError("candidate ids must be dense 0..Z-1 in order")

    def __len__(self) -> int:
        return len(self.candidates)


@dataclass(frozen=True)
class DesignResult:
    """Outcome of evaluating one design: a gain, or a recorded failure."""

    design_id: int
    coords: Optional[tuple[tuple[float, ...], ...]]
    eig: Optional[float]
    n_infeasible_centers: int
    n_samples: int
    m_centers: int
    status: str  # "ok", "infeasible", or "degenerate"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True)
class EigReport:
    """Per-design gains with a deterministic ranking.

    Ranking: evaluated designs by gain descending, ties by ascending id;
    failed designs last, by ascending id.  ``chosen`` is the top of the
    ranking.
    """

    rows: tuple[DesignResult, ...]
    ranking: tuple[int, ...]

    @property
    def chosen(self) -> int:
        return self.ranking[0]

    def row(self, design_id: int) -> DesignResult:
        for r in self.rows:
            if r.design_id == design_id:
                return r
        raise KeyError(f"no row for design {design_id}")


def _rank(rows: list[DesignResult]) -> tuple[int, ...]:
    ok = sorted((r for r in rows if r.ok), key=lambda r: (-r.eig, r.design_id))
    failed = sorted((r for r in rows if not r.ok), key=lambda r: r.design_id)
    return tuple(r.design_id for r in ok + failed)


def _evaluate_one(
    samples: SampleSet,
    candidate: DesignCandidate,
    noise: NoiseModel,
    m_centers: Optional[int],
    rule: BandwidthRule,
    floor: float,
) -> DesignResult:
    try:
        est = expected_information_gain(
            samples, candidate, noise, m_centers=m_centers, rule=rule, floor=floor)
    except _DESIGN_ERRORS as exc:
        return DesignResult(
            design_id=candidate.id,
            coords=candidate.coords,
            eig=None,
            n_infeasible_centers=m_centers or samples.n,
            n_samples=samples.n,
            m_centers=m_centers or samples.n,
            status=_STATUS_NAMES[type(exc)],
        )
    return DesignResult(
        design_id=candidate.id,
        coords=candidate.coords,
        eig=est.eig,
        n_infeasible_centers=est.n_infeasible_centers,
        n_samples=est.n_samples,
        m_centers=est.m_centers,
        status="ok",
    )


def rank_designs(
    samples: SampleSet,
    space: DesignSpace,
    noise: NoiseModel,
    m_centers: Optional[int] = None,
    rule: BandwidthRule = "silverman",
    floor: float = PUSH_FLOOR,
    threads: int = 1,
) -> EigReport:
    """Expected information gain for every candidate, ranked.

    Evaluations are independent; with ``threads > 1`` they run on a thread
    pool and are merged back in candidate order, so the report is identical
    for any thread count.
    """
    if len(space) == 0:
        raise EmptyDesignSpace("design space holds no candidates")

    def job(candidate: DesignCandidate) -> DesignResult:
        return _evaluate_one(samples, candidate, noise, m_centers, rule, floor)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(job, space.candidates))
    else:
        rows = [job(c) for c in space.candidates]
    return EigReport(rows=tuple(rows), ranking=_rank(rows))


def exhaustive_oed(report: EigReport) -> int:
    """Id of the gain-maximizing design in a ranked report."""
    if not report.rows:
        raise EmptyDesignSpace("empty report")
    top = report.row(report.ranking[0])
    if not top.ok:
        raise EmptyDesignSpace("no design could be evaluated")
    return top.design_id


def _combine(chosen: list[DesignCandidate], extra: DesignCandidate) -> DesignCandidate:
    indices: list[int] = []
    coords: list[tuple[float, ...]] = []
    have_coords = True
    for cand in chosen + [extra]:
        indices.extend(cand.qoi_indices)
        if cand.coords is None:
            have_coords = False
        else:
            coords.extend(cand.coords)
    return DesignCandidate(
        id=extra.id,
        qoi_indices=tuple(indices),
        coords=tuple(coords) if have_coords else None,
    )


def greedy_oed(
    samples: SampleSet,
    space: DesignSpace,
    k: int,
    noise: NoiseModel,
    m_centers: Optional[int] = None,
    rule: BandwidthRule = "silverman",
    floor: float = PUSH_FLOOR,
    threads: int = 1,
) -> tuple[list[int], list[EigReport]]:
    """Pick k candidates one at a time, maximizing the combined design's gain.

    Step t evaluates, for every unchosen candidate, the gain of the combined
    design (chosen so far plus the candidate) over a single t-dimensional data
    space, then appends the argmax (ties to the lowest id).  Returns the
    chosen ids and the per-step reports, whose rows carry the combined-design
    gains.
    """
    if len(space) == 0:
        raise EmptyDesignSpace("design space holds no candidates")
    if not 1 <= k <= len(space):
        raise ValueError(f"k must lie in [1, {len(space)}]")
    step_dims = max(c.dims for c in space.candidates) * k
    if step_dims > MAX_KDE_DIMS:
        raise DimensionCapExceeded(
            f"combined design dimension {step_dims} exceeds the KDE cap of {MAX_KDE_DIMS}")

    chosen_ids: list[int] = []
    chosen: list[DesignCandidate] = []
    reports: list[EigReport] = []
    for _ in range(k):
        taken = set()
        for cand in chosen:
            taken.update(cand.qoi_indices)

        def job(candidate: DesignCandidate) -> Optional[DesignResult]:
            if candidate.id in chosen_ids or taken & set(candidate.qoi_indices):
                return None
            return _evaluate_one(
                samples, _combine(chosen, candidate), noise, m_centers, rule, floor)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                rows = [r for r in pool.map(job, space.candidates) if r is not None]
        else:
            rows = [r for r in map(job, space.candidates) if r is not None]
        if not rows:
            raise EmptyDesignSpace("no eligible candidates remain")
        report = EigReport(rows=tuple(rows), ranking=_rank(rows))
        top_id = report.ranking[0]
        top = report.row(top_id)
        if not top.ok:
            raise EmptyDesignSpace("no remaining candidate could be evaluated")
        chosen_ids.append(top_id)
        chosen.append(space.candidates[top_id])
        reports.append(report)
    return chosen_ids, reports


def enumerate_subsets(space: DesignSpace, k: int) -> DesignSpace:
    """Design space of all k-subsets of candidates, combined into one design each.

    Supports the exhaustive multi-sensor search for small problems; capped at
    MAX_SUBSET_CANDIDATES subsets and the KDE dimension limit.
    """
    if len(space) == 0:
        raise EmptyDesignSpace("design space holds no candidates")
    if not 1 <= k <= len(space):
        raise ValueError(f"k must lie in [1, {len(space)}]")
    combined: list[DesignCandidate] = []
    for new_id, subset in enumerate(combinations(space.candidates, k)):
        if new_id >= MAX_SUBSET_CANDIDATES:
            raise ValueError(
                f"more than {MAX_SUBSET_CANDIDATES} subsets; use the greedy search")
        dims = sum(c.dims for c in subset)
        if dims > MAX_KDE_DIMS:
            raise DimensionCapExceeded(
                f"combined design dimension {dims} exceeds the KDE cap of {MAX_KDE_DIMS}")
        merged = _combine(list(subset[:-1]), subset[-1])
        combined.append(DesignCandidate(
            id=new_id, qoi_indices=merged.qoi_indices, coords=merged.coords))
    return DesignSpace(
        candidates=tuple(combined),
        description=f"{k}-subsets of: {space.description}",
    )
