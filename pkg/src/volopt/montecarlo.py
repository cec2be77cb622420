"""Sampling oracles, independent of every SDP stage.

All estimators draw from ``numpy.random.Generator`` streams spawned from one
``SeedSequence`` in fixed-size chunks, so results are bit-for-bit
reproducible for a given seed and sample count.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .moments import MeasureSpec
from .problem import SemialgebraicSet, VolumeProblem

CHUNK = 100_000


@dataclass
class SampleBudget:
    n_samples: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("need at least one sample")


@dataclass
class MCEstimate:
    estimate: float
    stderr: float
    hits: int
    n_samples: int


@dataclass
class InclusionResult:
    holds: bool
    witness: np.ndarray | None
    n_samples: int
    n_in_s1: int = 0


def _chunks(n: int, seed: int):
    """Yield ``(generator, size)`` pairs covering ``n`` samples."""
    count = -(-n // CHUNK)
    streams = np.random.SeedSequence(seed).spawn(count)
    for k, ss in enumerate(streams):
        yield np.random.default_rng(ss), min(CHUNK, n - k * CHUNK)


def mc_volume(s: SemialgebraicSet, mu: MeasureSpec, budget: SampleBudget | None = None) -> MCEstimate:
    """``mu(S)`` by plain Monte Carlo with a binomial standard error."""
    budget = budget or SampleBudget()
    hits = 0
    for rng, size in _chunks(budget.n_samples, budget.seed):
        hits += int(np.count_nonzero(s.contains(mu.sample(rng, size))))
    p = hits / budget.n_samples
    mass = mu.mass
    se = np.sqrt(p * (1.0 - p) / budget.n_samples)
    return MCEstimate(mass * p, mass * se, hits, budget.n_samples)


def _box_measure(lo, hi) -> MeasureSpec:
    return MeasureSpec.uniform(lo, hi)


def inclusion_check(s1: SemialgebraicSet, s2: SemialgebraicSet, box, budget: SampleBudget | None = None) -> InclusionResult:
    """Search the box for ``x`` in ``S1`` but not in ``S2``.

    ``holds`` only means no witness turned up; a returned witness is
    re-verified by direct evaluation before it is reported.
    """
    budget = budget or SampleBudget()
    mu = box if isinstance(box, MeasureSpec) else _box_measure(*box)
    n_in = 0
    for rng, size in _chunks(budget.n_samples, budget.seed):
        pts = mu.sample(rng, size)
        in1 = s1.contains(pts)
        n_in += int(np.count_nonzero(in1))
        if s2.is_whole_space or not in1.any():
            continue
        cand = pts[in1]
        bad = ~s2.contains(cand)
        if bad.any():
            w = cand[np.argmax(bad)]
            # guard against a witness that only exists through rounding
            if s1.contains(w[None])[0] and not s2.contains(w[None])[0]:
                return InclusionResult(False, w, budget.n_samples, n_in)
    return InclusionResult(True, None, budget.n_samples, n_in)


def problem_volume(problem: VolumeProblem, a, budget: SampleBudget | None = None) -> MCEstimate:
    """``mu_x(S1(a))`` in the problem's own coordinates."""
    return mc_volume(problem.s1.at(a, problem.n), problem.mu_x, budget)


def problem_inclusion(problem: VolumeProblem, a, budget: SampleBudget | None = None) -> InclusionResult:
    return inclusion_check(problem.s1.at(a, problem.n), problem.s2.at(a, problem.n), problem.x_box, budget)


@dataclass
class GridResult:
    a: np.ndarray
    volume: float
    stderr: float
    n_feasible: int
    n_points: int


def grid_search(problem: VolumeProblem, resolution: int = 21, budget: SampleBudget | None = None,
                inclusion_budget: SampleBudget | None = None) -> GridResult:
    """Exhaustive search over a regular grid of the parameter box.

    Every grid point is screened by an inclusion check, and the survivors
    are ranked by Monte Carlo volume.  One sample set is shared by all grid
    points (common random numbers), so differences between candidates are
    not blurred by sampling noise.
    """
    m = problem.m
    if m > 3:
        raise ValueError("grid search is limited to at most three parameters")
    budget = budget or SampleBudget(20_000)
    inclusion_budget = inclusion_budget or budget
    lo, hi = problem.a_box
    axes = [np.linspace(lo[i], hi[i], resolution) if resolution > 1 else np.array([(lo[i] + hi[i]) / 2]) for i in range(m)]
    rng = np.random.default_rng(np.random.SeedSequence(budget.seed))
    pts = problem.mu_x.sample(rng, budget.n_samples)
    irng = np.random.default_rng(np.random.SeedSequence(inclusion_budget.seed).spawn(1)[0])
    box_pts = _box_measure(*problem.x_box).sample(irng, inclusion_budget.n_samples)
    best, best_hits, n_ok, total = None, -1, 0, 0
    mass = problem.mu_x.mass
    for a in itertools.product(*axes):
        total += 1
        a = np.array(a)
        s1 = problem.s1.at(a, problem.n)
        s2 = problem.s2.at(a, problem.n)
        if not s2.is_whole_space:
            inside = box_pts[s1.contains(box_pts)]
            if inside.size and not s2.contains(inside).all():
                continue
        n_ok += 1
        hits = int(np.count_nonzero(s1.contains(pts)))
        if hits > best_hits:
            best, best_hits = a, hits
    if best is None:
        raise ValueError("no grid point passed the inclusion check")
    p = best_hits / budget.n_samples
    return GridResult(best, mass * p, mass * np.sqrt(p * (1 - p) / budget.n_samples), n_ok, total)
