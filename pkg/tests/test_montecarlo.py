import numpy as np
import pytest

from volopt.moments import MeasureSpec
from volopt.montecarlo import (
    SampleBudget,
    grid_search,
    inclusion_check,
    mc_volume,
    problem_inclusion,
    problem_volume,
)
from volopt.poly import parse_polynomial
from volopt.problem import SemialgebraicSet, VariableBlocks, VolumeProblem

SQUARE = MeasureSpec.lebesgue([-1, -1], [1, 1])
DISK = SemialgebraicSet((parse_polynomial("0.25 - x1^2 - x2^2", ["x1", "x2"]),))


def test_disk_area():
    est = mc_volume(DISK, SQUARE, SampleBudget(1_000_000, 3))
    assert est.estimate == pytest.approx(np.pi / 4, abs=0.01)
    assert 0 < est.stderr < 0.002


def test_empty_set():
    empty = SemialgebraicSet((parse_polynomial("-1 - x1^2", ["x1", "x2"]),))
    assert mc_volume(empty, SQUARE, SampleBudget(1000, 0)).estimate == 0.0


def test_illustrative_optimum(illustrative):
    est = problem_volume(illustrative, [-0.2], SampleBudget(1_000_000, 0))
    assert est.estimate == pytest.approx(0.9165, abs=0.003)


def test_seeded_determinism():
    a = mc_volume(DISK, SQUARE, SampleBudget(250_000, 9))
    b = mc_volume(DISK, SQUARE, SampleBudget(250_000, 9))
    assert a.estimate == b.estimate and a.hits == b.hits
    c = mc_volume(DISK, SQUARE, SampleBudget(250_000, 10))
    assert c.hits != a.hits


def test_unbiased_over_seeds():
    ests = [mc_volume(DISK, SQUARE, SampleBudget(20_000, s)) for s in range(50)]
    mean = np.mean([e.estimate for e in ests])
    se = ests[0].stderr / np.sqrt(50)
    assert abs(mean - np.pi / 4) <= 3 * se


def test_inclusion_examples(illustrative):
    assert problem_inclusion(illustrative, [-0.3]).holds
    res = problem_inclusion(illustrative, [0.0])
    assert not res.holds
    x = res.witness[0]
    assert 0.3 < abs(x) <= 0.5


def test_whole_space_inclusion_is_vacuous():
    res = inclusion_check(DISK, SemialgebraicSet(), (-np.ones(2), np.ones(2)), SampleBudget(100, 0))
    assert res.holds and res.witness is None


def test_witnesses_are_verified():
    rng = np.random.default_rng(0)
    for _ in range(10):
        c = rng.uniform(0.05, 0.5)
        s2 = SemialgebraicSet((parse_polynomial(f"{c} - x1^2", ["x1", "x2"]),))
        res = inclusion_check(DISK, s2, (-np.ones(2), np.ones(2)), SampleBudget(20_000, 1))
        if res.witness is not None:
            w = res.witness[None]
            assert DISK.contains(w)[0] and not s2.contains(w)[0]
        else:
            assert c >= 0.25 - 1e-3


def test_grid_search_illustrative(illustrative):
    res = grid_search(illustrative, 201, SampleBudget(200_000, 0))
    assert res.a[0] == pytest.approx(-0.2, abs=0.011)
    assert res.volume == pytest.approx(0.9165, abs=0.01)


def test_degenerate_grid():
    s1 = SemialgebraicSet((parse_polynomial("a^2 - x^2", ["x", "a"]),))
    prob = VolumeProblem(VariableBlocks(("x",), ("a",)), s1, a_box=(0.2, 0.6))
    res = grid_search(prob, 1, SampleBudget(10_000, 0))
    assert res.a[0] == pytest.approx(0.4)
    assert res.n_points == 1


def test_budget_validation():
    with pytest.raises(ValueError):
        SampleBudget(0)
