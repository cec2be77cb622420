import numpy as np
import pytest

from volopt.feasible import build_p21d, membership, solve_feasible_set, trivial_certificate
from volopt.montecarlo import SampleBudget, problem_inclusion
from volopt.poly import parse_polynomial
from volopt.problem import SemialgebraicSet, VariableBlocks, VolumeProblem


def truly_feasible(a):
    # S1(a) = [-sqrt(.25 - a^2), ...] sits inside S2(a) iff a <= -0.2, or S1 is empty
    return a <= -0.2 or abs(a) > 0.5


@pytest.fixture(scope="module")
def cert(illustrative):
    return solve_feasible_set(illustrative)


def test_membership_examples(cert):
    assert membership(cert, -0.3)
    assert not membership(cert, 0.0)
    assert membership(cert, 0.9)


def test_certified_set_shape(cert):
    grid = np.linspace(-1, 1, 201)
    ok = cert.contains(grid)
    assert ok[grid <= -0.3].all()
    assert not ok[(grid > -0.15) & (grid < 0.5)].any()
    assert ok[grid >= 0.6].all()


def test_grid_soundness(cert, illustrative):
    grid = np.linspace(-1, 1, 201)
    for a in grid[cert.contains(grid)]:
        assert truly_feasible(a), a
        assert problem_inclusion(illustrative, [a], SampleBudget(20_000, 1)).holds


def test_certificate_dominates_on_infeasible_samples(cert):
    # on sampled points of K1 with -P2 >= eps_k the certificate is at least one
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, (20_000, 2))
    x, a = pts[:, 0], pts[:, 1]
    in_s1 = 0.25 - a**2 - x**2 >= 0
    bad = -(0.09 - a**2 - 0.8 * a - x**2) >= cert.eps_k
    vals = cert.value(a[in_s1 & bad])
    assert vals.min() >= 1 - 1e-4


def test_objective_decreases_with_degree(illustrative):
    objs = [solve_feasible_set(illustrative, d=d).objective for d in (2, 4, 6, 7)]
    assert all(b <= a + 1e-4 for a, b in zip(objs, objs[1:]))


def test_low_degree_is_coarser(illustrative, cert):
    grid = np.linspace(-1, 1, 201)
    coarse = solve_feasible_set(illustrative, d=2).contains(grid)
    fine = cert.contains(grid)
    assert fine.sum() > coarse.sum()
    # the degrees minimise an integral, so nesting is not guaranteed pointwise;
    # any point only the coarse set keeps lies at the a = 0.5 boundary
    extra = grid[coarse & ~fine]
    assert np.all(np.abs(extra - 0.5) <= 0.05)


def test_whole_space_is_trivial(illustrative):
    prob = VolumeProblem(illustrative.blocks, illustrative.s1)
    cert = solve_feasible_set(prob)
    assert cert.trivial
    assert cert.contains(np.linspace(-1, 1, 11)).all()
    with pytest.raises(ValueError):
        build_p21d(prob)
    assert trivial_certificate(prob).value(0.3) == 0.0


def test_nonnormalized_boxes_map_back():
    # same problem with a in [-2, 2] scaled by two: a' = 2 a
    names = ["x", "b"]
    s1 = SemialgebraicSet((parse_polynomial("0.25 - 0.25 b^2 - x^2", names),))
    s2 = SemialgebraicSet((parse_polynomial("0.09 - 0.25 b^2 - 0.4 b - x^2", names),))
    prob = VolumeProblem(VariableBlocks(("x",), ("b",)), s1, s2, a_box=(-2.0, 2.0))
    prob = prob.with_hierarchy(eps_k=0.01)
    cert = solve_feasible_set(prob)
    assert membership(cert, -0.6) and not membership(cert, 0.0) and membership(cert, 1.8)
