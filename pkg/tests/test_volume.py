import numpy as np
import pytest

from volopt.feasible import solve_feasible_set
from volopt.moments import MeasureSpec, moment_matrix
from volopt.poly import parse_polynomial
from volopt.problem import SemialgebraicSet, VariableBlocks, VolumeProblem
from volopt.sdp import residuals
from volopt.volume import build_p2m, min_relaxation_order, solve_volume

NAMES = ["x1", "x2", "a"]


def fixed_set_problem(*polys):
    s1 = SemialgebraicSet(tuple(parse_polynomial(p, NAMES) for p in polys))
    return VolumeProblem(VariableBlocks(("x1", "x2"), ("a",)), s1)


@pytest.fixture(scope="module")
def illustrative_r4(illustrative):
    cert = solve_feasible_set(illustrative)
    return cert, solve_volume(illustrative, cert, r=4)


@pytest.mark.parametrize("r", [1, 2, 3])
def test_whole_box_volume_is_attained(r):
    sol = solve_volume(fixed_set_problem("1 - x1^2", "1 - x2^2"), r=r)
    assert sol.report.status == "optimal"
    assert sol.volume_estimate == pytest.approx(4.0, abs=1e-5)


def test_disk_bounds_tighten_from_above():
    # the bounds approach pi/4 slowly; desk-scale orders stay well above it
    prob = fixed_set_problem("0.25 - x1^2 - x2^2")
    vals = [solve_volume(prob, r=r, backend="clarabel").volume_estimate for r in (2, 3, 4)]
    assert all(v >= np.pi / 4 - 1e-6 for v in vals)
    assert vals[0] >= vals[1] - 1e-6 >= vals[2] - 2e-6


def test_normalised_parameter_mass(illustrative_r4):
    _, sol = illustrative_r4
    assert sol.y_a.values[0] == pytest.approx(1.0, abs=1e-6)
    assert sol.volume_estimate >= 0


def test_minimum_order_upper_bounds_truth(illustrative_r4):
    _, sol = illustrative_r4
    assert sol.relaxation_order == 4
    assert sol.volume_estimate >= 0.9165 - 0.02
    assert -0.5 <= sol.a_hat[0] <= 0.0


def test_program_contract(illustrative, illustrative_r4):
    cert, sol = illustrative_r4
    prog, info = build_p2m(illustrative, cert, 4)
    assert prog.sense == "max"
    gamma = np.zeros(prog.n)
    gamma[info["y"]] = sol.y.values
    gamma[info["y_a"]] = sol.y_a.values
    r = residuals(prog, gamma)
    assert r.primal <= 1e-6 and r.psd_violation >= -1e-6


def test_order_too_low(illustrative):
    cert = solve_feasible_set(illustrative)
    assert min_relaxation_order(illustrative, cert) == 4
    with pytest.raises(ValueError):
        build_p2m(illustrative, cert, 3)
    with pytest.raises(ValueError):
        build_p2m(illustrative, None, 4)


def test_dirac_parameter_moments_give_atom():
    # S1 depends on a only through a box of a single point: a in [0.3, 0.3 + tiny]
    s1 = SemialgebraicSet((parse_polynomial("1 - x1^2", NAMES),))
    prob = VolumeProblem(VariableBlocks(("x1", "x2"), ("a",)), s1, a_box=(0.3, 0.3 + 1e-6))
    sol = solve_volume(prob, r=1)
    assert sol.a_hat[0] == pytest.approx(0.3, abs=1e-5)


def test_diffuse_flag_on_flat_objective():
    # volume does not depend on a, so the optimal parameter measure need not be an atom
    sol = solve_volume(fixed_set_problem("1 - x1^2"), r=2)
    assert sol.eig_ratio >= 0.0
    assert isinstance(sol.diffuse, bool)
    assert any("upper bound" in n for n in sol.notes)


def test_parameter_moment_matrix_psd(illustrative_r4):
    _, sol = illustrative_r4
    assert moment_matrix(sol.y_a, 4).min_eigenvalue() >= -1e-6


def test_lebesgue_mu_default():
    prob = fixed_set_problem("1 - x1^2")
    assert prob.mu_x.kind == MeasureSpec.lebesgue([-1, -1], [1, 1]).kind
