"""SOS dual of the moment relaxation.

Finds ``beta`` and a polynomial ``W(x, a)`` with ``W >= 1`` on ``K1``,
``W >= 0`` on the box (or globally), and ``beta >= ∫ W dmu_x`` on the
certified parameter set, minimising ``beta``.  The maximiser of
``∫ W dmu_x`` over the certified set estimates the optimal parameter.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .feasible import FeasibleSetCertificate, solve_feasible_set
from .moments import MeasureSpec, box_moments
from .poly import Polynomial, basis_size, monomial_basis
from .problem import VolumeProblem
from .sdp import ProgramBuilder, SolveReport, solve
from .sos import add_qm_constraint, embed_operator

log = logging.getLogger(__name__)


def integration_operator(n: int, m: int, degree: int, mu_x: MeasureSpec) -> sp.csr_matrix:
    """Coefficient map ``W(x, a) -> ∫ W dmu_x`` (a polynomial in ``a``)."""
    if mu_x.nvars != n:
        raise ValueError("measure dimension differs from the x block")
    yx = box_moments(mu_x, degree).values
    joint = monomial_basis(n + m, degree)
    bx = monomial_basis(n, degree)
    ba = monomial_basis(m, degree)
    xi = bx.lookup(joint.exps[:, :n])
    ai = ba.lookup(joint.exps[:, n:])
    return sp.csr_matrix((yx[xi], (ai, np.arange(len(joint)))), shape=(len(ba), len(joint)))


def integrate_over_x(w: Polynomial, mu_x: MeasureSpec) -> Polynomial:
    """``∫ w(x, a) dmu_x(x)`` for ``w`` over ``(x, a)`` with ``x`` first."""
    if mu_x.kind not in ("lebesgue-box", "uniform-box", "dirac", "product"):
        raise ValueError(f"unsupported measure kind {mu_x.kind!r}")
    n = mu_x.nvars
    m = w.nvars - n
    if m < 0:
        raise ValueError("polynomial has fewer variables than the measure")
    deg = w.degree
    op = integration_operator(n, m, deg, mu_x)
    return Polynomial.from_coeffs(m, op @ w.coeffs(deg), deg)


@dataclass
class DualCertificate:
    """Polynomials are over the normalised box; helpers accept original
    coordinates when the certificate carries its problem."""

    beta: float
    w_poly: Polynomial
    integrated_w: Polynomial
    degree: int
    report: SolveReport
    problem: VolumeProblem | None = None
    gap: float | None = None
    local_positivity: bool = True
    extra: dict = field(default_factory=dict)

    def _unit(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.problem is None:
            return pts
        center, half = self.problem._affine()
        return (pts - center) / half

    def w_value(self, points) -> np.ndarray:
        """``W`` at joint points ``(x, a)`` (rows)."""
        return np.atleast_1d(self.w_poly.evaluate(self._unit(points)))

    def integrated_value(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        if a.ndim == 0 or (a.ndim == 1 and self.integrated_w.nvars == 1):
            a = a.reshape(-1, 1)
        u = np.atleast_2d(a)
        if self.problem is not None:
            u = self.problem.a_to_unit(u)
        return np.atleast_1d(self.integrated_w.evaluate(u))


def build_pd2f(problem: VolumeProblem, cert: FeasibleSetCertificate | None, d_w: int | None = None,
               local_positivity: bool | None = None):
    prob = problem.normalized()
    h = prob.hierarchy
    d_w = h.dual_degree if d_w is None else d_w
    if not prob.s2.is_whole_space and cert is None:
        raise ValueError("a feasible-set certificate is required when S2 is constrained")
    if cert is not None and cert.trivial:
        cert = None
    n, m, nv = prob.n, prob.m, prob.nvars
    gens = prob.k1_generators()
    if d_w < max(g.degree for g in gens):
        raise ValueError(f"dual degree {d_w} is below the degree of the K1 description")
    if cert is not None and d_w < cert.poly_a.degree:
        raise ValueError(f"dual degree {d_w} is below the certificate degree {cert.poly_a.degree}")
    if local_positivity is None:
        local_positivity = nv <= 4
    budget = 2 * ((d_w + 1) // 2)

    b = ProgramBuilder(f"sos dual d_w={d_w}")
    beta = b.add_variables("beta", 1)
    w = b.add_variables("w", basis_size(nv, d_w))
    b.set_objective(beta, [1.0])
    b.add_block("nonneg", 1, [(beta, sp.identity(1, format="csr"))], name="beta>=0")

    one = Polynomial.constant(nv, 1.0)
    z = Polynomial.variables(nv)
    W = embed_operator(nv, d_w, nv, range(nv), budget)
    c1 = np.zeros(basis_size(nv, budget))
    c1[0] = -1.0
    mult = {}
    mult["K1"] = add_qm_constraint(b, nv, budget, [(w, W)], c1, [one] + gens, "K1")
    pos_gens = [one] + ([1.0 - zi * zi for zi in z] if local_positivity else [])
    if not local_positivity and d_w % 2:
        raise ValueError("global nonnegativity needs an even dual degree")
    mult["pos"] = add_qm_constraint(b, nv, budget, [(w, W)], np.zeros(basis_size(nv, budget)), pos_gens, "pos")

    a = Polynomial.variables(m)
    one_a = Polynomial.constant(m, 1.0)
    a_gens = [one_a] + [1.0 - ai * ai for ai in a]
    if cert is not None:
        a_gens.append(cert.membership_poly())
    integ = integration_operator(n, m, d_w, prob.mu_x)
    A_embed = embed_operator(m, d_w, m, range(m), budget)
    beta_col = np.zeros((basis_size(m, budget), 1))
    beta_col[0, 0] = 1.0
    mult["A"] = add_qm_constraint(
        b, m, budget, [(beta, sp.csr_matrix(beta_col)), (w, -(A_embed @ integ))], np.zeros(basis_size(m, budget)), a_gens, "A"
    )
    prog = b.build("min")
    return prog, {"beta": beta, "w": w, "d_w": d_w, "local_positivity": local_positivity, "multipliers": mult}


def argmax_on_certified_set(dual: DualCertificate, cert: FeasibleSetCertificate | None,
                            points_per_dim: int | None = None):
    """Grid maximiser of ``∫ W dmu_x`` over the certified parameter set.

    Grid sizes default to 10001 points for one parameter, 401 per axis for
    two and 41 per axis beyond that.
    """
    prob = dual.problem
    m = dual.integrated_w.nvars
    if points_per_dim is None:
        points_per_dim = {1: 10001, 2: 401}.get(m, 41)
    axes = [np.linspace(-1.0, 1.0, points_per_dim)] * m
    grid = np.array(list(itertools.product(*axes))) if m > 1 else axes[0][:, None]
    vals = np.atleast_1d(dual.integrated_w.evaluate(grid))
    if cert is not None and not cert.trivial:
        ok = np.atleast_1d(cert.poly_a.evaluate(grid)) <= 1.0 - cert.eps_a
        if not ok.any():
            raise ValueError("certified parameter set is empty on the grid")
        vals = np.where(ok, vals, -np.inf)
    k = int(np.argmax(vals))
    u = grid[k]
    a = prob.a_from_unit(u) if prob is not None else u
    return np.asarray(a, dtype=float), float(vals[k])


def solve_dual(problem: VolumeProblem, cert: FeasibleSetCertificate | None = None, d_w: int | None = None,
               local_positivity: bool | None = None, **solve_kw) -> DualCertificate:
    if cert is None and not problem.s2.is_whole_space:
        cert = solve_feasible_set(problem, **solve_kw)
    prog, info = build_pd2f(problem, cert, d_w, local_positivity)
    log.info("%s", prog.summary())
    res = solve(prog, **solve_kw)
    nv, m = problem.nvars, problem.m
    wp = Polynomial.from_coeffs(nv, res.gamma[info["w"]], info["d_w"])
    iw = integrate_over_x(wp, problem.normalized().mu_x) if wp.degree else Polynomial.constant(m, float(
        wp.coeff((0,) * nv) * problem.normalized().mu_x.mass))
    return DualCertificate(
        beta=float(res.gamma[info["beta"]][0]),
        w_poly=wp,
        integrated_w=iw,
        degree=info["d_w"],
        report=res.report,
        problem=problem,
        local_positivity=info["local_positivity"],
    )
