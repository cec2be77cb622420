"""Inner approximation of the feasible parameter set.

Finds a polynomial ``P(a)`` of degree ``d`` with minimal integral over the
parameter box such that ``P - 1`` is certified nonnegative on every piece
``K1 ∩ {-P_2i >= eps_k}`` and ``P`` itself is certified nonnegative on the
box.  Any ``a`` with ``P(a) <= 1 - eps_a`` then satisfies ``S1(a) ⊆ S2(a)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .moments import MeasureSpec, box_moments
from .poly import Polynomial, basis_size
from .problem import VolumeProblem
from .sdp import ProgramBuilder, SolveReport, solve
from .sos import add_qm_constraint, embed_operator

log = logging.getLogger(__name__)


@dataclass
class FeasibleSetCertificate:
    """``poly_a`` is expressed over the normalised parameter box ``[-1, 1]^m``;
    use :meth:`value` / :meth:`contains` with original coordinates."""

    poly_a: Polynomial
    eps_a: float
    eps_k: float
    objective: float
    degree: int
    problem: VolumeProblem | None = None
    report: SolveReport | None = None
    trivial: bool = False
    extra: dict = field(default_factory=dict)

    def value(self, a) -> np.ndarray | float:
        u = np.asarray(a, dtype=float)
        if self.problem is not None:
            u = self.problem.a_to_unit(u)
        if self.poly_a.nvars == 1 and u.ndim == 1 and u.size != 1:
            u = u[:, None]
        return self.poly_a.evaluate(u)

    def contains(self, a) -> np.ndarray | bool:
        """``P(a) <= 1 - eps_a`` (and ``a`` inside the box)."""
        val = np.asarray(self.value(a)) <= 1.0 - self.eps_a
        if self.problem is not None:
            u = np.atleast_1d(self.problem.a_to_unit(np.asarray(a, dtype=float)))
            if self.poly_a.nvars == 1 and u.ndim == 1 and u.size != 1:
                u = u[:, None]
            inside = np.all(np.abs(np.atleast_2d(u)) <= 1.0 + 1e-12, axis=-1)
            val = val & (inside if val.ndim else bool(inside[0]))
        return val if val.ndim else bool(val)

    def membership_poly(self) -> Polynomial:
        """``1 - eps_a - P(a)``: nonnegative exactly on the certified set."""
        return (1.0 - self.eps_a) - self.poly_a


def membership(cert: FeasibleSetCertificate, a) -> bool:
    return bool(cert.contains(a))


def trivial_certificate(problem: VolumeProblem) -> FeasibleSetCertificate:
    """Certificate for an unconstrained S2: ``P = 0``, so every a qualifies."""
    h = problem.hierarchy
    return FeasibleSetCertificate(
        Polynomial(problem.m), h.eps_a, h.eps_k, 0.0, 0, problem, None, trivial=True
    )


def _budget(problem: VolumeProblem, d: int) -> int:
    top = max(d, problem.s1.max_degree, problem.s2.max_degree, 2)
    return 2 * ((top + 1) // 2)


def build_p21d(problem: VolumeProblem, d: int | None = None):
    """Assemble the feasible-set SDP for the normalised problem.

    Returns ``(program, info)``; ``info`` carries the decision slices needed
    to read the polynomial back.
    """
    prob = problem.normalized()
    h = prob.hierarchy
    d = h.d if d is None else d
    if prob.s2.is_whole_space:
        raise ValueError("S2 is the whole space; no feasible-set program is needed")
    if d < 1:
        raise ValueError("feasible-set degree must be at least 1")
    n, m, nv = prob.n, prob.m, prob.nvars
    if m == 0:
        raise ValueError("problem has no parameters")
    b = ProgramBuilder("feasible-set")
    pa = b.add_variables("p_a", basis_size(m, d))
    ya = box_moments(MeasureSpec.lebesgue(-np.ones(m), np.ones(m)), d)
    b.set_objective(pa, ya.values)

    z = Polynomial.variables(nv)
    budget = _budget(prob, d)
    ball = float(nv) - sum(zi * zi for zi in z)
    base_gens = [Polynomial.constant(nv, 1.0)] + prob.k1_generators() + [ball]
    embed = embed_operator(m, d, nv, range(n, nv), budget)
    one = np.zeros(basis_size(nv, budget))
    one[0] = -1.0
    multipliers = {}
    for i, p2 in enumerate(prob.s2.polys):
        gens = base_gens + [-p2 - h.eps_k]
        multipliers[f"k{i}"] = add_qm_constraint(b, nv, budget, [(pa, embed)], one, gens, f"k{i}")

    a = Polynomial.variables(m)
    a_budget = 2 * ((d + 1) // 2)
    a_gens = [Polynomial.constant(m, 1.0)] + [1.0 - ai * ai for ai in a] + [float(m) - sum(ai * ai for ai in a)]
    a_embed = embed_operator(m, d, m, range(m), a_budget)
    multipliers["box"] = add_qm_constraint(b, m, a_budget, [(pa, a_embed)], np.zeros(basis_size(m, a_budget)), a_gens, "box")
    prog = b.build("min")
    return prog, {"p_a": pa, "degree": d, "multipliers": multipliers, "budget": budget}


def solve_feasible_set(problem: VolumeProblem, d: int | None = None, **solve_kw) -> FeasibleSetCertificate:
    """Build and solve the feasible-set program; trivial when S2 is unconstrained."""
    if problem.s2.is_whole_space:
        return trivial_certificate(problem)
    prog, info = build_p21d(problem, d)
    log.info("%s", prog.summary())
    res = solve(prog, **solve_kw)
    coeffs = res.gamma[info["p_a"]]
    poly = Polynomial.from_coeffs(problem.m, coeffs, info["degree"])
    h = problem.hierarchy
    return FeasibleSetCertificate(
        poly, h.eps_a, h.eps_k, res.report.objective, info["degree"], problem, res.report,
        extra={"budget": info["budget"]},
    )
