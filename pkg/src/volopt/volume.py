"""Moment relaxation of the volume problem.

Decision variables are the moments ``y`` of a measure on ``K1`` (over the
joint ``(x, a)`` vector) and the moments ``y_a`` of a probability measure on
the certified parameter set.  ``y`` is dominated by the product ``y_a x y_x``
in the moment-matrix order, which is linear in ``y_a`` because ``y_x`` (the
reference measure) is fixed data.  Maximising ``y_0`` bounds the optimal
volume from above; the first moments of ``y_a`` estimate the maximiser.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .feasible import FeasibleSetCertificate, solve_feasible_set
from .moments import MomentSequence, box_moments, half_degree, localizing_operator, product_operator
from .poly import Polynomial, basis_size
from .problem import VolumeProblem
from .sdp import ProgramBuilder, SolveReport, solve
from .sdp.program import triu_to_full

log = logging.getLogger(__name__)

DIFFUSE_RATIO = 0.1


def min_relaxation_order(problem: VolumeProblem, cert: FeasibleSetCertificate | None) -> int:
    r = max(half_degree(p) for p in problem.s1.polys) if problem.s1.polys else 1
    if cert is not None and not cert.trivial:
        r = max(r, half_degree(cert.poly_a))
    return max(r, 1)


def build_p2m(problem: VolumeProblem, cert: FeasibleSetCertificate | None, r: int | None = None,
              box_slack: bool | None = None):
    """Assemble the moment program on the normalised problem.

    ``box_slack`` adds localizing constraints of the box polynomials on the
    slack measure ``y_a x y_x - y``; it tightens the relaxation and is the
    moment-side counterpart of asking the dual polynomial to be nonnegative
    on the box only.  Defaults to on for at most four joint variables.
    """
    prob = problem.normalized()
    h = prob.hierarchy
    r = h.r if r is None else r
    if not prob.s2.is_whole_space and cert is None:
        raise ValueError("a feasible-set certificate is required when S2 is constrained")
    if cert is not None and cert.trivial:
        cert = None
    rmin = min_relaxation_order(prob, cert)
    if r < rmin:
        raise ValueError(f"relaxation order {r} is below the minimum {rmin}")
    n, m, nv = prob.n, prob.m, prob.nvars
    if box_slack is None:
        box_slack = nv <= 4
    order = 2 * r
    S = basis_size(nv, order)

    b = ProgramBuilder(f"moment r={r}")
    y = b.add_variables("y", S)
    ya = b.add_variables("y_a", basis_size(m, order))
    b.set_objective(np.array([y.start]), [1.0])

    def loc(name, var, nvars, g, half):
        k = basis_size(nvars, half)
        b.add_block("psd", k, [(var, localizing_operator(g, half, order))], name=name)

    one = Polynomial.constant(nv, 1.0)
    z = Polynomial.variables(nv)
    loc("M(y)", y, nv, one, r)
    for j, g in enumerate(prob.k1_generators()):
        half = r - half_degree(g)
        if half >= 0:
            loc(f"M(y;g{j})", y, nv, g, half)

    e0 = np.zeros((1, basis_size(m, order)))
    e0[0, 0] = 1.0
    b.add_equalities([(ya, sp.csr_matrix(e0))], [1.0])
    one_a = Polynomial.constant(m, 1.0)
    a = Polynomial.variables(m)
    loc("M(y_a)", ya, m, one_a, r)
    if cert is not None:
        ga = cert.membership_poly()
        loc("M(y_a;A_d)", ya, m, ga, r - half_degree(ga))
    for i, ai in enumerate(a):
        loc(f"M(y_a;box{i})", ya, m, 1.0 - ai * ai, r - 1)

    yx = box_moments(prob.mu_x, order)
    prod = product_operator(yx.values, n, m, order, x_first=True)
    slack_gens = [one] + ([1.0 - zi * zi for zi in z] if box_slack else [])
    for j, g in enumerate(slack_gens):
        half = r - half_degree(g)
        L = localizing_operator(g, half, order)
        b.add_block("psd", basis_size(nv, half), [(ya, L @ prod), (y, -L)], name=f"M(slack;g{j})")
    prog = b.build("max")
    return prog, {"y": y, "y_a": ya, "r": r, "box_slack": box_slack}


@dataclass
class VolumeSolution:
    a_hat: np.ndarray
    volume_estimate: float
    relaxation_order: int
    y: MomentSequence
    y_a: MomentSequence
    report: SolveReport
    diffuse: bool = False
    eig_ratio: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def reliable(self) -> bool:
        return self.report.status == "optimal"


def extract_solution(gamma: np.ndarray, problem: VolumeProblem, info: dict, report: SolveReport) -> VolumeSolution:
    r = info["r"]
    n, m = problem.n, problem.m
    yv = MomentSequence(problem.nvars, 2 * r, gamma[info["y"]], "decision")
    yav = MomentSequence(m, 2 * r, gamma[info["y_a"]], "decision")
    a_unit = yav.values[1 : m + 1] / max(yav.values[0], 1e-300)
    a_hat = problem.a_from_unit(a_unit)
    Ma = triu_to_full(localizing_operator(Polynomial.constant(m, 1.0), r, 2 * r) @ yav.values, basis_size(m, r))
    lam = np.sort(np.linalg.eigvalsh(Ma))[::-1]
    ratio = float(lam[1] / lam[0]) if lam.size > 1 and lam[0] > 0 else 0.0
    notes = ["upper bound, slack expected"]
    if report.status != "optimal":
        notes.append(f"solver status {report.status}: solution unreliable")
    return VolumeSolution(
        a_hat=np.asarray(a_hat, dtype=float),
        volume_estimate=float(yv.values[0]),
        relaxation_order=r,
        y=yv,
        y_a=yav,
        report=report,
        diffuse=ratio > DIFFUSE_RATIO,
        eig_ratio=ratio,
        notes=notes,
    )


def solve_volume(problem: VolumeProblem, cert: FeasibleSetCertificate | None = None, r: int | None = None,
                 box_slack: bool | None = None, **solve_kw) -> VolumeSolution:
    """Moment relaxation at order ``r``; computes the certificate if needed."""
    if cert is None and not problem.s2.is_whole_space:
        cert = solve_feasible_set(problem, **solve_kw)
    prog, info = build_p2m(problem, cert, r, box_slack)
    log.info("%s", prog.summary())
    res = solve(prog, **solve_kw)
    return extract_solution(res.gamma, problem, info, res.report)
