"""
One state, one parameter: the interval example end to end
=========================================================

S1(a) = {x : x^2 <= 0.25 - a^2} must fit inside S2(a) = {x : x^2 <= 0.09 - a^2 - 0.8 a}.
The largest admissible interval is at a = -0.2 with length 0.9165.

The script runs the two stages (feasible-set polynomial, then moment
relaxation), the SOS dual, and a Monte Carlo check, for two shrink margins.
"""

from pathlib import Path

import numpy as np

from volopt.dual import argmax_on_certified_set, solve_dual
from volopt.feasible import solve_feasible_set
from volopt.io import load_problem
from volopt.montecarlo import SampleBudget, grid_search, problem_inclusion, problem_volume
from volopt.volume import solve_volume

VP = Path(__file__).resolve().parent.parent / "examples" / "illustrative.vp"

# Ground truth first: a plain grid search over a with sampled volumes.
prob = load_problem(VP)
best = grid_search(prob, 201, SampleBudget(200_000, 0))
print(f"grid search: a = {best.a[0]:+.3f}, volume {best.volume:.4f}")

for eps_k in (0.1, 0.01):
    prob = load_problem(VP, eps_k=eps_k)
    print(f"\n--- eps_k = {eps_k}")

    # Stage 1: a polynomial P(a) whose sublevel set {P < 1 - eps_a} only
    # holds parameters where the inclusion is certified.
    cert = solve_feasible_set(prob, backend="clarabel")
    grid = np.linspace(-1, 1, 201)
    member = grid[cert.contains(grid)]
    leaks = [a for a in member if not problem_inclusion(prob, [a], SampleBudget(100_000, 0)).holds]
    print(f"certified {member.size} of 201 grid points, {len(leaks)} of them fail inclusion")

    # Stage 2: moment relaxations of increasing order. The volumes are upper
    # bounds and decrease with r; a_hat is the mean of the parameter measure.
    for r in (4, 5, 6):
        sol = solve_volume(prob, cert, r=r, backend="clarabel")
        mc = problem_volume(prob, sol.a_hat, SampleBudget(200_000, 0))
        inc = problem_inclusion(prob, sol.a_hat, SampleBudget(100_000, 0)).holds
        print(f"r={r}: bound {sol.volume_estimate:.4f}, a_hat {sol.a_hat[0]:+.4f}, "
              f"MC volume at a_hat {mc.estimate:.4f}, inclusion {inc}, status {sol.report.status}")

    # The SOS side of the same program: beta bounds the moment optimum from
    # above, and the maximiser of the integrated W is another estimate of a.
    dual = solve_dual(prob, cert, d_w=12, backend="clarabel")
    a_dual, _ = argmax_on_certified_set(dual, cert)
    print(f"dual: beta {dual.beta:.4f}, argmax {a_dual[0]:+.4f}")
