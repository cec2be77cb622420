"""
Inner approximation of a region of attraction
=============================================

A Van der Pol type oscillator run backwards has a bounded region of
attraction. The sublevel set {V(x, a) <= 1} of a quartic template V is a
valid inner estimate when V decreases along trajectories on it. We look for
the template parameters giving the largest such set.

The full three-parameter certificate needs a feasible-set degree beyond
what fits in memory here, so the script fixes two parameters and certifies
the third, then compares with a sampled grid search over all three.
"""

from pathlib import Path

import numpy as np

from volopt.feasible import solve_feasible_set
from volopt.io import build_problem, load_problem, parse_problem_text
from volopt.montecarlo import SampleBudget, grid_search, problem_inclusion, problem_volume

VP = Path(__file__).resolve().parent.parent / "examples" / "roa.vp"
budget = SampleBudget(100_000, 0)

# Baseline: screen a 21^3 grid by sampled inclusion, rank survivors by volume.
full = load_problem(VP)
best = grid_search(full, 21, SampleBudget(20_000, 0))
vol = problem_volume(full, best.a, budget)
print(f"grid search: {best.n_feasible} of {best.n_points} grid points feasible")
print(f"best a = {np.round(best.a, 2).tolist()}, volume {vol.estimate:.3f} +- {vol.stderr:.3f}")

# One free parameter: a2 = 0.7 and a3 = -0.2 are folded into V.
SLICE = """
vars x[2] in [-1, 1]^2;
params a1 in [-1, 1];
measure lebesgue on x;
roa {
  f = [-x2, x1 + (4 x1^2 - 1) x2];
  V = 3 x1^2 + 3 x2^2 + 3 a1 x1 x2 + 2.1 x1^3 x2 - 0.6 x1 x2^3;
  level = 1;
  eps_r = 0.001;
}
options { d = 10; r = 5; eps_a = 0.02; eps_k = 0.1; }
"""
prob = build_problem(parse_problem_text(SLICE))
cert = solve_feasible_set(prob, backend="clarabel")
grid = np.linspace(-1, 1, 41)
ok = grid[cert.contains(grid)]
truth = grid[[problem_inclusion(prob, [a], budget).holds for a in grid]]
print(f"\nslice a2=0.7, a3=-0.2, degree {cert.degree} (status {cert.report.status})")
print(f"certified a1 in [{ok.min():+.2f}, {ok.max():+.2f}]" if ok.size else "nothing certified")
print(f"sampled feasible a1 in [{truth.min():+.2f}, {truth.max():+.2f}]")
# Certified points beyond the sampled range sit inside the eps_k margin.
