"""Reductions of control problems to volume problems.

* region of attraction: largest Lyapunov sublevel set on which the
  Lyapunov function decreases;
* invariant set: largest set mapped into itself by discrete dynamics;
* probabilistic control: feedback gains maximising the probability of
  reaching a target while staying in per-step feasible sets;
* generalised SOS: largest set on which a given polynomial stays
  nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .moments import MeasureSpec
from .poly import Polynomial
from .problem import Hierarchy, SemialgebraicSet, VariableBlocks, VolumeProblem

DEGREE_CAP = 12
EPS_R = 1e-3


class DegreeCapError(ValueError):
    pass


def _check_cap(polys, cap, what):
    worst = max((p.degree for p in polys), default=0)
    if worst > cap:
        raise DegreeCapError(f"{what} reaches degree {worst}, above the cap {cap}; raise the cap or simplify")


@dataclass(frozen=True)
class PolynomialDynamics:
    """``dx/dt = f(x, u, w, d)`` or ``x+ = f(x, u, w, d)``.

    Each ``f_i`` is a polynomial over the concatenated blocks: states
    (``n_x``), inputs (``n_u``), noise (``n_w``), uncertain parameters
    (``n_d``), in that order.
    """

    f: tuple
    mode: str = "continuous"
    n_u: int = 0
    n_w: int = 0
    n_d: int = 0

    def __post_init__(self):
        object.__setattr__(self, "f", tuple(self.f))
        if self.mode not in ("continuous", "discrete"):
            raise ValueError("mode must be 'continuous' or 'discrete'")
        if not self.f:
            raise ValueError("dynamics need at least one state")
        if any(p.nvars != self.nvars for p in self.f):
            raise ValueError(f"every f_i must be a polynomial over {self.nvars} variables")

    @property
    def n_x(self) -> int:
        return len(self.f)

    @property
    def nvars(self) -> int:
        return self.n_x + self.n_u + self.n_w + self.n_d

    def step(self, x, u=(), w=(), d=()) -> np.ndarray:
        """Evaluate the right-hand side at one point."""
        z = np.concatenate([np.atleast_1d(np.asarray(v, dtype=float)) for v in (x, u, w, d)])
        return np.array([fi.evaluate(z) for fi in self.f])


@dataclass(frozen=True)
class TemplateFunction:
    """``V(x, a) = fixed(x) + sum_i a_i basis_i(x)``, affine in ``a``."""

    fixed: Polynomial
    basis: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "basis", tuple(self.basis))
        if any(b.nvars != self.fixed.nvars for b in self.basis):
            raise ValueError("template basis and fixed part must share the state variables")

    @classmethod
    def from_joint(cls, v: Polynomial, n_x: int) -> TemplateFunction:
        """Split a polynomial over ``(x, a)`` into fixed part and basis;
        rejects anything that is not affine in ``a``."""
        m = v.nvars - n_x
        fixed: dict = {}
        basis = [dict() for _ in range(m)]
        for alpha, c in v.items():
            xa, aa = alpha[:n_x], alpha[n_x:]
            deg_a = sum(aa)
            if deg_a == 0:
                fixed[xa] = c
            elif deg_a == 1:
                basis[aa.index(1)][xa] = c
            else:
                raise ValueError("template must be affine in the parameters")
        return cls(Polynomial(n_x, fixed), tuple(Polynomial(n_x, b) for b in basis))

    @property
    def n_x(self) -> int:
        return self.fixed.nvars

    @property
    def n_params(self) -> int:
        return len(self.basis)

    def joint(self) -> Polynomial:
        """The template as one polynomial over ``(x, a)``."""
        n, m = self.n_x, self.n_params
        pos = list(range(n))
        out = self.fixed.embed(n + m, pos)
        for i, b in enumerate(self.basis):
            out = out + b.embed(n + m, pos) * Polynomial.variable(n + m, n + i)
        return out

    def vanishes_at_origin(self) -> bool:
        return self.joint().coeff((0,) * (self.n_x + self.n_params)) == 0.0 and all(
            b.coeff((0,) * self.n_x) == 0.0 for b in self.basis
        )


def _joint_states(n_x, m):
    z = Polynomial.variables(n_x + m)
    return z[:n_x], z[n_x:]


def lie_derivative(v: Polynomial, dyn: PolynomialDynamics, n_x: int) -> Polynomial:
    """``grad_x V . f`` with ``V`` over ``(x, a)`` and ``f`` over ``x`` only."""
    nv = v.nvars
    fx = [fi.embed(nv, range(n_x)) for fi in dyn.f]
    out = Polynomial(nv)
    for i in range(n_x):
        out = out + v.differentiate(i) * fx[i]
    return out


def build_roa(dyn: PolynomialDynamics, template: TemplateFunction, level_c: float = 1.0, eps_r: float = EPS_R,
              x_box=(-1.0, 1.0), a_box=(-1.0, 1.0), hierarchy: Hierarchy | None = None,
              degree_cap: int = DEGREE_CAP, names=None) -> VolumeProblem:
    """Largest sublevel set ``{0 <= V <= level_c}`` on which ``V`` decreases
    at rate at least ``eps_r |x|^2``."""
    if dyn.n_u or dyn.n_w or dyn.n_d:
        raise ValueError("region of attraction needs autonomous dynamics without inputs or uncertainty")
    n = dyn.n_x
    if template.n_x != n:
        raise ValueError("template and dynamics disagree on the number of states")
    m = template.n_params
    V = template.joint()
    if not template.vanishes_at_origin():
        raise ValueError("Lyapunov template must vanish at the origin (no constant term)")
    x, _ = _joint_states(n, m)
    sq = sum(xi * xi for xi in x)
    if dyn.mode == "continuous":
        decrease = lie_derivative(V, dyn, n)
    else:
        fx = [fi.embed(n + m, range(n)) for fi in dyn.f]
        decrease = V.compose(fx + Polynomial.variables(n + m)[n:]) - V
    cond = -eps_r * sq - decrease
    s1 = SemialgebraicSet((V, level_c - V))
    s2 = SemialgebraicSet((cond,))
    _check_cap(s1.polys + s2.polys, degree_cap, "region-of-attraction set")
    blocks = VariableBlocks(*(names or (tuple(f"x{i + 1}" for i in range(n)), tuple(f"a{i + 1}" for i in range(m)))))
    return VolumeProblem(blocks, s1, s2, x_box, a_box, None, hierarchy or Hierarchy(), "roa")


def build_invariant(dyn: PolynomialDynamics, template: TemplateFunction, x_box=(-1.0, 1.0), a_box=(-1.0, 1.0),
                    hierarchy: Hierarchy | None = None, degree_cap: int = DEGREE_CAP, names=None) -> VolumeProblem:
    """Largest ``{P(x, a) >= 0}`` mapped into ``{P(f(x), a) >= 0}``."""
    if dyn.mode != "discrete":
        raise ValueError("invariant sets need discrete-time dynamics")
    if dyn.n_u or dyn.n_w or dyn.n_d:
        raise ValueError("invariant sets need dynamics without inputs or uncertainty")
    n = dyn.n_x
    m = template.n_params
    P = template.joint()
    fx = [fi.embed(n + m, range(n)) for fi in dyn.f]
    P_next = P.compose(fx + Polynomial.variables(n + m)[n:])
    s1 = SemialgebraicSet((P,))
    s2 = SemialgebraicSet((P_next,))
    _check_cap(s1.polys + s2.polys, degree_cap, "invariant-set description")
    blocks = VariableBlocks(*(names or (tuple(f"x{i + 1}" for i in range(n)), tuple(f"a{i + 1}" for i in range(m)))))
    return VolumeProblem(blocks, s1, s2, x_box, a_box, None, hierarchy or Hierarchy(), "invariant")


@dataclass
class ControlSpec:
    """Everything ``build_probctrl`` needs besides the dynamics.

    ``controller[j]`` lists the state polynomials multiplying the gains of
    input ``j``; gains are numbered input by input.  ``target`` and
    ``feasible`` are polynomials over the states, kept when ``>= 0``.
    """

    horizon: int
    target: tuple
    controller: tuple
    feasible: tuple = ()
    mu_x0: MeasureSpec | None = None
    mu_d: MeasureSpec | None = None
    mu_w: MeasureSpec | None = None
    a_box: tuple = (-1.0, 1.0)
    names: tuple = field(default_factory=tuple)


def unroll(dyn: PolynomialDynamics, spec: ControlSpec, steps: int | None = None):
    """States ``x_k`` as polynomials over ``(x0, d, w_0..w_{N-1}, a)``.

    Returns ``(states, nvars)`` where ``states[k]`` lists the ``n_x``
    polynomials of step ``k``.
    """
    N = spec.horizon if steps is None else steps
    nx, nu, nw, nd = dyn.n_x, dyn.n_u, dyn.n_w, dyn.n_d
    n_gain = sum(len(c) for c in spec.controller)
    if len(spec.controller) != nu:
        raise ValueError(f"controller lists {len(spec.controller)} inputs, dynamics have {nu}")
    nv = nx + nd + nw * spec.horizon + n_gain
    z = Polynomial.variables(nv)
    x0 = z[:nx]
    d = z[nx : nx + nd]
    a = z[nv - n_gain :]
    states = [list(x0)]
    for k in range(N):
        xk = states[-1]
        u, g = [], 0
        for basis in spec.controller:
            uj = Polynomial(nv)
            for b in basis:
                uj = uj + b.compose(xk) * a[g]
                g += 1
            u.append(uj)
        w = z[nx + nd + nw * k : nx + nd + nw * (k + 1)]
        subs = list(xk) + u + list(w) + list(d)
        states.append([fi.compose(subs) for fi in dyn.f])
    return states, nv


def build_probctrl(dyn: PolynomialDynamics, spec: ControlSpec, hierarchy: Hierarchy | None = None,
                   degree_cap: int = DEGREE_CAP) -> VolumeProblem:
    """Maximise ``Prob(x_N in target, x_k in feasible for 0 < k < N)``."""
    if dyn.mode != "discrete":
        raise ValueError("probabilistic control needs discrete-time dynamics")
    nx, nd, nw = dyn.n_x, dyn.n_d, dyn.n_w
    if spec.horizon < 1:
        raise ValueError("horizon must be at least 1")
    measures = []
    if spec.mu_x0 is None or spec.mu_x0.nvars != nx:
        raise ValueError("need a box measure for the initial state")
    measures.append(spec.mu_x0)
    if nd:
        if spec.mu_d is None or spec.mu_d.nvars != nd:
            raise ValueError("need a box measure for the uncertain parameters")
        measures.append(spec.mu_d)
    if nw:
        if spec.mu_w is None or spec.mu_w.nvars != nw:
            raise ValueError("need a box measure for the noise")
        measures.extend([spec.mu_w] * spec.horizon)
    for mu in measures:
        if mu.kind not in ("uniform-box", "lebesgue-box", "product"):
            raise ValueError(f"unsupported distribution {mu.kind!r}")
    mu = measures[0] if len(measures) == 1 else MeasureSpec.product(*measures)
    states, nv = unroll(dyn, spec)
    polys = [t.compose(states[-1]) for t in spec.target]
    for k in range(1, spec.horizon):
        polys.extend(fz.compose(states[k]) for fz in spec.feasible)
    _check_cap(polys, degree_cap, "unrolled control problem")
    m = sum(len(c) for c in spec.controller)
    n = nv - m
    if spec.names:
        x_names, a_names = spec.names
    else:
        x_names = [f"x0_{i + 1}" for i in range(nx)] + [f"d{i + 1}" for i in range(nd)]
        x_names += [f"w{k}_{i + 1}" for k in range(spec.horizon) for i in range(nw)]
        a_names = [f"a{i + 1}" for i in range(m)]
    lo, hi = mu.bounds()
    return VolumeProblem(
        VariableBlocks(tuple(x_names), tuple(a_names)),
        SemialgebraicSet(tuple(polys)),
        SemialgebraicSet(),
        (lo, hi),
        spec.a_box,
        mu,
        hierarchy or Hierarchy(),
        "probctrl",
    )


def build_gsos(target: Polynomial, set_polys, n_x: int, x_box=(-1.0, 1.0), a_box=(-1.0, 1.0),
               hierarchy: Hierarchy | None = None, names=None) -> VolumeProblem:
    """Largest ``S1(a)`` (from ``set_polys``) on which ``target >= 0``."""
    m = target.nvars - n_x
    blocks = VariableBlocks(*(names or (tuple(f"x{i + 1}" for i in range(n_x)), tuple(f"a{i + 1}" for i in range(m)))))
    return VolumeProblem(blocks, SemialgebraicSet(tuple(set_polys)), SemialgebraicSet((target,)), x_box, a_box,
                         None, hierarchy or Hierarchy(), "gsos")


def simulate(dyn: PolynomialDynamics, spec: ControlSpec, x0, d, w, a) -> np.ndarray:
    """Step-by-step numeric trajectory, for checking the unrolled polynomials."""
    x = np.asarray(x0, dtype=float)
    a = np.asarray(a, dtype=float)
    w = np.asarray(w, dtype=float).reshape(spec.horizon, -1) if dyn.n_w else np.zeros((spec.horizon, 0))
    traj = [x]
    for k in range(spec.horizon):
        u, g = [], 0
        for basis in spec.controller:
            uj = 0.0
            for b in basis:
                uj += a[g] * b.evaluate(x)
                g += 1
            u.append(uj)
        x = dyn.step(x, u, w[k], d)
        traj.append(x)
    return np.array(traj)
