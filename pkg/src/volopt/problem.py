"""Problem data: variable blocks, semialgebraic sets and the volume problem.

All polynomials of a problem live over the joint variable vector ``(x, a)``
with the ``x`` block first.  ``VolumeProblem.normalized`` maps both boxes
affinely onto ``[-1, 1]`` and pushes ``mu_x`` forward, so relaxations only
ever see the unit box and volumes need no Jacobian correction.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .moments import MeasureSpec
from .poly import Polynomial


@dataclass(frozen=True)
class VariableBlocks:
    x_names: tuple[str, ...]
    a_names: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "x_names", tuple(self.x_names))
        object.__setattr__(self, "a_names", tuple(self.a_names))
        if len(self.x_names) < 1:
            raise ValueError("at least one x variable is required")
        names = self.names
        if len(set(names)) != len(names):
            raise ValueError(f"variable names must be unique: {names}")

    @classmethod
    def default(cls, n: int, m: int) -> VariableBlocks:
        return cls(tuple(f"x{i + 1}" for i in range(n)), tuple(f"a{i + 1}" for i in range(m)))

    @property
    def x_dim(self) -> int:
        return len(self.x_names)

    @property
    def a_dim(self) -> int:
        return len(self.a_names)

    @property
    def nvars(self) -> int:
        return self.x_dim + self.a_dim

    @property
    def names(self) -> tuple[str, ...]:
        return self.x_names + self.a_names

    def x_vars(self) -> list[Polynomial]:
        return Polynomial.variables(self.nvars)[: self.x_dim]

    def a_vars(self) -> list[Polynomial]:
        return Polynomial.variables(self.nvars)[self.x_dim :]


@dataclass(frozen=True)
class SemialgebraicSet:
    """Conjunction ``P_j(x, a) >= 0``.  No polynomials means the whole box."""

    polys: tuple[Polynomial, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "polys", tuple(self.polys))
        if len({p.nvars for p in self.polys}) > 1:
            raise ValueError("all polynomials of a set must share one variable vector")

    @property
    def is_whole_space(self) -> bool:
        return not self.polys

    @property
    def max_degree(self) -> int:
        return max((p.degree for p in self.polys), default=0)

    def values(self, points: np.ndarray) -> np.ndarray:
        """Matrix of ``P_j`` values, shape (len(points), number of polynomials)."""
        pts = np.atleast_2d(points)
        if not self.polys:
            return np.zeros((pts.shape[0], 0))
        return np.column_stack([np.atleast_1d(p.evaluate(pts)) for p in self.polys])

    def contains(self, points: np.ndarray) -> np.ndarray:
        return np.all(self.values(points) >= 0, axis=1)

    def at(self, a, x_dim: int) -> SemialgebraicSet:
        """The slice ``{x : P_j(x, a) >= 0}`` as a set over ``x`` alone."""
        a = np.atleast_1d(np.asarray(a, dtype=float))
        idx = list(range(x_dim, x_dim + a.size))
        return SemialgebraicSet(tuple(p.partial_eval(idx, a) for p in self.polys))

    def compose(self, subs) -> SemialgebraicSet:
        return SemialgebraicSet(tuple(p.compose(subs) for p in self.polys))


@dataclass(frozen=True)
class Hierarchy:
    """Relaxation parameters: feasible-set degree ``d``, moment order ``r``,
    dual degree ``d_w`` (defaults to ``2 r``) and the two closing margins."""

    d: int = 7
    r: int = 6
    eps_a: float = 0.05
    eps_k: float = 0.1
    d_w: int | None = None

    def __post_init__(self):
        if self.d < 1 or self.r < 1:
            raise ValueError("d and r must be positive")
        if self.eps_a <= 0 or self.eps_k <= 0:
            raise ValueError("eps_a and eps_k must be positive")

    @property
    def dual_degree(self) -> int:
        return self.d_w if self.d_w is not None else 2 * self.r

    def to_dict(self) -> dict:
        return {"d": self.d, "r": self.r, "eps_a": self.eps_a, "eps_k": self.eps_k, "d_w": self.dual_degree}


def _box(lo, hi, dim, what):
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (dim,)).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (dim,)).copy()
    if np.any(lo >= hi):
        raise ValueError(f"{what} box needs lower < upper in every coordinate")
    return lo, hi


@dataclass
class VolumeProblem:
    """Maximise ``mu_x(S1(a))`` over ``a`` in the box subject to ``S1(a) ⊆ S2(a)``.

    ``s2`` with no polynomials stands for the whole space.  ``mu_x`` must be
    supported on the x box.
    """

    blocks: VariableBlocks
    s1: SemialgebraicSet
    s2: SemialgebraicSet = field(default_factory=SemialgebraicSet)
    x_box: tuple = (-1.0, 1.0)
    a_box: tuple = (-1.0, 1.0)
    mu_x: MeasureSpec | None = None
    hierarchy: Hierarchy = field(default_factory=Hierarchy)
    name: str = ""

    def __post_init__(self):
        n, m = self.blocks.x_dim, self.blocks.a_dim
        self.x_box = _box(*self.x_box, n, "x")
        self.a_box = _box(*self.a_box, m, "a") if m else (np.zeros(0), np.zeros(0))
        for p in self.s1.polys + self.s2.polys:
            if p.nvars != self.blocks.nvars:
                raise ValueError(f"polynomial over {p.nvars} variables, problem has {self.blocks.nvars}")
        if self.mu_x is None:
            self.mu_x = MeasureSpec.lebesgue(*self.x_box)
        if self.mu_x.nvars != n:
            raise ValueError("mu_x dimension differs from the x block")
        lo, hi = self.mu_x.bounds()
        if np.any(lo < self.x_box[0] - 1e-12) or np.any(hi > self.x_box[1] + 1e-12):
            raise ValueError("mu_x must be supported inside the x box")

    @property
    def n(self) -> int:
        return self.blocks.x_dim

    @property
    def m(self) -> int:
        return self.blocks.a_dim

    @property
    def nvars(self) -> int:
        return self.blocks.nvars

    @property
    def max_degree(self) -> int:
        return max(self.s1.max_degree, self.s2.max_degree)

    @property
    def is_normalized(self) -> bool:
        return (
            np.allclose(self.x_box[0], -1) and np.allclose(self.x_box[1], 1)
            and np.allclose(self.a_box[0], -1) and np.allclose(self.a_box[1], 1)
        )

    def with_hierarchy(self, **kw) -> VolumeProblem:
        return replace(self, hierarchy=replace(self.hierarchy, **kw))

    def _affine(self):
        lo = np.concatenate([self.x_box[0], self.a_box[0]])
        hi = np.concatenate([self.x_box[1], self.a_box[1]])
        return (hi + lo) / 2, (hi - lo) / 2

    def normalized(self) -> VolumeProblem:
        """Same problem in coordinates where both boxes are ``[-1, 1]``."""
        if self.is_normalized:
            return self
        center, half = self._affine()
        z = Polynomial.variables(self.nvars)
        subs = [z[i].scale(half[i]) + float(center[i]) for i in range(self.nvars)]
        n, m = self.n, self.m
        return VolumeProblem(
            blocks=self.blocks,
            s1=self.s1.compose(subs),
            s2=self.s2.compose(subs),
            x_box=(-np.ones(n), np.ones(n)),
            a_box=(-np.ones(m), np.ones(m)),
            mu_x=self.mu_x.pushforward_affine(center[: n], half[: n]),
            hierarchy=self.hierarchy,
            name=self.name,
        )

    def a_to_unit(self, a) -> np.ndarray:
        center, half = self._affine()
        return (np.asarray(a, dtype=float) - center[self.n :]) / half[self.n :]

    def a_from_unit(self, u) -> np.ndarray:
        center, half = self._affine()
        return center[self.n :] + half[self.n :] * np.asarray(u, dtype=float)

    def k1_generators(self) -> list[Polynomial]:
        """Polynomials describing ``K1``: the ``S1`` polynomials plus the
        box constraints ``1 - z_i^2`` (only meaningful once normalized)."""
        z = Polynomial.variables(self.nvars)
        return list(self.s1.polys) + [1.0 - zi * zi for zi in z]
