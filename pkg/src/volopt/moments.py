"""Truncated moment sequences of box measures, moment and localizing matrices.

Every matrix here is produced from a sparse linear operator acting on the
moment vector, so the same code path serves numeric evaluation (operator
times known moments) and SDP assembly (operator applied to decision
variables).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import numpy as np
import scipy.sparse as sp

from .poly import Polynomial, basis_size, monomial_basis

KINDS = ("lebesgue-box", "uniform-box", "dirac", "product")


@dataclass(frozen=True)
class MeasureSpec:
    """A finite measure with closed-form moments.

    ``lebesgue-box`` and ``uniform-box`` take ``lower``/``upper``; ``dirac``
    takes ``atom``; ``product`` takes ``components`` laid out in order.
    ``weight`` multiplies the whole measure (used after box normalisation,
    where Lebesgue measure becomes a uniform measure carrying the volume).
    """

    kind: str
    lower: tuple = ()
    upper: tuple = ()
    atom: tuple = ()
    components: tuple = ()
    weight: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown measure kind {self.kind!r}")
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        object.__setattr__(self, "atom", tuple(float(v) for v in self.atom))
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "weight", float(self.weight))
        if self.kind in ("lebesgue-box", "uniform-box"):
            if len(self.lower) != len(self.upper) or not self.lower:
                raise ValueError("box measure needs matching nonempty lower/upper bounds")
            if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
                raise ValueError("box bounds require lower < upper")
        if self.kind == "dirac" and not self.atom:
            raise ValueError("dirac measure needs an atom")
        if self.kind == "product" and not self.components:
            raise ValueError("product measure needs components")
        if self.weight <= 0:
            raise ValueError("measure weight must be positive")

    @classmethod
    def lebesgue(cls, lower, upper):
        return cls("lebesgue-box", lower=tuple(lower), upper=tuple(upper))

    @classmethod
    def uniform(cls, lower, upper):
        return cls("uniform-box", lower=tuple(lower), upper=tuple(upper))

    @classmethod
    def dirac(cls, atom):
        return cls("dirac", atom=tuple(atom))

    @classmethod
    def product(cls, *components):
        return cls("product", components=tuple(components))

    @property
    def nvars(self) -> int:
        if self.kind == "product":
            return sum(c.nvars for c in self.components)
        if self.kind == "dirac":
            return len(self.atom)
        return len(self.lower)

    @property
    def mass(self) -> float:
        if self.kind == "lebesgue-box":
            base = float(np.prod(np.subtract(self.upper, self.lower)))
        elif self.kind == "product":
            base = float(np.prod([c.mass for c in self.components]))
        else:
            base = 1.0
        return self.weight * base

    @property
    def is_probability(self) -> bool:
        return abs(self.mass - 1.0) < 1e-12

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Bounding box of the support."""
        if self.kind == "product":
            lo, hi = zip(*(c.bounds() for c in self.components))
            return np.concatenate(lo), np.concatenate(hi)
        if self.kind == "dirac":
            a = np.array(self.atom)
            return a, a.copy()
        return np.array(self.lower), np.array(self.upper)

    def univariate_moments(self, order: int) -> list[np.ndarray]:
        """Per-coordinate moment tables; the weight is folded into the first."""
        if self.kind == "product":
            tables = []
            for c in self.components:
                tables.extend(c.univariate_moments(order))
        else:
            k = np.arange(order + 1)
            if self.kind == "dirac":
                tables = [a ** k.astype(float) for a in self.atom]
            else:
                tables = []
                for lo, hi in zip(self.lower, self.upper):
                    m = (hi ** (k + 1.0) - lo ** (k + 1.0)) / (k + 1.0)
                    if self.kind == "uniform-box":
                        m = m / (hi - lo)
                    tables.append(m)
        if self.weight != 1.0:
            tables[0] = tables[0] * self.weight
        return tables

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "product":
            return np.hstack([c.sample(rng, size) for c in self.components])
        if self.kind == "dirac":
            return np.tile(np.array(self.atom), (size, 1))
        lo, hi = np.array(self.lower), np.array(self.upper)
        return lo + (hi - lo) * rng.random((size, lo.size))

    def pushforward_normalized(self) -> MeasureSpec:
        """The same measure seen in coordinates where its box is [-1,1]^n."""
        lo, hi = self.bounds()
        if self.kind == "dirac":
            return self
        return self.pushforward_affine((hi + lo) / 2, (hi - lo) / 2)

    def pushforward_affine(self, center, half) -> MeasureSpec:
        """Image under ``z -> (z - center) / half`` (coordinatewise, half > 0).

        Box measures become uniform measures carrying the original mass, so
        the total mass (a volume or a probability) is preserved exactly.
        """
        center = np.broadcast_to(np.asarray(center, dtype=float), (self.nvars,))
        half = np.broadcast_to(np.asarray(half, dtype=float), (self.nvars,))
        if self.kind == "product":
            comps, off = [], 0
            for c in self.components:
                k = c.nvars
                comps.append(c.pushforward_affine(center[off : off + k], half[off : off + k]))
                off += k
            return MeasureSpec("product", components=tuple(comps), weight=self.weight)
        if self.kind == "dirac":
            return MeasureSpec.dirac((np.array(self.atom) - center) / half)
        lo = (np.array(self.lower) - center) / half
        hi = (np.array(self.upper) - center) / half
        return MeasureSpec("uniform-box", lower=tuple(lo), upper=tuple(hi), weight=self.mass)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind in ("lebesgue-box", "uniform-box"):
            d.update(lower=list(self.lower), upper=list(self.upper))
        elif self.kind == "dirac":
            d["atom"] = list(self.atom)
        else:
            d["components"] = [c.to_dict() for c in self.components]
        if self.weight != 1.0:
            d["weight"] = self.weight
        return d


@dataclass
class MomentSequence:
    """Moments ``y_alpha`` for all ``|alpha| <= order`` in graded order."""

    nvars: int
    order: int
    values: np.ndarray
    source: MeasureSpec | str = "free"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = basis_size(self.nvars, self.order)
        if self.values.shape != (expected,):
            raise ValueError(f"expected {expected} moments, got shape {self.values.shape}")

    def __getitem__(self, alpha) -> float:
        return float(self.values[monomial_basis(self.nvars, self.order).index[tuple(alpha)]])

    @property
    def mass(self) -> float:
        return float(self.values[0])

    def truncate(self, order: int) -> MomentSequence:
        if order > self.order:
            raise ValueError(f"cannot extend order {self.order} to {order}")
        return MomentSequence(self.nvars, order, self.values[: basis_size(self.nvars, order)], self.source)

    def integrate(self, p: Polynomial) -> float:
        """Riesz functional L_y(p)."""
        if p.nvars != self.nvars:
            raise ValueError("dimension mismatch")
        if p.degree > self.order:
            raise ValueError(f"polynomial degree {p.degree} exceeds moment order {self.order}")
        return float(p.coeffs(self.order) @ self.values)

    def to_dict(self) -> dict:
        return {"nvars": self.nvars, "order": self.order, "values": self.values.tolist()}


def box_moments(spec: MeasureSpec, order: int) -> MomentSequence:
    """Closed-form moments of a coordinate-wise product measure."""
    tables = spec.univariate_moments(order)
    basis = monomial_basis(spec.nvars, order)
    vals = np.ones(len(basis))
    for i, t in enumerate(tables):
        vals = vals * t[basis.exps[:, i]]
    return MomentSequence(spec.nvars, order, vals, spec)


def empirical_moments(points: np.ndarray, order: int, weight: float = 1.0) -> MomentSequence:
    """Moments of ``weight`` times the empirical measure of ``points``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = pts.shape[1]
    basis = monomial_basis(n, order)
    powers = [np.vander(pts[:, i], order + 1, increasing=True) for i in range(n)]
    vals = np.empty(len(basis))
    for k, alpha in enumerate(basis.exps):
        col = np.ones(pts.shape[0])
        for i, e in enumerate(alpha):
            if e:
                col = col * powers[i][:, e]
        vals[k] = col.mean()
    return MomentSequence(n, order, weight * vals, "empirical")


def product_moments(ya: MomentSequence, yx: MomentSequence, order: int, x_first: bool = True) -> MomentSequence:
    """Moments of the product measure; variables ordered (x, a) by default."""
    if ya.order < order or yx.order < order:
        raise ValueError(f"inputs of order {ya.order}/{yx.order} cannot give order {order}")
    op = product_operator(yx.values[: basis_size(yx.nvars, order)], yx.nvars, ya.nvars, order, x_first)
    vals = op @ ya.values[: basis_size(ya.nvars, order)]
    return MomentSequence(ya.nvars + yx.nvars, order, vals, "product")


def product_operator(yx_values: np.ndarray, nx: int, na: int, order: int, x_first: bool = True) -> sp.csr_matrix:
    """Sparse map ``y_a -> y_a x y_x`` for fixed ``y_x`` (linear in ``y_a``)."""
    joint = monomial_basis(nx + na, order)
    bx = monomial_basis(nx, order)
    ba = monomial_basis(na, order)
    exps = joint.exps
    xe, ae = (exps[:, :nx], exps[:, nx:]) if x_first else (exps[:, na:], exps[:, :na])
    xi = bx.lookup(xe)
    ai = ba.lookup(ae)
    data = np.asarray(yx_values)[xi]
    return sp.csr_matrix((data, (np.arange(len(joint)), ai)), shape=(len(joint), len(ba)))


@dataclass
class IndexedSymmetricMatrix:
    matrix: np.ndarray
    labels: np.ndarray  # exponent row per basis element

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])


@lru_cache(maxsize=256)
def _localizing_operator_cached(nvars, terms_key, r, order):
    basis_r = monomial_basis(nvars, r)
    basis_o = monomial_basis(nvars, order)
    k = len(basis_r)
    iu, ju = np.triu_indices(k)
    pair = basis_r.exps[iu] + basis_r.exps[ju]
    rows, cols, vals = [], [], []
    for alpha, c in terms_key:
        idx = basis_o.lookup(pair + np.array(alpha, dtype=np.int64))
        rows.append(np.arange(len(iu)))
        cols.append(idx)
        vals.append(np.full(len(iu), c))
    if rows:
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals)
    op = sp.csr_matrix((vals, (rows, cols)), shape=(len(iu), len(basis_o)))
    op.sum_duplicates()
    return op


def localizing_operator(p: Polynomial, r: int, order: int | None = None) -> sp.csr_matrix:
    """Sparse map from moments (graded order ``order``) to the upper triangle
    of ``M_r(y; p)``, rows ordered as ``numpy.triu_indices``."""
    need = 2 * r + p.degree
    if order is None:
        order = need
    if order < need:
        raise ValueError(f"moment order {order} too low for localizing matrix (needs {need})")
    key = tuple(sorted(p.items()))
    return _localizing_operator_cached(p.nvars, key, r, order)


def moment_operator(nvars: int, r: int, order: int | None = None) -> sp.csr_matrix:
    return localizing_operator(Polynomial.constant(nvars, 1.0), r, order)


def triu_to_full(vals: np.ndarray, k: int) -> np.ndarray:
    m = np.zeros((k, k))
    iu = np.triu_indices(k)
    m[iu] = vals
    m = m + m.T - np.diag(np.diag(m))
    return m


def localizing_matrix(y: MomentSequence, p: Polynomial, r: int) -> IndexedSymmetricMatrix:
    if p.nvars != y.nvars:
        raise ValueError("dimension mismatch between moments and polynomial")
    need = 2 * r + p.degree
    if y.order < need:
        raise ValueError(f"moment order {y.order} too low: localizing matrix needs {need}")
    op = localizing_operator(p, r, y.order)
    k = basis_size(y.nvars, r)
    return IndexedSymmetricMatrix(triu_to_full(op @ y.values, k), monomial_basis(y.nvars, r).exps)


def moment_matrix(y: MomentSequence, r: int) -> IndexedSymmetricMatrix:
    if y.order < 2 * r:
        raise ValueError(f"moment order {y.order} too low: M_{r} needs {2 * r}")
    return localizing_matrix(y, Polynomial.constant(y.nvars, 1.0), r)


def half_degree(p: Polynomial) -> int:
    return -(-p.degree // 2)
