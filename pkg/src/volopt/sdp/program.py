"""Conic program container and an incremental builder.

A program has a decision vector ``gamma`` of length ``n``, a linear
objective, linear equalities ``A gamma = b`` and a list of cone blocks.  Each
block is an affine map ``gamma -> g0 + G gamma`` whose value must lie in the
cone: for ``psd`` blocks the value lists the upper triangle of a symmetric
``size x size`` matrix in ``numpy.triu_indices`` order, for ``nonneg`` blocks
it is a plain vector of length ``size``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


def tri_len(k: int) -> int:
    return k * (k + 1) // 2


def triu_weights(k: int) -> np.ndarray:
    """1 on the diagonal, 2 off it: <Q, M> = sum(w * triu(Q) * triu(M))."""
    iu, ju = np.triu_indices(k)
    return np.where(iu == ju, 1.0, 2.0)


def triu_to_full(vals: np.ndarray, k: int) -> np.ndarray:
    m = np.zeros((k, k))
    m[np.triu_indices(k)] = vals
    return m + m.T - np.diag(np.diag(m))


@dataclass
class ConeBlock:
    kind: str
    size: int
    G: sp.csr_matrix
    g0: np.ndarray
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("psd", "nonneg"):
            raise ValueError(f"unknown cone kind {self.kind!r}")
        if self.size < 1:
            raise ValueError("cone block size must be >= 1")
        rows = tri_len(self.size) if self.kind == "psd" else self.size
        self.G = sp.csr_matrix(self.G)
        self.g0 = np.asarray(self.g0, dtype=float).reshape(-1)
        if self.G.shape[0] != rows or self.g0.shape != (rows,):
            raise ValueError(f"block {self.name!r}: expected {rows} rows")

    @property
    def rows(self) -> int:
        return self.G.shape[0]

    def value(self, gamma: np.ndarray) -> np.ndarray:
        v = self.g0 + self.G @ gamma
        return triu_to_full(v, self.size) if self.kind == "psd" else v


@dataclass
class ConicProgram:
    n: int
    c: np.ndarray
    sense: str = "min"
    A_eq: sp.csr_matrix | None = None
    b_eq: np.ndarray | None = None
    blocks: list[ConeBlock] = field(default_factory=list)
    var_groups: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        if self.c.shape != (self.n,):
            raise ValueError("objective length does not match decision size")
        if self.sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        if self.A_eq is None:
            self.A_eq = sp.csr_matrix((0, self.n))
            self.b_eq = np.zeros(0)
        self.A_eq = sp.csr_matrix(self.A_eq)
        self.b_eq = np.asarray(self.b_eq, dtype=float).reshape(-1)
        if self.A_eq.shape != (self.b_eq.size, self.n):
            raise ValueError("equality data has inconsistent shape")
        for blk in self.blocks:
            if blk.G.shape[1] != self.n:
                raise ValueError(f"block {blk.name!r} references {blk.G.shape[1]} variables, program has {self.n}")
        if not self.blocks and self.A_eq.shape[0] == 0:
            raise ValueError("program needs at least one cone block or equality row")
        for arr in [self.c, self.b_eq, self.A_eq.data] + [b.g0 for b in self.blocks] + [b.G.data for b in self.blocks]:
            if not np.all(np.isfinite(arr)):
                raise ValueError("program data contains NaN or infinity")

    def objective(self, gamma: np.ndarray) -> float:
        return float(self.c @ gamma)

    def group(self, gamma: np.ndarray, name: str) -> np.ndarray:
        return np.asarray(gamma)[self.var_groups[name]]

    def summary(self) -> str:
        psd = [b.size for b in self.blocks if b.kind == "psd"]
        nn = sum(b.size for b in self.blocks if b.kind == "nonneg")
        return (
            f"{self.name or 'program'}: {self.n} variables, {self.A_eq.shape[0]} equalities, "
            f"{len(psd)} PSD blocks (max size {max(psd) if psd else 0}), {nn} nonnegative rows"
        )


class ProgramBuilder:
    """Accumulates variables and constraints; ``build`` freezes them."""

    def __init__(self, name: str = ""):
        self.name = name
        self.n = 0
        self.groups: dict[str, slice] = {}
        self.c_terms: list[tuple[np.ndarray, np.ndarray]] = []
        self.eq_rows: list[tuple[sp.coo_matrix, np.ndarray, slice | None]] = []
        self.blocks: list[tuple[str, int, list, np.ndarray, str]] = []

    def add_variables(self, name: str, count: int) -> slice:
        if name in self.groups:
            raise ValueError(f"duplicate variable group {name!r}")
        sl = slice(self.n, self.n + count)
        self.groups[name] = sl
        self.n += count
        return sl

    def set_objective(self, cols: slice | np.ndarray, coeffs: np.ndarray):
        idx = np.arange(cols.start, cols.stop) if isinstance(cols, slice) else np.asarray(cols)
        self.c_terms.append((idx, np.asarray(coeffs, dtype=float)))

    def add_equalities(self, parts: list[tuple[slice, sp.spmatrix]], rhs: np.ndarray):
        """Rows ``sum_k M_k gamma[slice_k] = rhs``."""
        rhs = np.asarray(rhs, dtype=float).reshape(-1)
        self.eq_rows.append((parts, rhs))

    def add_block(self, kind: str, size: int, parts: list[tuple[slice, sp.spmatrix]], g0=None, name: str = ""):
        rows = tri_len(size) if kind == "psd" else size
        g0 = np.zeros(rows) if g0 is None else np.asarray(g0, dtype=float).reshape(-1)
        self.blocks.append((kind, size, parts, g0, name))

    def add_gram(self, name: str, size: int) -> slice:
        """Fresh symmetric matrix variable constrained PSD (upper triangle)."""
        sl = self.add_variables(name, tri_len(size))
        self.add_block("psd", size, [(sl, sp.identity(tri_len(size), format="csr"))], name=name)
        return sl

    def _assemble(self, parts, nrows):
        mats = []
        for sl, M in parts:
            M = sp.coo_matrix(M)
            if M.shape[0] != nrows or M.shape[1] != sl.stop - sl.start:
                raise ValueError(f"part shape {M.shape} does not fit rows={nrows}, cols={sl.stop - sl.start}")
            mats.append(sp.coo_matrix((M.data, (M.row, M.col + sl.start)), shape=(nrows, self.n)))
        if not mats:
            return sp.csr_matrix((nrows, self.n))
        out = mats[0]
        for m in mats[1:]:
            out = out + m
        return sp.csr_matrix(out)

    def build(self, sense: str = "min") -> ConicProgram:
        c = np.zeros(self.n)
        for idx, coeffs in self.c_terms:
            np.add.at(c, idx, coeffs)
        if self.eq_rows:
            A = sp.vstack([self._assemble(parts, rhs.size) for parts, rhs in self.eq_rows], format="csr")
            b = np.concatenate([rhs for _, rhs in self.eq_rows])
        else:
            A, b = None, None
        blocks = []
        for kind, size, parts, g0, name in self.blocks:
            G = self._assemble(parts, g0.size)
            blocks.append(ConeBlock(kind, size, G, g0, name))
        return ConicProgram(self.n, c, sense, A, b, blocks, dict(self.groups), self.name)
