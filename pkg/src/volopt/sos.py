"""Sum-of-squares constraints by coefficient matching.

A constraint ``target = sum_j s_j g_j`` with SOS multipliers ``s_j = b' Q_j b``
becomes one Gram variable per generator plus one linear equality per monomial
of the degree budget.  The map from a Gram upper triangle to the coefficient
vector of ``s_j g_j`` is the adjoint of the localizing-matrix operator, which
keeps SOS and moment constructions exact mirrors of each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .moments import localizing_operator
from .poly import Polynomial, basis_size, monomial_basis
from .sdp.program import ProgramBuilder, triu_to_full, triu_weights


def multiplier_half_degree(budget: int, g: Polynomial) -> int:
    """Half degree of the SOS multiplier of ``g`` under a degree budget:
    the multiplier has degree ``2 * floor((budget - deg g) / 2)``."""
    return (budget - g.degree) // 2


def embed_operator(src_nvars: int, src_deg: int, dst_nvars: int, positions, dst_deg: int) -> sp.csr_matrix:
    """Coefficient map for a polynomial over ``src_nvars`` variables placed
    at ``positions`` of a larger variable vector."""
    src = monomial_basis(src_nvars, src_deg)
    dst = monomial_basis(dst_nvars, dst_deg)
    exps = np.zeros((len(src), dst_nvars), dtype=np.int64)
    exps[:, list(positions)] = src.exps
    rows = dst.lookup(exps)
    return sp.csr_matrix((np.ones(len(src)), (rows, np.arange(len(src)))), shape=(len(dst), len(src)))


def gram_to_coeffs(g: Polynomial, half: int, budget: int) -> sp.csr_matrix:
    """Map from the upper triangle of ``Q`` to the coefficients (graded,
    up to ``budget``) of ``g * b' Q b`` with ``b`` the monomials up to ``half``."""
    L = localizing_operator(g, half, budget)
    w = triu_weights(basis_size(g.nvars, half))
    return sp.csr_matrix(L.T @ sp.diags(w))


@dataclass
class Multiplier:
    name: str
    generator: Polynomial
    half: int
    cols: slice

    @property
    def size(self) -> int:
        return basis_size(self.generator.nvars, self.half)

    def gram(self, gamma: np.ndarray) -> np.ndarray:
        return triu_to_full(np.asarray(gamma)[self.cols], self.size)

    def polynomial(self, gamma: np.ndarray) -> Polynomial:
        """The product ``s_j * g_j`` as a polynomial."""
        Q = self.gram(gamma)
        basis = monomial_basis(self.generator.nvars, self.half)
        terms: dict = {}
        for i in range(len(basis)):
            for k in range(len(basis)):
                if Q[i, k] != 0.0:
                    key = tuple(basis.exps[i] + basis.exps[k])
                    terms[key] = terms.get(key, 0.0) + Q[i, k]
        return Polynomial(self.generator.nvars, terms) * self.generator


def add_qm_constraint(
    builder: ProgramBuilder,
    nvars: int,
    budget: int,
    target_parts: list,
    target_const: np.ndarray,
    generators: list[Polynomial],
    name: str,
) -> list[Multiplier]:
    """Impose ``target(gamma) = sum_j s_j g_j`` with every ``s_j`` SOS.

    ``target_parts`` are ``(slice, matrix)`` pairs mapping decision columns
    to graded coefficients up to ``budget``; ``target_const`` is the
    constant part of the target (same length).  Include the polynomial 1
    among the generators to get the free SOS term.  Generators whose degree
    exceeds the budget are skipped (their multiplier would be zero).
    """
    rows = basis_size(nvars, budget)
    target_const = np.asarray(target_const, dtype=float).reshape(-1)
    if target_const.size != rows:
        raise ValueError(f"target constant has {target_const.size} coefficients, budget needs {rows}")
    if not generators:
        raise ValueError("quadratic module needs at least one generator")
    mults = []
    parts = list(target_parts)
    for j, g in enumerate(generators):
        half = multiplier_half_degree(budget, g)
        if half < 0:
            continue
        k = basis_size(nvars, half)
        cols = builder.add_gram(f"{name}.s{j}", k)
        parts.append((cols, -gram_to_coeffs(g, half, budget)))
        mults.append(Multiplier(f"{name}.s{j}", g, half, cols))
    builder.add_equalities(parts, -target_const)
    return mults
