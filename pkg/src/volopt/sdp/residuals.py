from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .program import ConicProgram


@dataclass
class Residuals:
    primal: float  # max |A gamma - b|
    psd_violation: float  # smallest eigenvalue (psd) or entry (nonneg) over all blocks
    worst_block: str = ""

    def ok(self, tol_feas: float, tol_psd: float) -> bool:
        return self.primal <= tol_feas and self.psd_violation >= -tol_psd


def residuals(prog: ConicProgram, gamma) -> Residuals:
    """Recompute feasibility of ``gamma`` straight from the program data."""
    gamma = np.asarray(gamma, dtype=float).reshape(-1)
    if gamma.shape != (prog.n,):
        raise ValueError(f"gamma has length {gamma.size}, program has {prog.n} variables")
    primal = 0.0
    if prog.A_eq.shape[0]:
        primal = float(np.max(np.abs(prog.A_eq @ gamma - prog.b_eq)))
    worst = np.inf
    worst_name = ""
    for blk in prog.blocks:
        v = blk.value(gamma)
        m = float(np.linalg.eigvalsh(v)[0]) if blk.kind == "psd" else float(v.min())
        if m < worst:
            worst, worst_name = m, blk.name
    if not prog.blocks:
        worst = 0.0
    return Residuals(primal, worst, worst_name)
