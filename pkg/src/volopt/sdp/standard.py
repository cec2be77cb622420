"""Conversion to ``min c'x  s.t.  Ax + s = b,  s in K``.

Rows are ordered: equalities (zero cone), nonnegative rows, then PSD blocks
in scaled-vector form (upper triangle row by row, off-diagonals times
sqrt(2), so the Euclidean inner product matches the trace inner product).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .program import ConicProgram, tri_len

SQRT2 = np.sqrt(2.0)


def svec_scale(k: int) -> np.ndarray:
    iu, ju = np.triu_indices(k)
    return np.where(iu == ju, 1.0, SQRT2)


@dataclass
class StandardForm:
    A: sp.csc_matrix
    b: np.ndarray
    c: np.ndarray
    zero: int
    nonneg: int
    psd: list[int]
    sign: float  # +1 for minimisation, -1 when the program maximises
    nonneg_blocks: list[int]
    psd_blocks: list[int]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def psd_offsets(self) -> list[int]:
        off = self.zero + self.nonneg
        out = []
        for k in self.psd:
            out.append(off)
            off += tri_len(k)
        return out


def to_standard(prog: ConicProgram) -> StandardForm:
    rows_A = [prog.A_eq]
    rows_b = [prog.b_eq]
    nn_idx = [i for i, b in enumerate(prog.blocks) if b.kind == "nonneg"]
    psd_idx = [i for i, b in enumerate(prog.blocks) if b.kind == "psd"]
    for i in nn_idx:
        blk = prog.blocks[i]
        rows_A.append(-blk.G)
        rows_b.append(blk.g0)
    for i in psd_idx:
        blk = prog.blocks[i]
        w = svec_scale(blk.size)
        rows_A.append(-sp.diags(w) @ blk.G)
        rows_b.append(w * blk.g0)
    A = sp.vstack(rows_A, format="csc") if rows_A else sp.csc_matrix((0, prog.n))
    b = np.concatenate(rows_b) if rows_b else np.zeros(0)
    sign = 1.0 if prog.sense == "min" else -1.0
    return StandardForm(
        A=A,
        b=b,
        c=sign * prog.c,
        zero=prog.A_eq.shape[0],
        nonneg=sum(prog.blocks[i].size for i in nn_idx),
        psd=[prog.blocks[i].size for i in psd_idx],
        sign=sign,
        nonneg_blocks=nn_idx,
        psd_blocks=psd_idx,
    )


def split_duals(sf: StandardForm, prog: ConicProgram, z: np.ndarray) -> dict:
    """Dual variables by constraint: equality multipliers and one
    matrix/vector per cone block (in the program's own sign convention)."""
    out = {"eq": sf.sign * z[: sf.zero], "blocks": [None] * len(prog.blocks)}
    off = sf.zero
    for i in sf.nonneg_blocks:
        k = prog.blocks[i].size
        out["blocks"][i] = z[off : off + k].copy()
        off += k
    for i, k in zip(sf.psd_blocks, sf.psd):
        t = tri_len(k)
        v = z[off : off + t] / svec_scale(k)
        m = np.zeros((k, k))
        m[np.triu_indices(k)] = v
        out["blocks"][i] = m + m.T - np.diag(np.diag(m))
        off += t
    return out
