"""SDPA sparse (``.dat-s``) export and import.

SDPA states a program as ``min c'x  s.t.  sum_i x_i F_i - F_0 >= 0``.  A
block ``g0 + G x`` maps to ``F_0 = -g0`` and ``F_i = G[:, i]``; nonnegative
blocks become diagonal (negative size) blocks.  Linear equalities have no
SDPA form, so they are written as a pair of opposite inequalities in one
extra diagonal block, and a ``*volopt`` comment line records which block
that is so import can restore them.  A maximisation is written with the
objective negated and flagged in the same way.
"""

from __future__ import annotations

import re

import numpy as np
import scipy.sparse as sp

from .program import ConeBlock, ConicProgram

TAG = "*volopt"


def _positions(kind: str, k: int):
    if kind == "psd":
        return np.triu_indices(k)
    return np.arange(k), np.arange(k)


def export_sdpa(prog: ConicProgram, path) -> None:
    blocks = [(b.kind, b.size, b.G, b.g0) for b in prog.blocks]
    meta = []
    neq = prog.A_eq.shape[0]
    if neq:
        A = sp.vstack([prog.A_eq, -prog.A_eq], format="csr")
        blocks.append(("nonneg", 2 * neq, A, np.concatenate([-prog.b_eq, prog.b_eq])))
        meta.append(f"{TAG} equalities {len(blocks)} {neq}")
    if not blocks:
        raise ValueError("program has no cone blocks")
    c = prog.c if prog.sense == "min" else -prog.c
    if prog.sense == "max":
        meta.append(f"{TAG} sense max")
    lines = list(meta)
    lines.append(str(prog.n))
    lines.append(str(len(blocks)))
    lines.append(" ".join(str(k if kind == "psd" else -k) for kind, k, _, _ in blocks))
    lines.append(" ".join(repr(float(v)) for v in c))
    recs = []
    for bi, (kind, k, G, g0) in enumerate(blocks, start=1):
        iu, ju = _positions(kind, k)
        nz = np.flatnonzero(g0)
        recs.append((np.zeros(nz.size, int), np.full(nz.size, bi), iu[nz], ju[nz], -g0[nz]))
        Gc = sp.coo_matrix(G)
        keep = Gc.data != 0
        r, col = Gc.row[keep], Gc.col[keep]
        recs.append((col + 1, np.full(r.size, bi), iu[r], ju[r], Gc.data[keep]))
    mat, blk, ii, jj, vv = (np.concatenate(p) for p in zip(*recs))
    order = np.lexsort((jj, ii, blk, mat))
    for t in order:
        lines.append(f"{mat[t]} {blk[t]} {ii[t] + 1} {jj[t] + 1} {float(vv[t])!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _numbers(line: str) -> list[str]:
    return [t for t in re.split(r"[\s,(){}]+", line.strip()) if t]


def import_sdpa(path) -> ConicProgram:
    """Read a ``.dat-s`` file; entries may be listed in any order."""
    with open(path, encoding="utf-8") as fh:
        raw = fh.read().splitlines()
    eq_block, neq, sense = None, 0, "min"
    body = []
    for line in raw:
        s = line.strip()
        if not s:
            continue
        if s.startswith(TAG):
            parts = s.split()
            if parts[1] == "equalities":
                eq_block, neq = int(parts[2]), int(parts[3])
            elif parts[1] == "sense":
                sense = parts[2]
            continue
        if s[0] in '*"':
            continue
        body.append(s)
    if len(body) < 4:
        raise ValueError(f"{path}: truncated SDPA file")
    n = int(_numbers(body[0])[0])
    nblocks = int(_numbers(body[1])[0])
    struct = [int(t) for t in _numbers(body[2])[:nblocks]]
    c = np.array([float(t) for t in _numbers(body[3])[:n]])
    if len(struct) != nblocks or c.size != n:
        raise ValueError(f"{path}: header does not match the declared sizes")
    rows = [(abs(k) * (abs(k) + 1) // 2 if k > 0 else -k) for k in struct]
    data = [([], [], []) for _ in struct]  # row, col, value; col 0 is F_0
    for s in body[4:]:
        t = _numbers(s)
        mat, blk, i, j, v = int(t[0]), int(t[1]), int(t[2]), int(t[3]), float(t[4])
        k = struct[blk - 1]
        if k > 0:
            i, j = min(i, j), max(i, j)
            r = (i - 1) * k - (i - 1) * (i - 2) // 2 + (j - i)
        else:
            if i != j:
                raise ValueError(f"{path}: off-diagonal entry in diagonal block {blk}")
            r = i - 1
        d = data[blk - 1]
        d[0].append(r)
        d[1].append(mat)
        d[2].append(v)
    blocks, A_eq, b_eq = [], None, None
    for bi, (k, nr, (r, col, v)) in enumerate(zip(struct, rows, data), start=1):
        M = sp.csr_matrix((v, (r, col)), shape=(nr, n + 1))
        g0 = -M[:, 0].toarray().ravel()
        G = M[:, 1:]
        if bi == eq_block:
            A_eq, b_eq = G[:neq], -g0[:neq]
            continue
        blocks.append(ConeBlock("psd" if k > 0 else "nonneg", abs(k), G, g0))
    if sense == "max":
        c = -c
    return ConicProgram(n, c, sense, A_eq, b_eq, blocks)
