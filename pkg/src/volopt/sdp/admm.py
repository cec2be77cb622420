"""Reference first-order conic solver.

Operator splitting (ADMM) on ``min c'x s.t. Ax + s = b, s in K``: each
iteration solves one sparse quasi-definite linear system (a projection onto
the affine constraint set, factorised once per penalty value) and projects
onto the cone blockwise, PSD blocks by eigendecomposition.  Over-relaxation,
Ruiz equilibration with one scale per PSD block, and residual-balancing
penalty updates follow common practice for such solvers.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .program import tri_len
from .standard import SQRT2, StandardForm

log = logging.getLogger(__name__)


@dataclass
class AdmmSettings:
    max_iter: int = 50000
    tol_feas: float = 1e-6
    tol_psd: float = 1e-7
    tol_gap: float = 1e-6
    alpha: float = 1.6
    sigma: float = 1e-6
    rho: float = 0.1
    eq_rho_factor: float = 1e3
    check_every: int = 25
    adapt_every: int = 100
    adapt_factor: float = 5.0
    ruiz_iters: int = 15
    time_limit: float | None = None
    verbose: bool = False


class _Cone:
    """Blockwise projection onto {0}^z x R+^l x PSD(k1) x ...."""

    def __init__(self, sf: StandardForm):
        self.zero = sf.zero
        self.nonneg = sf.nonneg
        self.psd = list(sf.psd)
        self.offsets = sf.psd_offsets()
        self.tri = [np.triu_indices(k) for k in self.psd]
        self.w = [np.where(i == j, 1.0, SQRT2) for i, j in self.tri]

    def _unsvec(self, v, k, idx):
        iu, ju = self.tri[idx]
        m = np.zeros((k, k))
        m[iu, ju] = v / self.w[idx]
        m[ju, iu] = m[iu, ju]
        return m

    def project(self, v: np.ndarray) -> np.ndarray:
        out = v.copy()
        out[: self.zero] = 0.0
        nn = slice(self.zero, self.zero + self.nonneg)
        out[nn] = np.maximum(out[nn], 0.0)
        for idx, (k, off) in enumerate(zip(self.psd, self.offsets)):
            sl = slice(off, off + tri_len(k))
            if k == 1:
                out[sl] = max(out[sl][0], 0.0)
                continue
            m = self._unsvec(v[sl], k, idx)
            lam, vec = np.linalg.eigh(m)
            if lam[0] >= 0:
                continue
            pos = lam > 0
            if not pos.any():
                out[sl] = 0.0
                continue
            vp = vec[:, pos] * lam[pos]
            p = vp @ vec[:, pos].T
            iu, ju = self.tri[idx]
            out[sl] = p[iu, ju] * self.w[idx]
        return out

    def dist_dual(self, z: np.ndarray) -> float:
        """Distance of z from the dual cone (free on zero rows)."""
        zz = z.copy()
        zz[: self.zero] = 0.0
        return float(np.linalg.norm(self.project(zz) - zz, np.inf)) if zz.size else 0.0


def _ruiz(sf: StandardForm, iters: int):
    """Diagonal equilibration; rows of one PSD block share a single scale."""
    A = sf.A.tocsc().astype(float)
    m, n = A.shape
    D = np.ones(n)
    E = np.ones(m)
    groups = np.zeros(m, dtype=np.int64)
    gid = 0
    for i in range(sf.zero + sf.nonneg):
        groups[i] = gid
        gid += 1
    for k, off in zip(sf.psd, sf.psd_offsets()):
        groups[off : off + tri_len(k)] = gid
        gid += 1
    ngroups = gid
    As = A.copy()
    for _ in range(iters):
        Ar = As.tocsr()
        col_norm = np.sqrt(np.asarray(abs(As).max(axis=0).todense()).ravel())
        row_max = np.asarray(abs(Ar).max(axis=1).todense()).ravel()
        gmax = np.zeros(ngroups)
        np.maximum.at(gmax, groups, row_max)
        row_norm = np.sqrt(gmax[groups])
        col_norm[col_norm < 1e-8] = 1.0
        row_norm[row_norm < 1e-8] = 1.0
        dD = 1.0 / col_norm
        dE = 1.0 / row_norm
        As = sp.diags(dE) @ As @ sp.diags(dD)
        D *= dD
        E *= dE
    return sp.csc_matrix(As), D, E


def solve_admm(sf: StandardForm, settings: AdmmSettings, check=None):
    """Run ADMM.  ``check(x)`` is an optional callback returning
    (primal_residual, psd_violation) in the caller's units, used for the
    stopping rule; otherwise scaled residuals are used.

    Returns ``(status, x, s, z, info)`` in unscaled standard-form units.
    """
    t0 = time.perf_counter()
    m, n = sf.A.shape
    cone = _Cone(sf)
    As, D, E = _ruiz(sf, settings.ruiz_iters)
    bs = E * sf.b
    cs = D * sf.c
    sb = 1.0 / max(1.0, np.linalg.norm(bs, np.inf))
    sc = 1.0 / max(1.0, np.linalg.norm(cs, np.inf))
    bs = bs * sb
    cs = cs * sc
    AsT = sp.csc_matrix(As.T)

    rho_vec = np.full(m, settings.rho)
    rho_vec[: sf.zero] *= settings.eq_rho_factor

    def factor(rv):
        K = sp.bmat(
            [[settings.sigma * sp.identity(n), AsT], [As, -sp.diags(1.0 / rv)]],
            format="csc",
        )
        return spla.splu(K, permc_spec="COLAMD", options={"SymmetricMode": True})

    lu = factor(rho_vec)
    rho = settings.rho
    x = np.zeros(n)
    s = np.zeros(m)
    y = np.zeros(m)
    alpha = settings.alpha
    sigma = settings.sigma
    status = "max-iterations"
    it = 0
    x_prev, y_prev = x.copy(), y.copy()
    info = {}

    def unscale(x, s, y):
        xu = D * x / sb
        su = s / (E * sb)
        zu = -E * y / sc
        return xu, su, zu

    for it in range(1, settings.max_iter + 1):
        rhs = np.concatenate([sigma * x - cs, bs - s + y / rho_vec])
        sol = lu.solve(rhs)
        xt = sol[:n]
        nu = sol[n:]
        st = s - (nu + y) / rho_vec
        xr = alpha * xt + (1 - alpha) * x
        sr = alpha * st + (1 - alpha) * s
        s_new = cone.project(sr + y / rho_vec)
        y = y + rho_vec * (sr - s_new)
        x = xr
        s = s_new

        if it % settings.check_every and it != settings.max_iter:
            continue

        Ax = As @ x
        rp = Ax + s - bs
        ATy = AsT @ y
        rd = cs - ATy
        # unscaled quantities for the stopping rule
        xu, su, zu = unscale(x, s, y)
        rp_u = (rp / E) / sb
        rd_u = (rd / D) / sc
        pobj = float(sf.c @ xu)
        dobj = float(-sf.b @ zu)
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        dres = np.linalg.norm(rd_u, np.inf) / (1.0 + max(np.linalg.norm(sf.c, np.inf), np.linalg.norm(rd_u - sf.c, np.inf)))
        if check is not None:
            pres, psdv = check(xu)
        else:
            pres = float(np.linalg.norm(rp_u, np.inf))
            psdv = -pres
        info = dict(iterations=it, pobj=pobj, dobj=dobj, gap=gap, dual_res=dres, primal_res=pres, psd=psdv, rho=rho)
        if settings.verbose and it % (settings.check_every * 40) == 0:
            log.info("it %6d pobj %.8e dobj %.8e gap %.2e pres %.2e psd %.2e dres %.2e rho %.1e",
                     it, pobj, dobj, gap, pres, psdv, dres, rho)
        if pres <= settings.tol_feas and psdv >= -settings.tol_psd and gap <= settings.tol_gap and dres <= settings.tol_gap:
            status = "optimal"
            break
        if not np.all(np.isfinite(x)) or np.linalg.norm(x, np.inf) > 1e14:
            status = "infeasible-suspected"
            break
        # infeasibility certificates from successive differences
        dy = y - y_prev
        dx = x - x_prev
        ny = np.linalg.norm(dy, np.inf)
        nx = np.linalg.norm(dx, np.inf)
        if ny > 1e-8 and it > 10 * settings.check_every:
            dz = -dy
            if (np.linalg.norm(AsT @ dz, np.inf) <= 1e-7 * ny and bs @ dz < -1e-6 * ny
                    and cone.dist_dual(dz) <= 1e-6 * ny):
                status = "infeasible-suspected"
                break
        if nx > 1e-8 and it > 10 * settings.check_every:
            Adx = As @ dx
            if cs @ dx < -1e-6 * nx and np.linalg.norm(cone.project(-Adx) + Adx, np.inf) <= 1e-7 * nx:
                status = "infeasible-suspected"
                break
        x_prev, y_prev = x.copy(), y.copy()
        if settings.time_limit is not None and time.perf_counter() - t0 > settings.time_limit:
            break

        if it % settings.adapt_every == 0:
            np_ = np.linalg.norm(rp, np.inf) / max(np.linalg.norm(Ax, np.inf), np.linalg.norm(s, np.inf), np.linalg.norm(bs, np.inf), 1e-10)
            nd_ = np.linalg.norm(rd, np.inf) / max(np.linalg.norm(ATy, np.inf), np.linalg.norm(cs, np.inf), 1e-10)
            if np_ > 0 and nd_ > 0:
                new_rho = float(np.clip(rho * np.sqrt(np_ / nd_), 1e-6, 1e6))
                if new_rho > settings.adapt_factor * rho or new_rho < rho / settings.adapt_factor:
                    ratio = new_rho / rho
                    rho = new_rho
                    rho_vec = rho_vec * ratio
                    lu = factor(rho_vec)

    xu, su, zu = unscale(x, s, y)
    info.setdefault("iterations", it)
    info["wall_time"] = time.perf_counter() - t0
    return status, xu, su, zu, info
