"""Solver front end shared by every SDP stage.

``solve`` accepts a :class:`ConicProgram` and returns the decision vector with
a :class:`SolveReport`.  The reported residuals are always recomputed from the
program data, whatever backend produced the point.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass

import numpy as np

from .admm import AdmmSettings, solve_admm
from .program import ConicProgram
from .residuals import residuals
from .standard import to_standard, split_duals

log = logging.getLogger(__name__)

BACKENDS = ("auto", "admm", "clarabel", "scs")

# Largest PSD block handed to the interior-point backend under "auto"; its
# dense scaling blocks grow with the fourth power of the block size.
AUTO_IPM_MAX_BLOCK = 60


class BackendUnavailable(RuntimeError):
    pass


@dataclass
class SolveReport:
    status: str  # "optimal", "max-iterations", "infeasible-suspected" or "numerical-failure"
    objective: float
    primal_residual: float
    psd_violation: float
    iterations: int
    wall_time: float
    backend: str = "admm"
    dual_objective: float = float("nan")

    @property
    def ok(self) -> bool:
        return self.status == "optimal"

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SolveResult:
    gamma: np.ndarray
    report: SolveReport
    duals: dict | None = None


def available_backends() -> list[str]:
    out = ["admm"]
    for name in ("clarabel", "scs"):
        try:
            __import__(name)
        except ImportError:
            continue
        out.append(name)
    return out


def pick_backend(prog: ConicProgram) -> str:
    biggest = max((b.size for b in prog.blocks if b.kind == "psd"), default=0)
    if biggest <= AUTO_IPM_MAX_BLOCK and "clarabel" in available_backends():
        return "clarabel"
    return "admm"


def solve(
    prog: ConicProgram,
    tol_feas: float = 1e-6,
    tol_psd: float = 1e-7,
    max_iter: int = 50000,
    backend: str = "auto",
    time_limit: float | None = None,
    verbose: bool = False,
    seed: int | None = None,
) -> SolveResult:
    """Solve ``prog`` and certify the returned point against both tolerances.

    A backend that claims optimality but whose point fails the recomputed
    residual check is downgraded to ``numerical-failure``.  ``auto`` uses
    the interior-point backend (clarabel) when it is installed and every PSD
    block is small, and the reference ADMM solver otherwise.  Every backend
    starts from a fixed point, so ``seed`` has no effect on the result; it is
    accepted so callers can pass one uniformly.
    """
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; choose from {', '.join(BACKENDS)}")
    if backend == "auto":
        backend = pick_backend(prog)
    sf = to_standard(prog)
    t0 = time.perf_counter()
    if backend == "admm":
        settings = AdmmSettings(
            max_iter=max_iter, tol_feas=tol_feas, tol_psd=tol_psd, time_limit=time_limit, verbose=verbose
        )

        def check(x):
            r = residuals(prog, x)
            return r.primal, r.psd_violation

        status, x, _, z, info = solve_admm(sf, settings, check=check)
        iters = int(info.get("iterations", 0))
        dobj = info.get("dobj", float("nan"))
    elif backend == "clarabel":
        status, x, z, iters, dobj = _solve_clarabel(sf, tol_feas, max_iter, time_limit, verbose)
    else:
        status, x, z, iters, dobj = _solve_scs(sf, tol_feas, max_iter, time_limit, verbose)
    wall = time.perf_counter() - t0

    if x is None or not np.all(np.isfinite(x)):
        x = np.zeros(prog.n) if x is None else np.nan_to_num(x)
        status = "numerical-failure" if status == "optimal" else status
    r = residuals(prog, x)
    if status == "optimal" and not r.ok(tol_feas, tol_psd):
        log.info("%s returned a point outside tolerance (primal %.2e, psd %.2e)", backend, r.primal, r.psd_violation)
        status = "numerical-failure"
    report = SolveReport(
        status=status,
        objective=prog.objective(x),
        primal_residual=r.primal,
        psd_violation=r.psd_violation,
        iterations=iters,
        wall_time=wall,
        backend=backend,
        dual_objective=float(sf.sign * dobj) if dobj is not None else float("nan"),
    )
    duals = split_duals(sf, prog, z) if z is not None else None
    return SolveResult(x, report, duals)


def _clarabel_perm(k: int) -> np.ndarray:
    """Index map from row-major upper triangle to column-major upper triangle."""
    iu, ju = np.triu_indices(k)
    order = np.lexsort((iu, ju))  # column-major: sort by column then row
    return order


def _solve_clarabel(sf, tol, max_iter, time_limit, verbose):
    try:
        import clarabel
    except ImportError as exc:  # pragma: no cover - depends on environment
        raise BackendUnavailable("clarabel is not installed") from exc
    import scipy.sparse as sp

    perm = np.arange(sf.m)
    cones = []
    if sf.zero:
        cones.append(clarabel.ZeroConeT(sf.zero))
    if sf.nonneg:
        cones.append(clarabel.NonnegativeConeT(sf.nonneg))
    for k, off in zip(sf.psd, sf.psd_offsets()):
        p = _clarabel_perm(k)
        perm[off : off + p.size] = off + p
        cones.append(clarabel.PSDTriangleConeT(k) if k > 1 else clarabel.NonnegativeConeT(1))
    A = sp.csc_matrix(sf.A[perm])
    b = sf.b[perm]
    P = sp.csc_matrix((sf.n, sf.n))

    def run(regularize):
        settings = clarabel.DefaultSettings()
        settings.verbose = verbose
        settings.max_iter = min(max_iter, 500)
        settings.tol_feas = min(tol, 1e-8) * 1e-4
        settings.tol_gap_abs = 1e-12
        settings.tol_gap_rel = 1e-12
        settings.tol_ktratio = 1e-10
        # static regularisation shifts the KKT system enough to bias high
        # order moment programs by about 3e-3; keep it only as a fallback
        settings.static_regularization_enable = regularize
        if time_limit is not None:
            settings.time_limit = float(time_limit)
        return clarabel.DefaultSolver(P, sf.c, A, b, cones, settings).solve()

    sol = run(False)
    if str(sol.status) in ("NumericalError", "InsufficientProgress"):
        log.info("clarabel without regularisation failed (%s); retrying with it", sol.status)
        sol = run(True)
    st = str(sol.status)
    status = "optimal" if st.endswith("Solved") else (
        "infeasible-suspected" if "Infeasible" in st else "max-iterations" if "MaxIter" in st else "numerical-failure")
    z = np.empty(sf.m)
    z[perm] = np.asarray(sol.z)
    return status, np.asarray(sol.x), z, int(sol.iterations), -float(sf.b @ z)


def _solve_scs(sf, tol, max_iter, time_limit, verbose):
    try:
        import scs
    except ImportError as exc:  # pragma: no cover - depends on environment
        raise BackendUnavailable("scs is not installed") from exc
    import scipy.sparse as sp

    cone = {"z": sf.zero, "l": sf.nonneg, "s": list(sf.psd)}
    data = {"A": sp.csc_matrix(sf.A), "b": sf.b, "c": sf.c}
    solver = scs.SCS(data, cone, verbose=verbose, eps_abs=tol * 1e-2, eps_rel=tol * 1e-2, max_iters=max_iter,
                     time_limit_secs=float(time_limit or 0))
    sol = solver.solve()
    st = sol["info"]["status"]
    status = "optimal" if st.startswith("solved") else ("infeasible-suspected" if "infeasible" in st else "max-iterations")
    return status, np.asarray(sol["x"]), np.asarray(sol["y"]), int(sol["info"]["iter"]), float(sol["info"]["dobj"])
