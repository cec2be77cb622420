"""Command-line front end.

Exit status: 0 when every SDP solved to tolerance, 2 when a solve ended in
any other state, 1 on usage or input errors.  Progress goes to stderr.

JSON keys written by every subcommand: ``command``, ``problem``,
``hierarchy``, ``solver``, ``status`` and ``result``.  ``result`` holds the
subcommand's fields listed in :data:`RESULT_KEYS`, all always present
(``null`` when not applicable).

CSV columns:

* ``solve``, ``roa``, ``invariant``, ``gsos``, ``probctrl``:
  ``parameter,a_hat,mc_volume,mc_stderr`` (one row per parameter; the MC
  columns repeat the check at ``a_hat``);
* ``feasible-set``: ``a1..am,p_a,member`` on a parameter grid;
* ``dual``: ``a1..am,integrated_w,member`` on a parameter grid;
* ``mc-check``: ``a1..am,volume,stderr,inclusion_holds``.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import os
import sys

import numpy as np

from .dual import argmax_on_certified_set, build_pd2f, solve_dual
from .feasible import build_p21d, solve_feasible_set, trivial_certificate
from .io import VpSyntaxError, build_problem, parse_problem_file, to_jsonable, write_csv, write_json
from .montecarlo import SampleBudget, grid_search, problem_inclusion, problem_volume
from .sdp import BACKENDS, SolveReport
from .sdp.sdpa import export_sdpa
from .volume import build_p2m, solve_volume

log = logging.getLogger("volopt")

RESULT_KEYS = {
    "solve": ("a_hat", "volume_estimate", "relaxation_order", "diffuse", "eig_ratio", "feasible_set", "moment",
              "mc_volume", "mc_stderr", "inclusion_holds", "witness", "notes"),
    "feasible-set": ("degree", "objective", "poly_a", "eps_a", "eps_k", "report", "grid_members", "grid_points"),
    "dual": ("beta", "degree", "a_hat", "integrated_w_max", "local_positivity", "report", "feasible_set"),
    "mc-check": ("a", "volume", "stderr", "inclusion_holds", "witness", "samples", "grid"),
    "export-sdpa": ("stage", "path", "blocks", "variables"),
}
APP_COMMANDS = ("roa", "invariant", "probctrl", "gsos")
for _c in APP_COMMANDS:
    RESULT_KEYS[_c] = RESULT_KEYS["solve"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _seed_default() -> int:
    env = os.environ.get("VOLOPT_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"VOLOPT_SEED must be an integer, got {env!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="volopt", description="Constrained volume optimisation by moment relaxations.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("problem", help=".vp problem file")
        sp.add_argument("--relax-order", type=int, help="moment relaxation order r")
        sp.add_argument("--feas-degree", type=int, help="degree d of the feasible-set polynomial")
        sp.add_argument("--dual-degree", type=int, help="degree of the dual polynomial W (default 2r)")
        sp.add_argument("--eps-a", type=float)
        sp.add_argument("--eps-k", type=float)
        sp.add_argument("--tol-feas", type=float, default=1e-6)
        sp.add_argument("--tol-psd", type=float, default=1e-7)
        sp.add_argument("--max-iter", type=int, default=50000)
        sp.add_argument("--time-limit", type=float, help="seconds per SDP")
        sp.add_argument("--backend", choices=BACKENDS, default="auto")
        sp.add_argument("--seed", type=int, help="sampling seed (default: $VOLOPT_SEED or 0)")
        sp.add_argument("--samples", type=int, default=100_000, help="Monte Carlo samples")
        sp.add_argument("--output", "-o", help="JSON result file")
        sp.add_argument("--csv", help="CSV plot data file")
        sp.add_argument("--quiet", "-q", action="store_true", help="only warnings on stderr")
        sp.add_argument("--verbose", "-v", action="store_true", help="solver iteration log on stderr")

    for name, text in [("solve", "feasible set then moment relaxation"),
                       ("feasible-set", "feasible-parameter polynomial only"),
                       ("dual", "SOS dual and its parameter estimate")] + [
                      (c, f"{c} application file, solved end to end") for c in APP_COMMANDS]:
        common(sub.add_parser(name, help=text))
    mc = sub.add_parser("mc-check", help="Monte Carlo volume and inclusion at given parameters")
    common(mc)
    mc.add_argument("--at", nargs="+", help="parameter values, e.g. --at -0.2 or --at=-0.6,0,-0.9")
    mc.add_argument("--grid", type=int, help="grid search with this many points per axis instead of --at")
    ex = sub.add_parser("export-sdpa", help="write one SDP stage in SDPA sparse format")
    common(ex)
    ex.add_argument("--stage", choices=("feasible", "moment", "dual"), default="moment")
    return p


def _solve_kw(args) -> dict:
    return {"tol_feas": args.tol_feas, "tol_psd": args.tol_psd, "max_iter": args.max_iter, "backend": args.backend,
            "time_limit": args.time_limit, "verbose": args.verbose}


def _load(args):
    pf = parse_problem_file(args.problem)
    cmd = args.command
    if cmd in APP_COMMANDS and pf.app != cmd:
        raise UsageError(f"{args.problem} has no {cmd} section")
    prob = build_problem(pf, d=args.feas_degree, r=args.relax_order, eps_a=args.eps_a, eps_k=args.eps_k,
                         d_w=args.dual_degree)
    return pf, prob


def _report(rep):
    return None if rep is None else rep.to_dict()


def _parse_at(values, m):
    if not values:
        raise UsageError("mc-check needs --at or --grid")
    parts = [float(t) for v in values for t in v.split(",") if t.strip()]
    if len(parts) != m:
        raise UsageError(f"--at needs {m} values, got {len(parts)}")
    return np.array(parts)


def _grid(m, k):
    axes = [np.linspace(-1.0, 1.0, k)] * m
    return np.array(list(itertools.product(*axes)))


def _grid_size(m):
    return {1: 201, 2: 51}.get(m, 11)


def cmd_feasible(args, prob, payload):
    kw = _solve_kw(args)
    cert = solve_feasible_set(prob, **kw)
    u = _grid(prob.m, _grid_size(prob.m))
    a = prob.a_from_unit(u)
    member = np.atleast_1d(cert.contains(a))
    vals = np.atleast_1d(cert.poly_a.evaluate(u))
    names = list(prob.blocks.a_names)
    payload["result"].update(
        degree=cert.degree, objective=cert.objective, poly_a=cert.poly_a.to_string(names), eps_a=cert.eps_a,
        eps_k=cert.eps_k, report=_report(cert.report), grid_members=int(member.sum()), grid_points=int(member.size))
    rows = [list(ai) + [v, bool(mb)] for ai, v, mb in zip(a, vals, member)]
    return [cert.report], (names + ["p_a", "member"], rows)


def _cert(args, prob):
    if prob.s2.is_whole_space:
        return trivial_certificate(prob)
    log.info("stage 1: feasible-set program")
    return solve_feasible_set(prob, **_solve_kw(args))


def _cert_summary(cert):
    return {"trivial": cert.trivial, "objective": cert.objective, "degree": cert.degree,
            "report": _report(cert.report)}


def _empty(prob, cert):
    """True when no grid point is certified; stage 2 then has no feasible point."""
    if cert.trivial:
        return False
    if np.any(cert.contains(prob.a_from_unit(_grid(prob.m, _grid_size(prob.m))))):
        return False
    log.warning("certified parameter set is empty on the grid; skipping stage 2")
    return True


def _skipped(cert):
    nan = float("nan")
    return [SolveReport("infeasible-suspected", nan, nan, nan, 0, 0.0, "none")] + (
        [cert.report] if cert.report is not None else [])


def cmd_solve(args, prob, payload):
    cert = _cert(args, prob)
    if _empty(prob, cert):
        payload["result"].update(feasible_set=_cert_summary(cert), notes=["certified parameter set is empty"])
        return _skipped(cert), None
    log.info("stage 2: moment relaxation")
    sol = solve_volume(prob, cert, **_solve_kw(args))
    budget = SampleBudget(args.samples, args.seed)
    log.info("checking a_hat by Monte Carlo (%d samples)", args.samples)
    mc = problem_volume(prob, sol.a_hat, budget)
    inc = problem_inclusion(prob, sol.a_hat, budget)
    payload["result"].update(
        a_hat=sol.a_hat, volume_estimate=sol.volume_estimate, relaxation_order=sol.relaxation_order,
        diffuse=sol.diffuse, eig_ratio=sol.eig_ratio, feasible_set=_cert_summary(cert), moment=_report(sol.report),
        mc_volume=mc.estimate, mc_stderr=mc.stderr, inclusion_holds=inc.holds, witness=inc.witness, notes=sol.notes)
    rows = [[n, v, mc.estimate, mc.stderr] for n, v in zip(prob.blocks.a_names, sol.a_hat)]
    reports = [sol.report] + ([cert.report] if cert.report is not None else [])
    return reports, (["parameter", "a_hat", "mc_volume", "mc_stderr"], rows)


def cmd_dual(args, prob, payload):
    cert = _cert(args, prob)
    if _empty(prob, cert):
        payload["result"].update(feasible_set=_cert_summary(cert))
        return _skipped(cert), None
    log.info("stage 2: SOS dual")
    dual = solve_dual(prob, cert, **_solve_kw(args))
    a_hat, wmax = argmax_on_certified_set(dual, cert)
    u = _grid(prob.m, _grid_size(prob.m))
    a = prob.a_from_unit(u)
    member = np.atleast_1d(cert.contains(a)) if not cert.trivial else np.ones(len(u), bool)
    iw = np.atleast_1d(dual.integrated_w.evaluate(u))
    payload["result"].update(beta=dual.beta, degree=dual.degree, a_hat=a_hat, integrated_w_max=wmax,
                             local_positivity=dual.local_positivity, report=_report(dual.report),
                             feasible_set=_cert_summary(cert))
    rows = [list(ai) + [v, bool(mb)] for ai, v, mb in zip(a, iw, member)]
    reports = [dual.report] + ([cert.report] if cert.report is not None else [])
    return reports, (list(prob.blocks.a_names) + ["integrated_w", "member"], rows)


def cmd_mc(args, prob, payload):
    budget = SampleBudget(args.samples, args.seed)
    grid = None
    if args.grid:
        log.info("grid search, %d points per axis", args.grid)
        g = grid_search(prob, args.grid, budget)
        a = g.a
        grid = {"resolution": args.grid, "feasible_points": g.n_feasible, "points": g.n_points}
    else:
        a = _parse_at(args.at, prob.m)
    est = problem_volume(prob, a, budget)
    inc = problem_inclusion(prob, a, budget)
    payload["result"].update(a=a, volume=est.estimate, stderr=est.stderr, inclusion_holds=inc.holds,
                             witness=inc.witness, samples=args.samples, grid=grid)
    return [], (list(prob.blocks.a_names) + ["volume", "stderr", "inclusion_holds"],
                [list(a) + [est.estimate, est.stderr, inc.holds]])


def cmd_export(args, prob, payload):
    if not args.output:
        raise UsageError("export-sdpa needs --output FILE.dat-s")
    reports = []
    if args.stage == "feasible":
        prog, _ = build_p21d(prob)
    else:
        cert = _cert(args, prob)
        reports = [cert.report] if cert.report is not None else []
        prog = build_p2m(prob, cert)[0] if args.stage == "moment" else build_pd2f(prob, cert)[0]
    export_sdpa(prog, args.output)
    payload["result"].update(stage=args.stage, path=args.output,
                             blocks=len(prog.blocks) + (1 if prog.A_eq.shape[0] else 0), variables=prog.n)
    return reports, None


HANDLERS = {"solve": cmd_solve, "feasible-set": cmd_feasible, "dual": cmd_dual, "mc-check": cmd_mc,
            "export-sdpa": cmd_export, **{c: cmd_solve for c in APP_COMMANDS}}


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.seed is None:
            args.seed = _seed_default()
    except UsageError as exc:
        print(f"volopt: error: {exc}", file=sys.stderr)
        return 1
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("[volopt] %(message)s"))
    root = logging.getLogger("volopt")
    root.handlers[:] = [handler]
    root.setLevel(logging.WARNING if args.quiet else logging.INFO)
    root.propagate = False
    try:
        pf, prob = _load(args)
        payload = {"command": args.command, "problem": os.path.abspath(args.problem),
                   "hierarchy": prob.hierarchy.to_dict(), "seed": args.seed,
                   "solver": {"backend": args.backend, "tol_feas": args.tol_feas, "tol_psd": args.tol_psd,
                              "max_iter": args.max_iter},
                   "result": dict.fromkeys(RESULT_KEYS[args.command])}
        reports, table = HANDLERS[args.command](args, prob, payload)
    except (UsageError, VpSyntaxError, ValueError, OSError) as exc:
        print(f"volopt: error: {exc}", file=sys.stderr)
        return 1
    bad = [r.status for r in reports if r.status != "optimal"]
    payload["status"] = bad[0] if bad else "optimal" if reports else "no-solve"
    if args.output and args.command != "export-sdpa":
        write_json(args.output, payload)
    else:
        print(json.dumps(to_jsonable(payload), indent=2, sort_keys=True))
    if args.csv and table is not None:
        write_csv(args.csv, *table)
    for r in reports:
        log.info("solver %s: %s, objective %.6g, residual %.1e, psd %.1e, %d iterations, %.1fs", r.backend,
                 r.status, r.objective, r.primal_residual, r.psd_violation, r.iterations, r.wall_time)
    return 0 if not bad else 2


def main() -> None:
    sys.exit(run())
