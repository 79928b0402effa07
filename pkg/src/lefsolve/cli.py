"""Command line front end: ``lefsolve --config FILE --command NAME --out DIR``.

Exit status: 0 success, 2 configuration or input error, 3 NonIntegrable,
4 NoConvergence, 5 verification failure.  Errors are also written to
``<out>/<prefix>error.json`` with a machine-readable category.
"""

import argparse
import logging
import math
import os
import sys

import numpy as np

from . import annulus, asympt, quad, radial, threshold
from .artifacts import write_csv, write_json
from .config import load_config
from .errors import (ConfigError, LefError, MaxPrincipleViolation, NoConvergence,
                     NonIntegrable, VerificationFailure)

log = logging.getLogger("lefsolve")

COMMANDS = ("check", "threshold", "solve-radial", "solve-annulus", "verify", "report")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONINTEGRABLE = 3
EXIT_NOCONVERGENCE = 4
EXIT_VERIFY = 5

DIAGNOSTIC_KEYS = (
    "T", "B_c", "psi_p", "psi_q", "margin", "iterations", "sup_step", "res_y", "res_z",
    "M_measured", "dev_end", "fitted_exponent_u", "fitted_exponent_v",
    "bound_constant_u", "bound_constant_v", "monotonicity_defect",
)

K_SAMPLES = 16
K_TOL = 1e-12
MONO_TOL = 1e-10
SANDWICH_TOL = 1e-10


def exit_status(exc):
    if isinstance(exc, NonIntegrable):
        return EXIT_NONINTEGRABLE
    if isinstance(exc, NoConvergence):
        return EXIT_NOCONVERGENCE
    if isinstance(exc, (VerificationFailure, MaxPrincipleViolation)):
        return EXIT_VERIFY
    if isinstance(exc, (LefError, ValueError)):
        return EXIT_CONFIG
    return 1


def error_category(exc):
    return getattr(exc, "category", type(exc).__name__)


def empty_diagnostics():
    return dict.fromkeys(DIAGNOSTIC_KEYS)


class Run:
    """One command against one configuration, writing into ``out``."""

    def __init__(self, config, out, seed=0, backend=None):
        self.config = config
        self.out = os.fspath(out)
        self.seed = seed
        self.backend = backend
        self.spec = config.problem
        n_maj = config.annulus.n_theta_majorant if config.annulus else 4096
        self.major = self.spec.majorized(n_maj)
        self.diag = empty_diagnostics()

    def path(self, name):
        return os.path.join(self.out, self.config.report.prefix + name)

    # -- shared pieces ------------------------------------------------------

    def threshold(self):
        th = threshold.compute_threshold(self.major)
        self.diag.update(T=th.T, B_c=th.B_c, psi_p=th.psi_p_at_T, psi_q=th.psi_q_at_T,
                         margin=th.margin)
        return th

    def radial_solution(self):
        opts = self.config.solver
        th = self.threshold()
        sol = radial.solve_radial(
            self.major, n=opts.n, S_span=opts.S_span, picard_tol=opts.picard_tol,
            max_iter=opts.max_iter, threshold=th, rel_tol=opts.rel_tol, backend=self.backend,
        )
        # the solver may move the start to where the solution is positive
        self.diag.update(T=sol.threshold.T, B_c=sol.threshold.B_c)
        res_y, res_z = radial.residual_radial(sol, self.major)
        self.diag.update(
            iterations=sol.iterations, sup_step=sol.sup_step, res_y=res_y, res_z=res_z,
            M_measured=float(max(np.max(np.abs(sol.y)), np.max(np.abs(sol.z)))),
            dev_end=[abs(float(sol.y[-1]) - sol.c), abs(float(sol.z[-1]) - sol.c)],
        )
        return sol

    def annulus_solution(self):
        opts = self.config.annulus
        if opts is None:
            raise ConfigError("this command needs an [annulus] section")
        sup = annulus.radial_supersolution(
            self.spec, n_r=opts.n_r, n_theta=opts.n_theta, r_outer=opts.r_outer,
            n_theta_majorant=opts.n_theta_majorant, backend=self.backend,
        )
        th = sup.radial.threshold
        self.diag.update(T=th.T, B_c=th.B_c, psi_p=th.psi_p_at_T, psi_q=th.psi_q_at_T,
                         margin=th.margin)
        sol = annulus.monotone_iterate(
            self.spec, sup.grid, sup.u, sup.v, outer_tol=opts.outer_tol,
            max_outer=opts.max_outer, lin_tol=opts.lin_tol, backend=self.backend,
        )
        res_u, res_v = annulus.residual_annulus(sol, self.spec)
        self.diag.update(
            iterations=sol.outer_iterations, sup_step=sol.updates[-1], res_y=res_u, res_z=res_v,
            M_measured=float(max(np.abs(sol.u).max(), np.abs(sol.v).max())),
            monotonicity_defect=sol.monotonicity_defect,
        )
        return sol

    def document(self, command, **extra):
        doc = {"command": command, "status": "ok", "radial": self.spec.radial,
               "p": self.spec.p.describe(), "q": self.spec.q.describe()}
        doc.update(extra)
        doc["diagnostics"] = self.diag
        return doc

    # -- commands -----------------------------------------------------------

    def check(self):
        lower = self.spec.A + 1.0
        fields = [("p", self.spec.p), ("q", self.spec.q)]
        if not self.spec.radial:
            fields += [("p_majorant", self.major.p), ("q_majorant", self.major.q)]
        results = {}
        for name, fld in fields:
            if not fld.radial:
                results[name] = {"radial": False}
                continue
            res = threshold.check_integrable(fld, lower, 1e-10)
            results[name] = {"radial": True, "value": res.value,
                             "truncation_point": res.truncation_point,
                             "tail_bound": res.tail_bound, "converged": res.converged}
        write_json(self.path("check.json"),
                   self.document("check", lower_limit=lower, integrals=results))
        return EXIT_OK

    def cmd_threshold(self):
        th = self.threshold()
        write_json(self.path("threshold.json"),
                   self.document("threshold", kappa=th.kappa, T_floor=th.T_floor,
                                 majorized=not self.spec.radial))
        return EXIT_OK

    def solve_radial(self):
        sol = self.radial_solution()
        prof = radial.to_physical(sol)
        write_csv(self.path("radial_solution.csv"), ("r", "u", "v"), (prof.r, prof.u, prof.v))
        write_json(self.path("solve-radial.json"),
                   self.document("solve-radial", n=sol.grid.n, S_max=sol.grid.S_max,
                                 majorized=not self.spec.radial))
        return EXIT_OK

    def solve_annulus(self):
        sol = self.annulus_solution()
        R, TH = sol.grid.mesh()
        write_csv(self.path("annulus_solution.csv"), ("r", "theta", "u", "v"),
                  (R, TH, sol.u, sol.v))
        write_json(self.path("solve-annulus.json"),
                   self.document("solve-annulus", n_r=sol.grid.n_r, n_theta=sol.grid.n_theta,
                                 r_inner=sol.grid.r_inner, r_outer=sol.grid.r_outer,
                                 super_violation=sol.super_violation,
                                 angular_variance_u=annulus.angular_variance(sol.u)))
        return EXIT_OK

    def verify(self):
        checks = []

        def record(name, value, bound, passed):
            checks.append({"name": name, "value": value, "bound": bound, "passed": bool(passed)})

        sol = self.radial_solution()
        c = sol.c
        record("picard_converged", sol.sup_step, sol.picard_tol, sol.sup_step <= sol.picard_tol)
        margin = radial.k_membership_margin(sol)
        record("k_margin", margin, -K_TOL, margin >= -K_TOL)
        norm = self.diag["M_measured"]
        record("bound_2c", norm, 2.0 * c, norm <= 2.0 * c)
        bu, bv = asympt.limit_bounds(sol, self.major)
        du, dv = self.diag["dev_end"]
        record("limit_u", du, bu, du <= bu)
        record("limit_v", dv, bv, dv <= bv)
        tol = self.config.solver.res_tol
        record("residual_y", self.diag["res_y"], tol, self.diag["res_y"] <= tol)
        record("residual_z", self.diag["res_z"], tol, self.diag["res_z"] <= tol)
        drop = float(min(np.diff(sol.y).min(), np.diff(sol.z).min()))
        record("nondecreasing", drop, -K_TOL, drop >= -K_TOL)
        low = float(min(sol.y.min(), sol.z.min()))
        record("positive", low, 0.0, low > 0.0)
        k_img = self.k_invariance(sol)
        record("F_maps_K_into_K", k_img, -K_TOL, k_img >= -K_TOL)

        if self.config.annulus is not None:
            radial_diag = dict(self.diag)
            ann = self.annulus_solution()
            record("monotonicity_defect", ann.monotonicity_defect, -MONO_TOL,
                   ann.monotonicity_defect >= -MONO_TOL)
            record("below_supersolution", ann.super_violation, SANDWICH_TOL,
                   ann.super_violation <= SANDWICH_TOL)
            monotone = ann.monotonicity_defect
            self.diag = radial_diag
            self.diag["monotonicity_defect"] = monotone

        ok = all(ch["passed"] for ch in checks)
        doc = self.document("verify", seed=self.seed, checks=checks)
        doc["status"] = "ok" if ok else "failed"
        write_json(self.path("verify.json"), doc)
        width = max(len(ch["name"]) for ch in checks)
        for ch in checks:
            print(f"{'PASS' if ch['passed'] else 'FAIL'}  {ch['name']:<{width}}  "
                  f"value={ch['value']:.6e}  bound={ch['bound']:.6e}")
        return EXIT_OK if ok else EXIT_VERIFY

    def k_invariance(self, sol):
        """Worst K-membership margin of F applied to random members of K."""
        rng = np.random.default_rng(self.seed)
        c = sol.c
        op = radial.RadialOperator(self.major, sol.grid, self.config.solver.rel_tol, self.backend)
        worst = math.inf
        for _ in range(K_SAMPLES):
            y = c + c * rng.uniform(-1.0, 1.0, sol.grid.n)
            z = c + c * rng.uniform(-1.0, 1.0, sol.grid.n)
            fy, fz = op(y, z)
            worst = min(worst, float(np.min(c - np.abs(fy - c))), float(np.min(c - np.abs(fz - c))))
        return worst

    def report(self):
        sol = self.radial_solution()
        opts = self.config.report
        rep = asympt.decay_fit(sol, self.major, window=opts.window, max_samples=opts.max_samples)
        self.diag.update(
            fitted_exponent_u=rep.fitted_exponent_u, fitted_exponent_v=rep.fitted_exponent_v,
            bound_constant_u=rep.bound_constant_u, bound_constant_v=rep.bound_constant_v,
        )
        write_csv(self.path("decay.csv"), ("r", "dev_u", "I_p", "dev_v", "I_q"),
                  (rep.sample_radii, rep.deviations_u, rep.ip_values,
                   rep.deviations_v, rep.iq_values))
        write_json(self.path("report.json"), self.document(
            "report", window=list(rep.window), samples=len(rep.sample_radii),
            claimed_exponent_u=rep.claimed_exponent_u,
            claimed_exponent_v=rep.claimed_exponent_v,
            note="claimed exponents are reported for comparison and not asserted",
        ))
        return EXIT_OK

    def dispatch(self, command):
        table = {
            "check": self.check, "threshold": self.cmd_threshold,
            "solve-radial": self.solve_radial, "solve-annulus": self.solve_annulus,
            "verify": self.verify, "report": self.report,
        }
        if command not in table:
            raise ConfigError(f"unknown command {command!r}")
        return table[command]()


def run_command(config, command, out, seed=0, backend=None):
    """Run ``command`` and write its artifacts; returns the exit status.

    Library errors are caught, written to ``error.json`` and mapped to an
    exit status.
    """
    prefix = config.report.prefix
    try:
        return Run(config, out, seed, backend).dispatch(command)
    except (LefError, ValueError, ArithmeticError) as exc:
        return _report_error(out, prefix, command, exc)


def _report_error(out, prefix, command, exc):
    status = exit_status(exc)
    write_json(os.path.join(os.fspath(out), prefix + "error.json"), {
        "command": command, "status": "error", "category": error_category(exc),
        "message": str(exc), "exit_status": status,
    })
    print(f"error [{error_category(exc)}]: {exc}", file=sys.stderr)
    return status


def build_parser():
    ap = argparse.ArgumentParser(
        prog="lefsolve",
        description="Bounded positive solutions of a sublinear Lane-Emden-Fowler "
                    "system outside a disc.",
    )
    ap.add_argument("--config", required=True, help="configuration file")
    ap.add_argument("--command", required=True, choices=COMMANDS)
    ap.add_argument("--out", default=".", help="output directory (default: current)")
    ap.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    ap.add_argument("--backend", choices=("numba", "numpy"), default=None,
                    help="kernel backend (default from LEFSOLVE_USE_NUMBA)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        return _report_error(args.out, "", args.command, exc)
    status = run_command(config, args.command, args.out, args.seed, args.backend)
    log.info("%s finished with status %d", args.command, status)
    return status


if __name__ == "__main__":
    sys.exit(main())
