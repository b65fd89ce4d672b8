"""Batch driver for the manufactured-solution convergence study.

Runs the refinement sequence for each (nu, eps) case, writes one CSV of
errors and slopes per case plus a machine-readable JSON summary.
"""

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

from . import manufactured, norms, scheme
from .mesh import build_unit_square_mesh
from .quadrature import quad_rule

logger = logging.getLogger("peterlin_fem")

DEFAULT_CASES = [(0.1, 0.1), (0.1, 1e-3), (1.0, 0.0)]
DEFAULT_NS = [16, 32, 64]
FULL_NS = [16, 32, 64, 128, 256]

ERROR_NAMES = [f"Er{i}" for i in range(1, 7)]
PRIMED_NAMES = [f"Er{i}p" for i in range(1, 7)]


@dataclass
class RunConfig:
    cases: list = field(default_factory=lambda: list(DEFAULT_CASES))
    Ns: list = field(default_factory=lambda: list(DEFAULT_NS))
    dt_ratio: float = 0.5
    T: float = 0.5
    delta0: float = 1.0
    diagonal: str = "right"
    solver_tol: float = 1e-10
    primed: bool = False
    out_dir: str = "results"
    log_file: str = None


def exact_triple():
    """The manufactured exact solution bundled for projections and norms."""
    return scheme.AnalyticTriple(
        velocity=manufactured.velocity,
        pressure=manufactured.pressure,
        conformation=manufactured.conformation,
        velocity_gradient=manufactured.velocity_gradient,
        conformation_gradient=manufactured.conformation_gradient,
        pressure_gradient=manufactured.pressure_gradient,
    )


def run_case(N, nu, eps, dt_ratio=0.5, T=0.5, delta0=1.0, diagonal="right",
             solver_tol=1e-10, primed=False):
    """One (case, N) simulation; returns {'h': 1/N, 'Er1': ..., ...}."""
    mesh = build_unit_square_mesh(N, diagonal)
    quad = quad_rule(5)
    dt = dt_ratio / N
    params = scheme.Params(nu=nu, eps=eps, dt=dt, T=T, delta0=delta0)
    exact = exact_triple()
    tracker = norms.TrajectoryErrors(mesh, quad, exact, dt, primed=primed)
    scheme.run_simulation(
        mesh, quad, params,
        w=manufactured.given_velocity_w,
        f=lambda xy, t: manufactured.forcing_f(xy, t, nu),
        F=lambda xy, t: manufactured.forcing_F(xy, t, eps),
        exact=exact, observer=tracker.update, solver_tol=solver_tol)
    result = {"h": 1.0 / N}
    result.update(tracker.report())
    return result


def run_study(config):
    """Run every (case, N) pair; write CSVs and a JSON summary.

    Failed runs are recorded and the study continues.  Returns
    (reports, failures).
    """
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = []
    failures = []
    for nu, eps in config.cases:
        report = norms.ErrorReport(nu=nu, eps=eps, Ns=[])
        names = ERROR_NAMES + (PRIMED_NAMES if config.primed else [])
        for name in names:
            report.errors[name] = []
        for N in config.Ns:
            t0 = time.time()
            try:
                row = run_case(N, nu, eps, dt_ratio=config.dt_ratio, T=config.T,
                               delta0=config.delta0, diagonal=config.diagonal,
                               solver_tol=config.solver_tol, primed=config.primed)
            except Exception as exc:
                logger.error("case (%g, %g) N=%d failed: %s", nu, eps, N, exc)
                failures.append({"nu": nu, "eps": eps, "N": N, "error": str(exc)})
                continue
            report.Ns.append(N)
            for name in names:
                report.errors[name].append(row[name])
            logger.info("case (%g, %g) N=%d done in %.1fs", nu, eps, N, time.time() - t0)
        reports.append(report)
        _write_csv(out_dir / f"case_nu{nu:g}_eps{eps:g}.csv", report)
    _write_summary(out_dir / "summary.json", config, reports, failures)
    return reports, failures


def _write_csv(path, report):
    slope_table = report.slope_table()
    names = list(report.errors)
    header = ["h"] + names + [f"slope{n[2:]}" for n in names]
    lines = [",".join(header)]
    for i, N in enumerate(report.Ns):
        row = [f"{1.0 / N:.6e}"]
        row += [f"{report.errors[n][i]:.6e}" for n in names]
        row += ["" if slope_table[n][i] is None else f"{slope_table[n][i]:.6e}" for n in names]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _write_summary(path, config, reports, failures):
    payload = {
        "config": asdict(config),
        "cases": [{
            "nu": r.nu, "eps": r.eps, "Ns": r.Ns,
            "errors": r.errors, "slopes": r.slope_table(),
        } for r in reports],
        "failures": failures,
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_summary(path):
    """Reload a summary written by run_study into ErrorReport objects."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    reports = [norms.ErrorReport(nu=c["nu"], eps=c["eps"], Ns=c["Ns"], errors=c["errors"])
               for c in payload["cases"]]
    return reports, payload["failures"]


def _parse_case(text):
    try:
        nu_s, eps_s = text.split(":")
        nu, eps = float(nu_s), float(eps_s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"case must look like '<nu>:<eps>', got {text!r}")
    if nu <= 0 or eps < 0:
        raise argparse.ArgumentTypeError(f"need nu > 0 and eps >= 0, got {text!r}")
    return nu, eps


def _parse_n_list(text):
    try:
        values = [int(s) for s in text.split(",") if s]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad division-number list {text!r}")
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError(f"division numbers must be positive, got {text!r}")
    return values


def _positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="peterlin-study",
        description="Convergence study for the stabilized Lagrange-Galerkin "
                    "Peterlin viscoelastic solver on the unit square.")
    parser.add_argument("--case", dest="cases", action="append", type=_parse_case,
                        metavar="NU:EPS", help="viscosity pair; repeatable "
                        "(default: 0.1:0.1, 0.1:0.001, 1:0)")
    parser.add_argument("--N", dest="Ns", type=_parse_n_list, metavar="N1,N2,...",
                        help="divisions per side (default 16,32,64)")
    parser.add_argument("--dt-ratio", type=_positive_float, default=0.5,
                        help="time step as a multiple of h = 1/N (default 0.5)")
    parser.add_argument("--T", type=_positive_float, default=0.5, help="final time")
    parser.add_argument("--delta0", type=_positive_float, default=1.0,
                        help="pressure stabilization constant")
    parser.add_argument("--diagonal", choices=["right", "left"], default="right",
                        help="cell split orientation")
    parser.add_argument("--solver-tol", type=_positive_float, default=1e-10,
                        help="relative residual tolerance of the linear solver")
    parser.add_argument("--primed", action="store_true",
                        help="also compute quadrature-based errors against the exact solution")
    parser.add_argument("--full", action="store_true",
                        help="extend the default N list to 128 and 256")
    parser.add_argument("--out", default="results", help="output directory")
    parser.add_argument("--log", default=None, help="log file (default: stderr)")
    return parser


def parse_args(argv=None):
    args = build_parser().parse_args(argv)
    Ns = args.Ns if args.Ns is not None else (list(FULL_NS) if args.full else list(DEFAULT_NS))
    return RunConfig(
        cases=args.cases if args.cases else list(DEFAULT_CASES),
        Ns=Ns, dt_ratio=args.dt_ratio, T=args.T, delta0=args.delta0,
        diagonal=args.diagonal, solver_tol=args.solver_tol, primed=args.primed,
        out_dir=args.out, log_file=args.log)


def main(argv=None):
    config = parse_args(argv)
    handler = (logging.FileHandler(config.log_file) if config.log_file
               else logging.StreamHandler(sys.stderr))
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    logging.getLogger().addHandler(handler)
    logging.getLogger().setLevel(logging.INFO)
    _, failures = run_study(config)
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
