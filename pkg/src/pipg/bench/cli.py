"""Command-line interface.

Exit codes: 0 success, 1 usage or input error, 2 certificate failure,
3 solver error. ``PIPG_OUT_DIR`` supplies the output directory when
``--out`` is not given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from ..errors import CertificateError, FormatError
from ..ocp import build_masses, build_quadrotor, load_ocp, save_ocp, stack_ocp
from ..problem import load_problem, save_problem
from ..solvers import (
    SolverConfig,
    admm_solve,
    pdhg_const_solve,
    pdhg_varying_solve,
    pipg_solve,
    pipgeq_solve,
)
from .experiment import CSV_COLUMNS, SOLVERS, ExperimentConfig, format_number, run_experiment
from .reference import ReferenceBundle, compute_reference

EXIT_OK, EXIT_USAGE, EXIT_CERT, EXIT_SOLVER = 0, 1, 2, 3
OUT_ENV = "PIPG_OUT_DIR"

METHODS = {
    "pipg": pipg_solve,
    "admm": admm_solve,
    "pipgeq": pipgeq_solve,
    "pdhg": pdhg_const_solve,
    "pdhg-acc": pdhg_varying_solve,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _out_dir(arg, default: str) -> Path:
    if arg:
        return Path(arg)
    return Path(os.environ.get(OUT_ENV) or default)


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _periods(text):
    try:
        vals = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError("restart periods must be >= 0")
    return tuple(v for v in vals if v > 0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pipg", description="First-order conic solvers and benchmarks.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("solve", help="solve a problem file with one method")
    p.add_argument("problem")
    p.add_argument("--method", choices=sorted(METHODS), default="pipg")
    p.add_argument("--iters", type=_positive, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=_positive, default=1)
    p.add_argument("--restart", type=int, default=0, help="restart period (pipg, pdhg-acc)")
    p.add_argument("--reference", help="reference file for the error metrics")
    p.add_argument("--out")

    b = sub.add_parser("bench", help="multi-trial solver comparison on a builtin problem")
    b.add_argument("problem", choices=["masses", "quadrotor", "toy"])
    b.add_argument("--trials", type=_positive, default=100)
    b.add_argument("--iters", type=_positive, default=100_000)
    b.add_argument("--restart", type=_periods, default=(100, 1000),
                   help="comma-separated restart periods for extra PIPG series (0 for none)")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--solvers", default=",".join(SOLVERS))
    b.add_argument("--batch", type=_positive, default=20, help="trials advanced together")
    b.add_argument("--admm-inner-iters", type=_positive, default=None)
    b.add_argument("--reference", help="reuse a reference file instead of computing one")
    b.add_argument("--out")

    s = sub.add_parser("stack", help="stack an OCP file into a problem file")
    s.add_argument("ocp")
    s.add_argument("--out", required=True)

    c = sub.add_parser("certify", help="compute and certify a reference saddle point")
    c.add_argument("problem")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--max-iters", type=_positive, default=1_000_000)
    c.add_argument("--out", required=True)

    e = sub.add_parser("export-ocp", help="write a builtin OCP to a file")
    e.add_argument("name", choices=["masses", "quadrotor"])
    e.add_argument("--out", required=True)
    return parser


def _load_reference(path) -> ReferenceBundle:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        return ReferenceBundle.from_dict(d)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise FormatError(str(path), f"cannot read reference: {exc}") from exc


def _cmd_solve(args) -> int:
    prob = load_problem(args.problem)
    ref = _load_reference(args.reference).reference if args.reference else None
    if ref is not None and ref.z_star.shape != (prob.n,):
        raise UsageError("reference does not match the problem dimensions")
    cfg = SolverConfig(max_iters=args.iters, seed=args.seed, trials=args.trials, reference=ref,
                       restart_period=max(0, args.restart) if args.method in ("pipg", "pdhg-acc") else 0)
    tr = METHODS[args.method](prob, config=cfg)
    out = _out_dir(args.out, "pipg-out")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "trace.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(CSV_COLUMNS + ("feasibility", "ergodicFeasibility")) + "\n")
        nan = np.full(tr.feas.shape, np.nan)
        cols = [tr.error_opt, tr.error_fea, tr.cert_lhs_fea, tr.cert_rhs_fea,
                tr.cert_lhs_gap, tr.cert_rhs_gap, tr.feas, tr.erg_feas]
        cols = [nan if c is None else c for c in cols]
        for row, it in enumerate(tr.iters):
            for t in range(tr.trials):
                fh.write(",".join([str(int(it)), str(t)] + [format_number(c[row, t]) for c in cols]) + "\n")
    sol = {"method": tr.method, "schedule": tr.schedule, "iterations": tr.n_iters,
           "z": tr.z[:, 0].tolist(),
           "w": None if tr.w is None else tr.w[:, 0].tolist()}
    (out / "solution.json").write_text(json.dumps(sol) + "\n", encoding="utf-8")
    print(f"{tr.method}: {tr.n_iters} iterations, final d_K = {float(np.median(tr.feas[-1])):.3e}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    solvers = tuple(s.strip() for s in args.solvers.split(",") if s.strip())
    options = {}
    if args.admm_inner_iters is not None:
        options["admm"] = {"inner_max_iters": args.admm_inner_iters}
    ref = _load_reference(args.reference) if args.reference else None
    try:
        cfg = ExperimentConfig(problem=args.problem, solvers=solvers, options=options,
                               trials=args.trials, seed=args.seed, max_iters=args.iters,
                               out_dir=_out_dir(args.out, "pipg-bench"), restarts=args.restart,
                               batch=args.batch, reference=ref)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    res = run_experiment(cfg, log=lambda line: print(line, file=sys.stderr))
    for name, s in res.series.items():
        print(f"{name}: median errorOpt {s.final_median('error_opt'):.3e}, "
              f"median errorFea {s.final_median('error_fea'):.3e}")
    return EXIT_OK


def _cmd_stack(args) -> int:
    save_problem(stack_ocp(load_ocp(args.ocp)), args.out)
    return EXIT_OK


def _cmd_certify(args) -> int:
    prob = load_problem(args.problem)
    bundle = compute_reference(prob, seed=args.seed, max_iters=args.max_iters)
    Path(args.out).write_text(json.dumps(bundle.to_dict(), indent=1) + "\n", encoding="utf-8")
    r = bundle.residuals
    print(f"certified after {bundle.iterations} iterations: fixed-point {r.fixed_point:.2e}, "
          f"feasibility {r.feasibility:.2e}, complementarity {r.complementarity:.2e}")
    return EXIT_OK


def _cmd_export(args) -> int:
    save_ocp(build_masses() if args.name == "masses" else build_quadrotor(), args.out)
    return EXIT_OK


COMMANDS = {"solve": _cmd_solve, "bench": _cmd_bench, "stack": _cmd_stack,
            "certify": _cmd_certify, "export-ocp": _cmd_export}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CertificateError as exc:
        print(f"certificate failure: {exc}", file=sys.stderr)
        return EXIT_CERT
    except (UsageError, FormatError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - any remaining failure is the solver's
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
