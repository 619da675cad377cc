"""Command-line harness: solve, esvd, multirhs, verify, reproduce.

Exit codes: 0 converged (or checks passed), 2 iteration/cycle budget
exhausted, 3 breakdown, 4 input error.  Every solver run writes a
convergence CSV and prints one machine-parseable summary line.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys as _sys
from pathlib import Path

import numpy as np

from .deflation import DeflationBasis
from .esvd import EsvdConfig, gssy_dr
from .multi_rhs import context_from_esvd, dtricg_solve, empty_context, multi_rhs_driver
from .operators import IdentityOperator, spd_operator_from_matrix
from .problems import (
    DEFAULT_SEED,
    MatrixMarketError,
    gen_ones_rhs,
    gen_synth1,
    gen_synth3,
    random_rhs_sequence,
    read_matrix_market,
    write_history_csv,
)
from .reports import BREAKDOWN, CONVERGED, ConvergenceRecord
from .sparse import SparseMatrix
from .system import SqdSystem
from .tricg import tricg_solve
from .tricg_dr import TricgDrConfig, tricg_dr_solve

__all__ = ["main", "parse_summary"]

EXIT_OK = 0
EXIT_BUDGET = 2
EXIT_BREAKDOWN = 3
EXIT_INPUT = 4

log = logging.getLogger("sqdkrylov")

# Table of SuiteSparse matrices used by the second reproduction experiment,
# mapped to their subspace parameters (p, k).
EXP2_PARAMS = {
    "gupta3": (240, 120),
    "g7jac060sc": (60, 20),
    "rajat27": (100, 40),
    "TSOPF_RS_b300_c2": (120, 40),
}


class InputError(Exception):
    pass


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="sqdkrylov",
        description="Solvers for symmetric quasi-definite block 2x2 systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--synth1", action="store_true", help="diagonal test problem 1")
        p.add_argument("--synth3", action="store_true", help="diagonal test problem 3")
        p.add_argument("--matrix", action="append", default=[], help="MatrixMarket file for A")
        p.add_argument("--mass", help="MatrixMarket file for the SPD block M")
        p.add_argument("--stiffness", help="MatrixMarket file for the SPD block N")
        p.add_argument("--rhs", default="random", help="ones | random | file:<path>")
        p.add_argument("--solver", default="tricg", choices=["tricg", "tricg-dr", "d-tricg"])
        p.add_argument("-p", type=int, default=100, help="maximum subspace dimension")
        p.add_argument("-k", type=int, default=20, help="number of deflation triplets")
        p.add_argument("--tol", type=float, default=1e-8)
        p.add_argument("--eps-svd", type=float, default=1e-10)
        p.add_argument("--maxcycle", type=int, default=10)
        p.add_argument("--maxit", type=int, default=80000)
        p.add_argument("--reorth", choices=["on", "off"], default=None)
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--out", default=None, help="output CSV path (or directory for reproduce)")
        p.add_argument("--exact-residuals", action="store_true",
                       help="record explicitly computed residual norms in the CSV")

    p_solve = sub.add_parser("solve", help="solve one block system")
    add_common(p_solve)

    p_esvd = sub.add_parser("esvd", help="approximate elliptic singular triplets")
    add_common(p_esvd)

    p_multi = sub.add_parser("multirhs", help="solve a sequence of right-hand sides")
    add_common(p_multi)
    p_multi.add_argument("--nrhs", type=int, default=5)

    p_verify = sub.add_parser("verify", help="run the invariant suite")
    p_verify.add_argument("--random", action="store_true", help="use random instances")
    p_verify.add_argument("--seed", type=int, default=DEFAULT_SEED)

    p_rep = sub.add_parser("reproduce", help="rerun a reported experiment")
    p_rep.add_argument("experiment", choices=["exp1", "exp2", "exp3", "stokes-files"])
    add_common(p_rep)
    p_rep.add_argument("--nrhs", type=int, default=10)
    return parser


def _load_spd(path, dim, label):
    if path is None:
        return IdentityOperator(dim)
    mat = _read_matrix(path)
    if mat.shape != (dim, dim):
        raise InputError(f"{label} block {path}: shape {mat.shape}, expected {(dim, dim)}")
    return spd_operator_from_matrix(mat.to_scipy())


def _read_matrix(path):
    if not os.path.exists(path):
        raise InputError(f"missing file: {path}")
    try:
        return read_matrix_market(path)
    except MatrixMarketError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _build_system(args):
    if args.synth1:
        return gen_synth1(seed=args.seed)
    if args.synth3:
        return gen_synth3(seed=args.seed)
    if args.matrix:
        a = _read_matrix(args.matrix[0])
        m, n = a.shape
        return SqdSystem(
            M=_load_spd(args.mass, m, "mass"),
            N=_load_spd(args.stiffness, n, "stiffness"),
            A=a,
            name=Path(args.matrix[0]).stem,
            seed=args.seed,
        )
    raise InputError("no problem selected (use --synth1, --synth3, or --matrix)")


def _build_rhs(args, sys_):
    recipe = args.rhs
    if recipe == "ones":
        return gen_ones_rhs(sys_.m, sys_.n)
    if recipe == "random":
        if sys_.b is not None:
            return sys_.b, sys_.c
        return random_rhs_sequence(sys_.m, sys_.n, 1, args.seed)[0]
    if recipe.startswith("file:"):
        path = recipe[5:]
        if not os.path.exists(path):
            raise InputError(f"missing file: {path}")
        data = np.loadtxt(path)
        if data.ndim != 1 or data.size != sys_.m + sys_.n:
            raise InputError(f"{path}: expected {sys_.m + sys_.n} values, got {data.shape}")
        return data[: sys_.m], data[sys_.m:]
    raise InputError(f"unknown rhs recipe {recipe!r}")


def _exit_code(status):
    if status == CONVERGED:
        return EXIT_OK
    if status == BREAKDOWN:
        return EXIT_BREAKDOWN
    return EXIT_BUDGET


def _summary(fields):
    return "summary " + " ".join(f"{k}={v}" for k, v in fields.items())


def parse_summary(line):
    """Parse a summary line back into a dict (inverse of the printer)."""
    if not line.startswith("summary "):
        raise ValueError(f"not a summary line: {line!r}")
    out = {}
    for token in line[len("summary "):].split():
        key, value = token.split("=", 1)
        out[key] = value
    return out


def _exact_residual_records(sys_, b, c, report, iterates):
    records = [report.records[0]]
    for rec, (x, y) in zip(report.records[1:], iterates):
        exact = sys_.residual_hinv_norm(b, c, x, y)
        records.append(
            ConvergenceRecord(rec.iteration, rec.matvecs, exact, rec.cycle, rec.stage)
        )
    return records


def _write_history(args, report, default_name, sys_=None, b=None, c=None, iterates=None):
    out = args.out if args.out else default_name
    records = report.records
    if args.exact_residuals and iterates is not None:
        records = _exact_residual_records(sys_, b, c, report, iterates)
    write_history_csv(out, records)
    return out


def _cmd_solve(args):
    sys_ = _build_system(args)
    b, c = _build_rhs(args, sys_)
    reorth_flag = args.reorth
    collect = args.exact_residuals
    if args.solver == "tricg":
        x, y, report = tricg_solve(
            sys_,
            b,
            c,
            tol=args.tol,
            maxit=args.maxit,
            reorth=(reorth_flag == "on"),
            collect_iterates=collect,
        )
        cycles = 1
        iterates = getattr(report, "iterates", None)
    elif args.solver == "tricg-dr":
        cfg = TricgDrConfig(
            p=args.p,
            k=args.k,
            tol=args.tol,
            eps_svd=args.eps_svd,
            maxcycle=args.maxcycle,
            maxit=args.maxit,
            reorth=(reorth_flag != "off"),
        )
        result = tricg_dr_solve(sys_, b, c, cfg, collect_iterates=collect)
        x, y, report = result.x, result.y, result.report
        cycles = report.cycles
        iterates = getattr(report, "iterates", None)
    else:  # d-tricg: build the deflation basis first, then warm start
        cfg = EsvdConfig(p=args.p, k=args.k, eps_svd=args.eps_svd, maxcycle=args.maxcycle)
        esvd_result = gssy_dr(sys_, cfg)
        ctx = (
            context_from_esvd(sys_, esvd_result)
            if esvd_result.sigma.size
            else empty_context(sys_)
        )
        x, y, report = dtricg_solve(sys_, ctx, b, c, tol=args.tol, maxit=args.maxit)
        cycles = esvd_result.cycles
        iterates = None
    out = _write_history(args, report, "history.csv", sys_, b, c, iterates)
    print(
        _summary(
            {
                "command": "solve",
                "solver": args.solver,
                "status": report.status,
                "iterations": report.iterations,
                "matvecs": report.matvecs,
                "residual": f"{report.final_residual:.17e}",
                "cycles": cycles,
                "seed": args.seed,
                "out": out,
            }
        )
    )
    return _exit_code(report.status)


def _cmd_esvd(args):
    sys_ = _build_system(args)
    cfg = EsvdConfig(p=args.p, k=args.k, eps_svd=args.eps_svd, maxcycle=args.maxcycle)
    if args.rhs == "ones":
        b, c = gen_ones_rhs(sys_.m, sys_.n)
        result = gssy_dr(sys_, cfg, b=b, c=c)
    else:
        result = gssy_dr(sys_, cfg)
    records = [
        ConvergenceRecord(
            cycle + 1,
            result.matvec_history[cycle] if cycle < len(result.matvec_history) else 0,
            float(np.max(res)),
            cycle + 1,
            "esvd",
        )
        for cycle, res in enumerate(result.residual_history)
    ]
    out = args.out if args.out else "esvd_history.csv"
    if records:
        write_history_csv(out, records)
    print(
        _summary(
            {
                "command": "esvd",
                "status": result.status,
                "cycles": result.cycles,
                "converged": result.converged,
                "matvecs": result.matvecs,
                "residual": f"{result.achieved_eps:.17e}",
                "seed": args.seed,
                "out": out,
            }
        )
    )
    return _exit_code(result.status)


def _cmd_multirhs(args):
    sys_ = _build_system(args)
    rhs_list = random_rhs_sequence(sys_.m, sys_.n, args.nrhs, args.seed)
    cfg = TricgDrConfig(
        p=args.p,
        k=args.k,
        tol=args.tol,
        eps_svd=args.eps_svd,
        maxcycle=args.maxcycle,
        maxit=args.maxit,
        reorth=(args.reorth != "off"),
    )
    results = multi_rhs_driver(sys_, rhs_list, cfg)
    out_base = args.out if args.out else "multirhs"
    total_matvecs = 0
    worst = CONVERGED
    for i, (_, _, report) in enumerate(results, start=1):
        write_history_csv(f"{out_base}_rhs{i}.csv", report.records)
        total_matvecs += report.matvecs
        if report.status != CONVERGED:
            worst = report.status
    print(
        _summary(
            {
                "command": "multirhs",
                "nrhs": args.nrhs,
                "status": worst,
                "matvecs": total_matvecs,
                "seed": args.seed,
                "out": f"{out_base}_rhs*.csv",
            }
        )
    )
    return _exit_code(worst)


def _cmd_verify(args):
    from . import selfcheck

    failures = selfcheck.run_suite(seed=args.seed)
    if failures:
        for name, detail in failures:
            print(f"FAIL {name}: {detail}")
        return EXIT_BUDGET
    print(f"summary command=verify status=pass seed={args.seed}")
    return EXIT_OK


def _outdir(args):
    out = Path(args.out) if args.out else Path("reproduce")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_reproduce(args):
    if args.experiment == "exp1":
        return _reproduce_exp1(args)
    if args.experiment == "exp2":
        return _reproduce_exp2(args)
    if args.experiment == "exp3":
        return _reproduce_exp3(args)
    return _reproduce_stokes(args)


def _reproduce_exp1(args):
    out = _outdir(args)
    sys_ = gen_synth1(seed=args.seed)
    b, c = sys_.rhs()
    rows = []
    x, y, report = tricg_solve(sys_, b, c, tol=1e-8, maxit=40000)
    write_history_csv(out / "exp1_tricg.csv", report.records)
    rows.append(("tricg", 0, report.status, report.iterations, report.matvecs))
    log.info("exp1 tricg: %s in %d iterations", report.status, report.iterations)
    for k in (20, 40, 60):
        cfg = TricgDrConfig(p=k + 80, k=k, tol=1e-8, eps_svd=1e-10, maxcycle=80, maxit=40000)
        result = tricg_dr_solve(sys_, b, c, cfg)
        write_history_csv(out / f"exp1_tricg_dr_k{k}.csv", result.report.records)
        rows.append(
            ("tricg-dr", k, result.report.status, result.report.iterations, result.report.matvecs)
        )
        log.info("exp1 tricg-dr k=%d: %s in %d iterations", k, result.report.status,
                 result.report.iterations)
    _write_comparison(out / "exp1_summary.csv", rows)
    ok = all(r[2] == CONVERGED for r in rows[1:])
    print(
        _summary(
            {
                "command": "reproduce",
                "experiment": "exp1",
                "status": CONVERGED if ok else "incomplete",
                "seed": args.seed,
                "out": str(out),
            }
        )
    )
    return EXIT_OK if ok else EXIT_BUDGET


def _reproduce_exp2(args):
    out = _outdir(args)
    if not args.matrix:
        print("exp2 requires --matrix files from the SuiteSparse collection", file=_sys.stderr)
        return EXIT_INPUT
    rows = []
    for path in args.matrix:
        a = _read_matrix(path)
        name = Path(path).stem
        p, k = EXP2_PARAMS.get(name, (args.p, args.k))
        m, n = a.shape
        sys_ = SqdSystem(M=IdentityOperator(m), N=IdentityOperator(n), A=a, name=name)
        b, c = gen_ones_rhs(m, n)
        x, y, report = tricg_solve(sys_, b, c, tol=1e-8, maxit=80000)
        write_history_csv(out / f"exp2_{name}_tricg.csv", report.records)
        rows.append((f"tricg:{name}", 0, report.status, report.iterations, report.matvecs))
        cfg = TricgDrConfig(p=p, k=k, tol=1e-8, eps_svd=1e-10, maxcycle=10, maxit=80000)
        result = tricg_dr_solve(sys_, b, c, cfg)
        write_history_csv(out / f"exp2_{name}_tricg_dr.csv", result.report.records)
        rows.append(
            (
                f"tricg-dr:{name}",
                k,
                result.report.status,
                result.report.iterations,
                result.report.matvecs,
            )
        )
    _write_comparison(out / "exp2_summary.csv", rows)
    ok = all(r[2] == CONVERGED for r in rows)
    print(
        _summary(
            {
                "command": "reproduce",
                "experiment": "exp2",
                "status": CONVERGED if ok else "incomplete",
                "seed": args.seed,
                "out": str(out),
            }
        )
    )
    return EXIT_OK if ok else EXIT_BUDGET


def _reproduce_exp3(args):
    out = _outdir(args)
    sys_ = gen_synth3(seed=args.seed)
    rhs_list = random_rhs_sequence(sys_.m, sys_.n, 5, args.seed)
    rows = []
    contexts = {}
    for k in (20, 40):
        cfg = EsvdConfig(p=k + 40, k=k, eps_svd=1e-12, maxcycle=30)
        result = gssy_dr(sys_, cfg)
        contexts[k] = context_from_esvd(sys_, result)
        log.info("exp3 esvd k=%d: %d cycles, residual %.2e", k, result.cycles,
                 result.achieved_eps)
    for i, (b, c) in enumerate(rhs_list, start=1):
        x, y, report = tricg_solve(sys_, b, c, tol=1e-8, maxit=4000)
        write_history_csv(out / f"exp3_rhs{i}_tricg.csv", report.records)
        rows.append((f"tricg:rhs{i}", 0, report.status, report.iterations, report.matvecs))
        for k in (20, 40):
            x, y, report = dtricg_solve(sys_, contexts[k], b, c, tol=1e-8, maxit=4000)
            write_history_csv(out / f"exp3_rhs{i}_dtricg_k{k}.csv", report.records)
            rows.append(
                (f"d-tricg-k{k}:rhs{i}", k, report.status, report.iterations, report.matvecs)
            )
    _write_comparison(out / "exp3_summary.csv", rows)
    ok = all(r[2] == CONVERGED for r in rows)
    print(
        _summary(
            {
                "command": "reproduce",
                "experiment": "exp3",
                "status": CONVERGED if ok else "incomplete",
                "seed": args.seed,
                "out": str(out),
            }
        )
    )
    return EXIT_OK if ok else EXIT_BUDGET


def _reproduce_stokes(args):
    out = _outdir(args)
    if not args.matrix or args.mass is None or args.stiffness is None:
        missing = [
            flag
            for flag, val in (
                ("--matrix", args.matrix),
                ("--mass", args.mass),
                ("--stiffness", args.stiffness),
            )
            if not val
        ]
        print(f"stokes-files requires {' '.join(missing)}", file=_sys.stderr)
        return EXIT_INPUT
    a = _read_matrix(args.matrix[0])
    m, n = a.shape
    sys_ = SqdSystem(
        M=_load_spd(args.mass, m, "mass"),
        N=_load_spd(args.stiffness, n, "stiffness"),
        A=a,
        name="stokes",
    )
    rhs_list = random_rhs_sequence(m, n, args.nrhs, args.seed)
    cfg = TricgDrConfig(
        p=args.p, k=args.k, tol=args.tol, eps_svd=args.eps_svd,
        maxcycle=args.maxcycle, maxit=args.maxit,
    )
    results = multi_rhs_driver(sys_, rhs_list, cfg)
    rows = []
    recycled_matvecs = 0
    for i, (_, _, report) in enumerate(results, start=1):
        write_history_csv(out / f"stokes_rhs{i}_recycled.csv", report.records)
        rows.append((f"recycled:rhs{i}", args.k, report.status, report.iterations, report.matvecs))
        recycled_matvecs += report.matvecs
    plain_matvecs = 0
    for i, (b, c) in enumerate(rhs_list, start=1):
        x, y, report = tricg_solve(sys_, b, c, tol=args.tol, maxit=args.maxit)
        write_history_csv(out / f"stokes_rhs{i}_tricg.csv", report.records)
        rows.append((f"tricg:rhs{i}", 0, report.status, report.iterations, report.matvecs))
        plain_matvecs += report.matvecs
    _write_comparison(out / "stokes_summary.csv", rows)
    ok = all(r[2] == CONVERGED for r in rows)
    print(
        _summary(
            {
                "command": "reproduce",
                "experiment": "stokes-files",
                "status": CONVERGED if ok else "incomplete",
                "matvecs_recycled": recycled_matvecs,
                "matvecs_tricg": plain_matvecs,
                "seed": args.seed,
                "out": str(out),
            }
        )
    )
    return EXIT_OK if ok else EXIT_BUDGET


def _write_comparison(path, rows):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("solver,k,status,iterations,matvecs\n")
        for solver, k, status, iterations, matvecs in rows:
            fh.write(f"{solver},{k},{status},{iterations},{matvecs}\n")


def main(argv=None):
    level = os.environ.get("SQD_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else 0
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "esvd":
            return _cmd_esvd(args)
        if args.command == "multirhs":
            return _cmd_multirhs(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "reproduce":
            return _cmd_reproduce(args)
    except InputError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_INPUT
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_INPUT
    return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
