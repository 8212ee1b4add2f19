"""Command-line front end.

Exit codes: 0 success, 1 audit with a failing row, 2 invalid input,
3 numerical failure.
"""

import argparse
import os
import statistics
import sys
import time

import numpy as np

from . import closed_form as cf
from .alm import AlmConfig, alm_solve
from .audit import run_audit
from .errors import NumericalError, ValidationError
from .lab import (Gaussian, Laplacian, NoNoise, OutlierColumns, SparseSpikes,
                  SyntheticSpec, make_instance)
from .linalg import Tolerances, svd
from .matio import read_matrix, write_labels, write_matrix
from .problem import ObjectiveSpec

EXIT_AUDIT_FAIL = 1
EXIT_INVALID = 2
EXIT_NUMERICAL = 3


def _num(x):
    # shortest round-trip representation
    return repr(float(x))


class Report:
    """``key = value`` report with a separate timings section.

    Everything above ``[timings]`` is deterministic for a fixed command
    line and seed.
    """

    def __init__(self, title):
        self.lines = [f"# normrep {title}"]
        self.timings = []

    def section(self, name):
        self.lines.append(f"[{name}]")

    def put(self, key, value):
        if isinstance(value, (bool, np.bool_)):
            value = "true" if value else "false"
        elif isinstance(value, (float, np.floating)):
            value = _num(value)
        elif isinstance(value, (list, tuple, np.ndarray)):
            value = " ".join(_num(v) if isinstance(v, (float, np.floating)) else str(v)
                             for v in value)
        self.lines.append(f"{key} = {value}")

    def time(self, key, seconds):
        self.timings.append(f"{key} = {seconds:.6f}")

    def body(self):
        return "\n".join(self.lines) + "\n"

    def text(self):
        return self.body() + "[timings]\n" + "".join(t + "\n" for t in self.timings)

    def write(self, path):
        with open(path, "w", newline="\n") as fh:
            fh.write(self.text())


def split_body(report_text):
    """Deterministic part of a report (everything before ``[timings]``)."""
    return report_text.split("[timings]")[0]


# --- argument plumbing ---------------------------------------------------------

def _add_spec_flags(p, noise_choices=("none", "gauss", "lap", "l21")):
    p.add_argument("--norm", choices=["f", "nuc"], default="f",
                   help="norm on C: Frobenius (f) or nuclear (nuc) [default: f]")
    p.add_argument("--constraint", choices=["exact", "relaxed"], default="exact",
                   help="self-expression as equality or quadratic penalty [default: exact]")
    p.add_argument("--noise", choices=list(noise_choices), default="none",
                   help="corruption model [default: none]")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="corruption weight (required unless --noise none)")
    p.add_argument("--gamma", type=float, default=None,
                   help="relaxation weight (required with --constraint relaxed)")


def _add_tol_flags(p):
    d = Tolerances()
    p.add_argument("--tol", type=float, default=d.equiv_tol,
                   help=f"equivalence/feasibility tolerance [default: {d.equiv_tol:g}]")
    p.add_argument("--rank-tol", type=float, default=d.rank_tol,
                   help=f"relative singular value cutoff [default: {d.rank_tol:g}]")
    p.add_argument("--recon-tol", type=float, default=d.recon_tol,
                   help=f"relative reconstruction tolerance [default: {d.recon_tol:g}]")


def _add_alm_flags(p):
    d = AlmConfig()
    p.add_argument("--alpha0", type=float, default=None,
                   help="initial ALM penalty [default: 1/||D||_2]")
    p.add_argument("--rho", type=float, default=d.rho, help=f"penalty growth [default: {d.rho}]")
    p.add_argument("--max-iter", type=int, default=d.max_iter,
                   help=f"ALM iteration cap [default: {d.max_iter}]")
    p.add_argument("--resid-tol", type=float, default=d.resid_tol,
                   help=f"relative feasibility stop [default: {d.resid_tol:g}]")


def _spec_from(args, fill_defaults=False):
    lam, gamma = args.lam, args.gamma
    if fill_defaults:
        if args.noise != "none" and lam is None:
            lam = 1.0
        if args.constraint == "relaxed" and gamma is None:
            gamma = 1.0
    return ObjectiveSpec(args.norm, args.constraint, args.noise, lam=lam, gamma=gamma)


def _tol_from(args):
    return Tolerances(rank_tol=args.rank_tol, recon_tol=args.recon_tol, equiv_tol=args.tol)


def _alm_from(args):
    return AlmConfig(alpha0=args.alpha0, rho=args.rho, max_iter=args.max_iter,
                     resid_tol=args.resid_tol)


def _put_tolerances(rep, tol, cfg=None):
    rep.section("tolerances")
    rep.put("rank_tol", tol.rank_tol)
    rep.put("recon_tol", tol.recon_tol)
    rep.put("equiv_tol", tol.equiv_tol)
    if cfg is not None:
        rep.put("alpha0", "auto" if cfg.alpha0 is None else cfg.alpha0)
        rep.put("rho", cfg.rho)
        rep.put("max_iter", cfg.max_iter)
        rep.put("resid_tol", cfg.resid_tol)


def _put_spec(rep, spec):
    rep.put("norm", spec.norm)
    rep.put("constraint", spec.constraint)
    rep.put("noise", spec.noise)
    rep.put("lambda", "none" if spec.lam is None else spec.lam)
    rep.put("gamma", "none" if spec.gamma is None else spec.gamma)


# --- commands --------------------------------------------------------------------

def _write_solution(out_dir, result):
    os.makedirs(out_dir, exist_ok=True)
    write_matrix(os.path.join(out_dir, "C.csv"), result.c)
    write_matrix(os.path.join(out_dir, "D0.csv"), result.d0)
    write_matrix(os.path.join(out_dir, "E.csv"), result.e)


def cmd_solve(args, force_alm=False):
    spec = _spec_from(args)
    tol = _tol_from(args)
    cfg = _alm_from(args)
    d = read_matrix(args.input, skip_header=args.header)
    report = Report("alm" if force_alm else "solve")
    t0 = time.perf_counter()
    trace = None
    if force_alm or not spec.closed_form:
        result, trace = alm_solve(spec, d, cfg, tol)
    else:
        result = cf.solve_closed_form(spec, d, tol)
    elapsed = time.perf_counter() - t0

    _write_solution(args.out_dir, result)
    if trace is not None:
        with open(os.path.join(args.out_dir, "trace.csv"), "w", newline="\n") as fh:
            fh.write(trace.to_csv())

    report.section("problem")
    _put_spec(report, spec)
    report.put("rows", d.shape[0])
    report.put("cols", d.shape[1])
    report.section("result")
    report.put("method", result.method)
    report.put("k", result.k)
    report.put("objective", result.objective)
    report.put("spectrum", svd(d, "skinny", tol).sigma)
    diag = result.diagnostics
    for key in ("boundary_indices", "multi_root_indices", "branches", "omega",
                "empty_selection", "converged", "iterations", "residual",
                "k_rule_weight", "e_threshold"):
        if key in diag:
            report.put(key, diag[key])
    if diag.get("boundary_indices"):
        report.put("boundary_branch", "sigma == 1/sqrt(gamma) assigned to zero shrinkage")
    _put_tolerances(report, tol, cfg if trace is not None else None)
    report.time("solve_seconds", elapsed)
    report.write(os.path.join(args.out_dir, "report.txt"))
    return 0


def cmd_equiv(args):
    spec = _spec_from(args, fill_defaults=True)
    tol = _tol_from(args)
    cfg = _alm_from(args)
    mats = [read_matrix(args.input, skip_header=args.header)] if args.input else None
    t0 = time.perf_counter()
    rows = run_audit(spec, trials=args.trials, seed=args.seed, matrices=mats, cfg=cfg, tol=tol)
    elapsed = time.perf_counter() - t0

    report = Report("equiv")
    report.section("problem")
    _put_spec(report, spec)
    report.put("trials", 1 if mats else args.trials)
    report.put("seed", args.seed)
    report.section("audit")
    failed = 0
    for row in rows:
        if row.tolerance is None:
            report.put(row.name, f"{_num(row.value)} INFO")
        else:
            op = "<=" if row.sense == "le" else ">="
            report.put(row.name, f"{_num(row.value)} {op} {_num(row.tolerance)} {row.status}")
        failed += row.status == "FAIL"
    report.put("overall", "FAIL" if failed else "PASS")
    _put_tolerances(report, tol, cfg)
    report.time("audit_seconds", elapsed)
    os.makedirs(args.out_dir, exist_ok=True)
    report.write(os.path.join(args.out_dir, "equiv_report.txt"))
    return EXIT_AUDIT_FAIL if failed else 0


def _median_time(fn, reps):
    times = []
    out = None
    for _ in range(reps):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def bench_rows(sizes, reps=3, seed=0, lam=1.0, cfg=AlmConfig()):
    """Median timings per size: SVD, noise-free and Gaussian closed forms, ALM."""
    rows = []
    for size in sizes:
        m, n = size if isinstance(size, tuple) else (size, size)
        rng = np.random.default_rng([seed, m, n])
        d = rng.standard_normal((m, n))
        t_svd, _ = _median_time(lambda: np.linalg.svd(d, full_matrices=False), reps)
        t_free, _ = _median_time(lambda: cf.shape_interaction(d), reps)
        t_gauss, _ = _median_time(lambda: cf.exact_gaussian(d, lam), reps)
        alm_spec = ObjectiveSpec("frobenius", "exact", "laplacian", lam=lam)
        t_alm, (_, trace) = _median_time(lambda: alm_solve(alm_spec, d, cfg), reps)
        rows.append({"m": m, "n": n, "svd_s": t_svd, "noise_free_s": t_free,
                     "gaussian_s": t_gauss, "alm_s": t_alm, "alm_iterations": len(trace)})
    return rows


def cmd_bench(args):
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    if not sizes or min(sizes) < 1:
        raise ValidationError("--sizes must list positive integers")
    if args.reps < 1:
        raise ValidationError("--reps must be at least 1")
    rows = bench_rows(sizes, args.reps, args.seed, args.lam if args.lam else 1.0, _alm_from(args))
    keys = ["m", "n", "svd_s", "noise_free_s", "gaussian_s", "alm_s", "alm_iterations"]
    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "bench.csv"), "w", newline="\n") as fh:
        fh.write(",".join(keys) + "\n")
        for r in rows:
            fh.write(",".join(f"{r[k]:.6e}" if isinstance(r[k], float) else str(r[k])
                              for k in keys) + "\n")
    return 0


def _parse_subspaces(text):
    out = []
    for part in text.split(","):
        dim, _, count = part.strip().partition("x")
        if not count:
            raise ValidationError(f"subspace {part!r} must look like DIMxCOUNT")
        out.append((int(dim), int(count)))
    return out


def _noise_model(args):
    if args.noise == "none":
        return NoNoise()
    if args.noise == "gauss":
        return Gaussian(args.scale)
    if args.noise == "lap":
        return Laplacian(args.scale, args.fraction if args.fraction is not None else 1.0)
    if args.noise == "spikes":
        return SparseSpikes(args.fraction, args.magnitude)
    return OutlierColumns(args.fraction, args.magnitude)


def cmd_generate(args):
    if args.noise in ("spikes", "outliers") and (args.fraction is None or args.magnitude is None):
        raise ValidationError(f"--noise {args.noise} needs --fraction and --magnitude")
    if args.noise in ("gauss", "lap") and args.scale is None:
        raise ValidationError(f"--noise {args.noise} needs --scale")
    spec = SyntheticSpec(args.ambient, _parse_subspaces(args.subspaces), _noise_model(args),
                         args.seed, signal_scale=args.signal_scale)
    inst = make_instance(spec)
    os.makedirs(args.out_dir, exist_ok=True)
    write_matrix(os.path.join(args.out_dir, "data.csv"), inst.data)
    write_matrix(os.path.join(args.out_dir, "clean.csv"), inst.clean)
    write_labels(os.path.join(args.out_dir, "labels.csv"), inst.labels)
    report = Report("generate")
    report.section("instance")
    report.put("ambient_dim", spec.ambient_dim)
    report.put("subspaces", " ".join(f"{d}x{c}" for d, c in spec.subspaces))
    report.put("noise", repr(spec.noise))
    report.put("seed", spec.seed)
    report.put("signal_scale", spec.signal_scale)
    report.put("corrupted", list(inst.corrupted))
    report.write(os.path.join(args.out_dir, "report.txt"))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="normrep",
        description="Frobenius- and nuclear-norm self-expressive representations.")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_ in (("solve", "solve one instance (closed form, or ALM for lap/l21)"),
                        ("alm", "solve an exact lap/l21 instance with ALM and write its trace")):
        p = sub.add_parser(name, help=help_)
        _add_spec_flags(p)
        _add_tol_flags(p)
        _add_alm_flags(p)
        p.add_argument("--in", dest="input", required=True, help="input matrix CSV")
        p.add_argument("--header", action="store_true", help="skip one header line in --in")
        p.add_argument("--out-dir", required=True)
        p.add_argument("--seed", type=int, default=0, help="unused; accepted for uniformity")

    p = sub.add_parser("equiv", help="audit FNR vs NNR for one constraint/noise setting")
    _add_spec_flags(p)
    _add_tol_flags(p)
    _add_alm_flags(p)
    p.add_argument("--in", dest="input", default=None, help="audit this matrix instead of random ones")
    p.add_argument("--header", action="store_true")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("bench", help="time closed-form vs ALM solves over a size grid")
    p.add_argument("--sizes", default="32,64,128", help="comma-separated square sizes")
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    _add_alm_flags(p)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("generate", help="draw a synthetic union-of-subspaces instance")
    p.add_argument("--ambient", type=int, required=True)
    p.add_argument("--subspaces", required=True, help="e.g. 3x40,3x40,3x40 (DIMxCOUNT)")
    p.add_argument("--noise", choices=["none", "gauss", "lap", "spikes", "outliers"], default="none")
    p.add_argument("--scale", type=float, default=None, help="stddev (gauss) or scale (lap)")
    p.add_argument("--fraction", type=float, default=None)
    p.add_argument("--magnitude", type=float, default=None)
    p.add_argument("--signal-scale", type=float, default=1.0, help="norm of every clean column")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "alm":
            return cmd_solve(args, force_alm=True)
        if args.command == "equiv":
            return cmd_equiv(args)
        if args.command == "bench":
            return cmd_bench(args)
        return cmd_generate(args)
    except (ValidationError, OSError) as exc:
        print(f"normrep: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"normrep: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
