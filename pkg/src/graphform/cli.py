"""Command-line front end.

Subcommands: ``solve`` a problem file, ``generate`` a random instance,
``equilibrate`` a matrix file, ``bench`` a sweep of generated instances.
Every flag has an environment-variable twin named ``GRAPHFORM_<FLAG>``
(dashes as underscores); explicit flags win.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path

import numpy as np

from . import __version__
from .equilibration import check_equilibrated, equilibrate, rescale_even
from .errors import GraphFormError
from .generators import FAMILIES, GenSpec, canonical_family, generate
from .io import load_problem, read_matrix, save_problem
from .solver import SolverSettings, Status, solve

ENV_PREFIX = "GRAPHFORM_"

BENCH_FIELDS = (
    "family", "m", "n", "nnz", "iterations", "status",
    "solve_time_s", "setup_time_s", "objective", "r_pri", "r_dual",
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_MAX_ITER = 2


def _env(name: str, default=None):
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"), default)


def _env_float(name, default):
    val = _env(name)
    return default if val is None else float(val)


def _env_int(name, default):
    val = _env(name)
    return default if val is None else int(val)


def _env_flag(name) -> bool:
    val = _env(name)
    return val is not None and val not in ("", "0", "false", "no")


def _add_solver_flags(p: argparse.ArgumentParser):
    p.add_argument("--rho", type=float, default=_env_float("rho", 1.0),
                   help="initial penalty (default 1)")
    p.add_argument("--abs-tol", type=float,
                   default=_env_float("abs_tol", 1e-4))
    p.add_argument("--rel-tol", type=float,
                   default=_env_float("rel_tol", 1e-3))
    p.add_argument("--max-iter", type=int,
                   default=_env_int("max_iter", 10_000))
    p.add_argument("--alpha", type=float, default=_env_float("alpha", 1.7),
                   help="over-relaxation in (0, 2)")
    p.add_argument("--no-adaptive-rho", action="store_true",
                   default=_env_flag("no_adaptive_rho"))
    p.add_argument("--no-equil", action="store_true",
                   default=_env_flag("no_equil"))
    p.add_argument("--indirect", action="store_true",
                   default=_env_flag("indirect"),
                   help="iterative projection instead of a cached factorization")
    p.add_argument("--gap-stop", action="store_true",
                   default=_env_flag("gap_stop"))
    p.add_argument("--verbose", "-v", action="store_true",
                   default=_env_flag("verbose"))


def _settings_from(args) -> SolverSettings:
    return SolverSettings(
        rho0=args.rho,
        abs_tol=args.abs_tol,
        rel_tol=args.rel_tol,
        max_iter=args.max_iter,
        alpha=args.alpha,
        adaptive_rho=not args.no_adaptive_rho,
        equilibrate=not args.no_equil,
        gap_stop=args.gap_stop,
        projection="indirect" if args.indirect else "direct",
        verbose=args.verbose,
    )


def _result_payload(result) -> dict:
    return {
        "status": result.status.value,
        "objective": result.objective,
        "iterations": result.iterations,
        "primal_residual": result.primal_residual,
        "dual_residual": result.dual_residual,
        "gap": result.gap,
        "timings": {
            "solve_s": result.solve_time,
            "setup_s": result.setup_time,
        },
    }


def _cmd_solve(args) -> int:
    try:
        problem = load_problem(args.problem, want_sparse=args.indirect)
    except (GraphFormError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    try:
        settings = _settings_from(args)
        result = solve(problem, settings)
    except GraphFormError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    payload = _result_payload(result)
    text = json.dumps(payload, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    if args.solution_out:
        np.savez(args.solution_out, x=result.x, y=result.y,
                 mu=result.mu, nu=result.nu)
    if result.status is Status.SOLVED:
        return EXIT_OK
    if result.status is Status.MAX_ITERATIONS:
        return EXIT_MAX_ITER
    return EXIT_ERROR


def _cmd_generate(args) -> int:
    try:
        spec = GenSpec(family=args.family, m=args.m, n=args.n, seed=args.seed)
        problem, meta = generate(spec)
    except GraphFormError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    out = Path(args.out)
    save_problem(out, problem, matrix_path=args.matrix_out)
    meta_path = Path(args.meta) if args.meta else out.with_suffix(
        out.suffix + ".meta.json")
    meta_json = {
        k: (v.tolist() if isinstance(v, np.ndarray) else v)
        for k, v in meta.items()
    }
    meta_path.write_text(json.dumps(meta_json))
    print(f"wrote {out} ({problem.m}x{problem.n}) and {meta_path}")
    return EXIT_OK


def _cmd_equilibrate(args) -> int:
    try:
        A = read_matrix(args.matrix, want_sparse=True)
        eq = equilibrate(A, gamma=args.gamma)
        if not args.no_rescale:
            eq = rescale_even(eq, A)
        report = check_equilibrated(A, eq.d, eq.e, p=eq.p, tol=args.tol)
    except (GraphFormError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    prefix = args.out or Path(args.matrix).stem
    np.savetxt(f"{prefix}.d.txt", eq.d)
    np.savetxt(f"{prefix}.e.txt", eq.e)
    payload = report.as_dict()
    payload.update(iterations=eq.iterations, converged=eq.converged,
                   gamma=eq.gamma)
    text = json.dumps(payload, indent=2)
    Path(f"{prefix}.report.json").write_text(text + "\n")
    print(text)
    return EXIT_OK


def _bench_dims(family: str, nnz: float, ratio: float):
    """Dimensions with ~nnz entries and row:col ratio for one family, or
    None when the family does not permit the orientation."""
    n = max(1, round(np.sqrt(nnz / ratio)))
    m = max(1, round(ratio * n))
    if family in ("entropy_max", "lasso"):
        if m >= n:
            return None
        m = max(1, m - 1)  # stacked row keeps the emitted nnz near target
        return m, n
    if family == "portfolio":
        if m >= n:
            return None
        return max(1, m - 1), n
    if m <= n:
        return None
    return m, n


def _bench_one(family, m, n, seed, settings_kwargs):
    problem, _ = generate(GenSpec(family=family, m=m, n=n, seed=seed))
    settings = SolverSettings(**settings_kwargs)
    result = solve(problem, settings)
    return {
        "family": family,
        "m": problem.m,
        "n": problem.n,
        "nnz": problem.m * problem.n,
        "iterations": result.iterations,
        "status": result.status.value,
        "solve_time_s": f"{result.solve_time:.6f}",
        "setup_time_s": f"{result.setup_time:.6f}",
        "objective": f"{result.objective:.12g}",
        "r_pri": f"{result.primal_residual:.6g}",
        "r_dual": f"{result.dual_residual:.6g}",
    }


def _cmd_bench(args) -> int:
    if args.families.strip().lower() == "all":
        families = list(FAMILIES)
    else:
        try:
            families = [canonical_family(f)
                        for f in args.families.split(",") if f.strip()]
        except GraphFormError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_ERROR
    if not families:
        print("error: empty family list", file=sys.stderr)
        print("usage: graphform bench --families lasso,nnls --nnz 1e4 ...",
              file=sys.stderr)
        return EXIT_ERROR
    nnz_list = [float(x) for x in args.nnz.split(",") if x.strip()]
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    ratios = []
    for token in args.aspects.split(","):
        num, _, den = token.partition(":")
        ratios.append(float(num) / float(den or "1"))

    jobs = []
    for family in families:
        for nnz in nnz_list:
            if nnz > args.max_elements:
                print(
                    f"error: nnz {nnz:g} exceeds --max-elements "
                    f"{args.max_elements:g}", file=sys.stderr,
                )
                return EXIT_ERROR
            for ratio in ratios:
                dims = _bench_dims(family, nnz, ratio)
                if dims is None:
                    continue
                for seed in seeds:
                    jobs.append((family, *dims, seed, nnz))

    settings_kwargs = dict(
        rho0=args.rho, abs_tol=args.abs_tol, rel_tol=args.rel_tol,
        max_iter=args.max_iter, alpha=args.alpha,
        adaptive_rho=not args.no_adaptive_rho,
        equilibrate=not args.no_equil,
        projection="indirect" if args.indirect else "direct",
    )

    records = []
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = {
                pool.submit(_bench_one, fam, m, n, seed, settings_kwargs):
                (fam, m, n, seed, target)
                for fam, m, n, seed, target in jobs
            }
            for fut in as_completed(futures):
                rec = fut.result()
                rec["_target"] = futures[fut][4]
                records.append(rec)
    else:
        for fam, m, n, seed, target in jobs:
            rec = _bench_one(fam, m, n, seed, settings_kwargs)
            rec["_target"] = target
            records.append(rec)

    records.sort(key=lambda r: (r["family"], r["_target"], r["m"], r["nnz"]))
    out = Path(args.out)
    with open(out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=BENCH_FIELDS,
                                extrasaction="ignore")
        writer.writeheader()
        writer.writerows(records)

    agg_path = Path(args.agg_out) if args.agg_out else out.with_name(
        out.stem + "_agg" + out.suffix)
    groups = {}
    for rec in records:
        key = (rec["family"], rec["_target"])
        groups.setdefault(key, []).append(float(rec["solve_time_s"]))
    with open(agg_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["family", "nnz", "mean_solve_time_s", "runs"])
        for (family, target), times in sorted(groups.items()):
            writer.writerow([
                family, f"{target:g}",
                f"{float(np.mean(times)):.6f}", len(times),
            ])
    print(f"wrote {out} ({len(records)} records) and {agg_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphform",
        description="solver for graph-form convex problems",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a problem file")
    p_solve.add_argument("problem", help="path to a problem JSON file")
    _add_solver_flags(p_solve)
    p_solve.add_argument("--out", default=_env("out"),
                         help="write the result JSON here as well")
    p_solve.add_argument("--solution-out", default=_env("solution_out"),
                         help="write x, y, mu, nu to this .npz file")
    p_solve.set_defaults(func=_cmd_solve)

    p_gen = sub.add_parser("generate", help="generate a random instance")
    p_gen.add_argument("--family", required=True,
                       help=f"one of: {', '.join(FAMILIES)}")
    p_gen.add_argument("--m", type=int, required=True)
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--seed", type=int, default=_env_int("seed", 0))
    p_gen.add_argument("--out", required=True, help="problem JSON path")
    p_gen.add_argument("--matrix-out", default=None,
                       help="store the matrix in a separate .mtx/.bin file")
    p_gen.add_argument("--meta", default=None,
                       help="metadata sidecar path "
                            "(default: <out>.meta.json)")
    p_gen.set_defaults(func=_cmd_generate)

    p_eq = sub.add_parser("equilibrate", help="equilibrate a matrix file")
    p_eq.add_argument("matrix", help="Matrix Market or raw binary file")
    p_eq.add_argument("--gamma", type=float, default=None,
                      help="regularization (default (m+n)*sqrt(eps))")
    p_eq.add_argument("--tol", type=float, default=1e-2,
                      help="deviation threshold for the report")
    p_eq.add_argument("--no-rescale", action="store_true",
                      help="skip the even Frobenius rescale")
    p_eq.add_argument("--out", default=_env("out"),
                      help="output prefix for d/e vectors and report")
    p_eq.set_defaults(func=_cmd_equilibrate)

    p_bench = sub.add_parser("bench", help="run a benchmark sweep")
    p_bench.add_argument("--families", default="all",
                         help="comma list or 'all'")
    p_bench.add_argument("--nnz", default="1e2,1e4",
                         help="comma list of target matrix sizes")
    p_bench.add_argument("--aspects", default="4:1,1:4",
                         help="row:col ratios; families keep the ones they "
                              "permit")
    p_bench.add_argument("--seeds", default="0,1,2")
    p_bench.add_argument("--jobs", type=int, default=_env_int("jobs", 1))
    p_bench.add_argument("--max-elements", type=float,
                         default=_env_float("max_elements", 5e7),
                         help="refuse instances above this element budget")
    p_bench.add_argument("--out", default=_env("out", "bench.csv"))
    p_bench.add_argument("--agg-out", default=None,
                         help="aggregate CSV (default <out stem>_agg.csv)")
    _add_solver_flags(p_bench)
    p_bench.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
