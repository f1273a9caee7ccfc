"""Command-line interface: fit, path, cv, simulate and bench subcommands."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .cv import cv_linear_predictor_score
from .data import SurvivalDataset, build_pairs, load_survival_csv
from .path import fit_path
from .penalty import (
    PenaltySpec,
    elastic_net,
    lambda_grid,
    lambda_max,
    load_groups_csv,
    sparse_group_lasso,
)
from .simulate import SimConfig, TrueCoefSpec, concordance, generate, model_error
from .solver import SolverOptions, fit, gehan_loss
from .wls import fit_wls, wls_lambda_max

logger = logging.getLogger(__name__)

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def _configure_logging():
    level = os.environ.get("RANK_AFT_LOG", "error").lower()
    if level not in _LOG_LEVELS:
        raise ValueError(f"RANK_AFT_LOG must be one of {sorted(_LOG_LEVELS)}")
    logging.basicConfig(level=_LOG_LEVELS[level], format="%(levelname)s %(name)s: %(message)s")


def _solver_options(args) -> SolverOptions:
    return SolverOptions(
        rho_init=args.rho,
        tau=args.tau,
        eps_abs=args.eps_abs,
        eps_rel=args.eps_rel,
        max_iter=args.max_iter,
    )


def _penalty_from_args(args, data: SurvivalDataset) -> PenaltySpec:
    if args.penalty == "en":
        return elastic_net(data.p, alpha=args.alpha)
    if args.groups is None:
        raise ValueError("--groups is required with --penalty sgl")
    names = data.feature_names
    if names is None:
        names = tuple(f"x{k + 1}" for k in range(data.p))
    groups, _ = load_groups_csv(args.groups, names)
    return sparse_group_lasso(groups, alpha=args.alpha)


def _dump_json(obj, path=None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path is None:
        print(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def _write_csv(path, header, rows) -> None:
    out = sys.stdout if path is None else open(path, "w", newline="", encoding="utf-8")
    try:
        writer = csv.writer(out)
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if path is not None:
            out.close()


def cmd_fit(args) -> int:
    data = load_survival_csv(args.input)
    spec = _penalty_from_args(args, data)
    opts = _solver_options(args)
    if args.method == "wls":
        result = fit_wls(data, spec, args.lam, options=opts)
    else:
        result = fit(data, build_pairs(data), spec, args.lam, options=opts)
    _dump_json(
        {
            "method": args.method,
            "penalty": args.penalty,
            "alpha": args.alpha,
            "lambda": args.lam,
            "coef": [float(c) for c in result.coef],
            "iterations": result.iterations,
            "converged": result.converged,
            "primal_residual": result.primal_residual,
            "dual_residual": result.dual_residual,
            "objective": result.objective,
            "rho_final": result.rho_final,
        }
    )
    if args.strict and not result.converged:
        print("error: solver did not converge", file=sys.stderr)
        return 2
    return 0


def cmd_path(args) -> int:
    data = load_survival_csv(args.input)
    spec = _penalty_from_args(args, data)
    opts = _solver_options(args)
    pairs = build_pairs(data)
    path = fit_path(data, pairs, spec, n_lambda=args.nlambda, kappa=args.kappa, options=opts)
    prefix = args.out if args.out is not None else os.path.splitext(args.input)[0]
    _dump_json(path.to_dict(), prefix + ".path.json")
    names = data.feature_names or tuple(f"x{k + 1}" for k in range(data.p))
    rows = [
        [float(path.lambdas[m])] + [float(c) for c in path.coef_at(m)]
        for m in range(path.lambdas.size)
    ]
    _write_csv(prefix + ".trace.csv", ["lambda", *names], rows)
    print(f"wrote {prefix}.path.json and {prefix}.trace.csv")
    if args.strict and not path.converged.all():
        print("error: some path fits did not converge", file=sys.stderr)
        return 2
    return 0


def cmd_cv(args) -> int:
    data = load_survival_csv(args.input)
    spec = _penalty_from_args(args, data)
    opts = _solver_options(args)
    lam_max = lambda_max(data, spec, options=opts)
    lambdas = lambda_grid(lam_max, args.nlambda, args.kappa)
    result = cv_linear_predictor_score(data, spec, lambdas, args.K, options=opts, seed=args.seed)
    if args.out is None:
        _dump_json(result.to_dict())
    else:
        _dump_json(result.to_dict(), args.out + ".cv.json")
        rows = [
            [float(l), float(lp), float(gm), float(gs)]
            for l, lp, gm, gs in zip(
                result.lambdas,
                result.cv_linear_predictor,
                result.cv_gehan_loss,
                result.cv_gehan_se,
            )
        ]
        _write_csv(
            args.out + ".cv_curve.csv",
            ["lambda", "cv_lp", "cv_gehan_mean", "cv_gehan_se"],
            rows,
        )
        print(f"wrote {args.out}.cv.json and {args.out}.cv_curve.csv")
    return 0


def _select_by_validation(validation, coef_rows, lambdas):
    """Index of the penalty level whose fit has the lowest validation rank loss."""
    val_pairs = build_pairs(validation)
    losses = [gehan_loss(validation, val_pairs, coef) for coef in coef_rows]
    return int(np.argmin(losses))


def _simulate_replication(task) -> list[dict]:
    (rep, seed, n, p, sigma, dist, censor_q, beta_kind, penalty, alpha,
     nlambda, kappa, n_validation, n_test, opts) = task
    if beta_kind == "grouped":
        coef_spec = TrueCoefSpec(kind="grouped", value=0.5)
    else:
        coef_spec = TrueCoefSpec(kind="sparse_ones", k=10, value=1.0)
    config = SimConfig(
        n=n, p=p, sigma=sigma, error_dist=dist, censor_quantile=censor_q,
        coef_spec=coef_spec, n_validation=n_validation, n_test=n_test, seed=seed,
    )
    sim = generate(config)
    if penalty == "sgl":
        groups = [np.arange(g * 10, (g + 1) * 10) for g in range(p // 10)]
        spec = sparse_group_lasso(groups, alpha=alpha)
    else:
        spec = elastic_net(p, alpha=alpha)
    times_test = np.exp(sim.test.log_y)
    rows = []

    t0 = time.perf_counter()
    pairs = build_pairs(sim.train)
    grid = lambda_grid(lambda_max(sim.train, spec, options=opts), nlambda, kappa)
    path = fit_path(sim.train, pairs, spec, options=opts, lambdas=grid)
    coef_rows = [path.coef_at(m) for m in range(grid.size)]
    best = _select_by_validation(sim.validation, coef_rows, grid)
    gehan_coef = coef_rows[best]
    gehan_ms = 1000.0 * (time.perf_counter() - t0)
    rows.append(
        {
            "method": "gehan",
            "n": n, "p": p, "sigma": sigma, "seed": seed,
            "concordance": concordance(sim.test.X @ gehan_coef, times_test, sim.test.delta),
            "model_error": model_error(gehan_coef, sim.true_coef, sim.cov),
            "nnz": int(np.count_nonzero(gehan_coef)),
            "runtime_ms": gehan_ms,
        }
    )

    t0 = time.perf_counter()
    wls_grid = lambda_grid(wls_lambda_max(sim.train, spec), nlambda, kappa)
    wls_rows = [fit_wls(sim.train, spec, float(lam), options=opts).coef for lam in wls_grid]
    best = _select_by_validation(sim.validation, wls_rows, wls_grid)
    wls_coef = wls_rows[best]
    wls_ms = 1000.0 * (time.perf_counter() - t0)
    rows.append(
        {
            "method": "wls",
            "n": n, "p": p, "sigma": sigma, "seed": seed,
            "concordance": concordance(sim.test.X @ wls_coef, times_test, sim.test.delta),
            "model_error": model_error(wls_coef, sim.true_coef, sim.cov),
            "nnz": int(np.count_nonzero(wls_coef)),
            "runtime_ms": wls_ms,
        }
    )
    return rows


def _fan_out(worker, tasks, threads):
    if threads <= 1:
        return [worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, tasks))


def cmd_simulate(args) -> int:
    opts = _solver_options(args)
    tasks = [
        (rep, args.seed + rep, args.n, args.p, args.sigma, args.dist,
         args.censor_quantile, args.beta_kind, args.penalty, args.alpha,
         args.nlambda, args.kappa, args.n_validation, args.n_test, opts)
        for rep in range(args.reps)
    ]
    results = _fan_out(_simulate_replication, tasks, args.threads)
    header = ["method", "n", "p", "sigma", "seed", "concordance", "model_error", "nnz", "runtime_ms"]
    rows = [[r[h] for h in header] for rep_rows in results for r in rep_rows]
    _write_csv(args.out, header, rows)
    return 0


def _bench_replication(task) -> dict:
    rep, seed, n, p, alpha, penalty, nlambda, kappa, opts = task
    config = SimConfig(n=n, p=p, coef_spec=TrueCoefSpec(kind="sparse_ones", k=10),
                       n_test=2, seed=seed)
    sim = generate(config)
    if penalty == "sgl":
        groups = [np.arange(g * 10, (g + 1) * 10) for g in range(p // 10)]
        spec = sparse_group_lasso(groups, alpha=alpha)
    else:
        spec = elastic_net(p, alpha=alpha)
    t0 = time.perf_counter()
    lam_max = lambda_max(sim.train, spec, options=opts)
    grid = lambda_grid(lam_max, nlambda, kappa)
    grid_seconds = time.perf_counter() - t0
    pairs = build_pairs(sim.train)
    t0 = time.perf_counter()
    fit_path(sim.train, pairs, spec, options=opts, lambdas=grid)
    path_seconds = time.perf_counter() - t0
    return {
        "penalty": penalty, "n": n, "p": p, "alpha": alpha, "rep": rep, "seed": seed,
        "lambda_max": lam_max, "grid_seconds": grid_seconds, "path_seconds": path_seconds,
    }


def cmd_bench(args) -> int:
    opts = _solver_options(args)
    n_list = [int(x) for x in args.n_list.split(",")]
    p_list = [int(x) for x in args.p_list.split(",")]
    alpha_list = [float(x) for x in args.alpha_list.split(",")]
    tasks = []
    rep = 0
    for n in n_list:
        for p in p_list:
            for alpha in alpha_list:
                for r in range(args.reps):
                    tasks.append((rep, args.seed + rep, n, p, alpha, args.penalty,
                                  args.nlambda, args.kappa, opts))
                    rep += 1
    results = _fan_out(_bench_replication, tasks, args.threads)
    header = ["penalty", "n", "p", "alpha", "rep", "seed", "lambda_max",
              "grid_seconds", "path_seconds"]
    _write_csv(args.out, header, [[r[h] for h in header] for r in results])
    return 0


def _add_solver_flags(parser):
    parser.add_argument("--eps-rel", type=float, default=2.5e-4, dest="eps_rel")
    parser.add_argument("--eps-abs", type=float, default=1e-8, dest="eps_abs")
    parser.add_argument("--max-iter", type=int, default=20000, dest="max_iter")
    parser.add_argument("--tau", type=float, default=1.0)
    parser.add_argument("--rho", type=float, default=0.1)
    parser.add_argument("--strict", action="store_true",
                        help="exit with status 2 when a fit does not converge")


def _add_penalty_flags(parser):
    parser.add_argument("--penalty", choices=("en", "sgl"), default="en")
    parser.add_argument("--alpha", type=float, default=1.0)
    parser.add_argument("--groups", help="feature,group CSV (required for sgl)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rank-aft",
        description="Penalized rank-based fitting of accelerated failure time models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit at one penalty level")
    p_fit.add_argument("--input", required=True)
    p_fit.add_argument("--lambda", type=float, required=True, dest="lam")
    p_fit.add_argument("--method", choices=("gehan", "wls"), default="gehan")
    _add_penalty_flags(p_fit)
    _add_solver_flags(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_path = sub.add_parser("path", help="fit the full regularization path")
    p_path.add_argument("--input", required=True)
    p_path.add_argument("--nlambda", type=int, default=100)
    p_path.add_argument("--kappa", type=float, default=0.25)
    p_path.add_argument("--out", help="output prefix (default: input file stem)")
    _add_penalty_flags(p_path)
    _add_solver_flags(p_path)
    p_path.set_defaults(func=cmd_path)

    p_cv = sub.add_parser("cv", help="cross-validate the penalty level")
    p_cv.add_argument("--input", required=True)
    p_cv.add_argument("--nlambda", type=int, default=100)
    p_cv.add_argument("--kappa", type=float, default=0.25)
    p_cv.add_argument("--K", type=int, default=10)
    p_cv.add_argument("--seed", type=int, default=0)
    p_cv.add_argument("--out", help="output prefix; without it the report prints to stdout")
    _add_penalty_flags(p_cv)
    _add_solver_flags(p_cv)
    p_cv.set_defaults(func=cmd_cv)

    p_sim = sub.add_parser("simulate", help="compare rank-based and least squares fits")
    p_sim.add_argument("--n", type=int, default=100)
    p_sim.add_argument("--p", type=int, default=50)
    p_sim.add_argument("--sigma", type=float, default=2.0)
    p_sim.add_argument("--dist", choices=("logistic", "normal"), default="logistic")
    p_sim.add_argument("--censor-quantile", type=float, default=0.6, dest="censor_quantile")
    p_sim.add_argument("--beta-kind", choices=("sparse", "grouped"), default="sparse",
                       dest="beta_kind")
    p_sim.add_argument("--reps", type=int, default=10)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--nlambda", type=int, default=50)
    p_sim.add_argument("--kappa", type=float, default=0.25)
    p_sim.add_argument("--n-validation", type=int, default=200, dest="n_validation")
    p_sim.add_argument("--n-test", type=int, default=1000, dest="n_test")
    p_sim.add_argument("--threads", type=int, default=1)
    p_sim.add_argument("--out", help="metrics CSV path (default: stdout)")
    _add_penalty_flags(p_sim)
    _add_solver_flags(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_bench = sub.add_parser("bench", help="time full-path fits over a size grid")
    p_bench.add_argument("--n-list", default="100", dest="n_list")
    p_bench.add_argument("--p-list", default="200", dest="p_list")
    p_bench.add_argument("--alpha-list", default="1.0", dest="alpha_list")
    p_bench.add_argument("--reps", type=int, default=3)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--nlambda", type=int, default=100)
    p_bench.add_argument("--kappa", type=float, default=0.25)
    p_bench.add_argument("--threads", type=int, default=1)
    p_bench.add_argument("--penalty", choices=("en", "sgl"), default="en")
    p_bench.add_argument("--out", help="timing CSV path (default: stdout)")
    _add_solver_flags(p_bench)
    p_bench.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        _configure_logging()
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
