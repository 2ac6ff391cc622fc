from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import uuid
from pathlib import Path
from typing import Callable, List, Optional

import numpy as np
import yaml

from eot_lca.common.errors import EotError
from eot_lca.common.logging import log, setup_logger
from eot_lca.common.run_meta import atomic_write_text, record_step, start_manifest
from eot_lca.cost import L1, CostSpec, LInf, SqEuclidean, cost_sup
from eot_lca.experiments import (
    ConfigError,
    format_records_csv,
    load_config,
    plot_csvs,
    population_table,
    records_frame,
    run_experiment,
    summarize,
    write_run_manifest,
)
from eot_lca.gaussian import GaussianParam, bures_eps, gaussian_eot, gaussian_lca_check, low_rank_factor
from eot_lca.gromov import GwConfig, entropic_gw_solution, gw11
from eot_lca.measure import center, read_measure_file
from eot_lca.sinkhorn import SinkhornConfig, iteration_budget, sinkhorn_solve, stability_error_bound

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NOT_CONVERGED = 3

COSTS = {"sqeuclidean": SqEuclidean, "l1": L1, "linf": LInf}


def _ensure_run_id() -> None:
    os.environ.setdefault("EOT_RUN_ID", uuid.uuid4().hex)


def _human(value: float) -> str:
    return f"{value:.6g}"


def _execute_step(
    name: str, func: Callable[[argparse.Namespace], int], args: argparse.Namespace, logger: logging.Logger
) -> int:
    log(logger, logging.INFO, "cli_step_start", step=name)
    try:
        code = func(args)
    except EotError as exc:
        log(logger, logging.ERROR, "cli_step_failed", step=name, error=type(exc).__name__, detail=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_USAGE
    level = logging.INFO if code == EXIT_OK else logging.ERROR
    log(logger, level, "cli_step_complete", step=name, exit_code=code)
    return code


def _cost_from_args(args: argparse.Namespace) -> CostSpec:
    return COSTS[args.cost](scale=args.scale, shift=args.shift)


def _cmd_solve(args: argparse.Namespace) -> int:
    mu = read_measure_file(Path(args.mu))
    nu = read_measure_file(Path(args.nu))
    spec = _cost_from_args(args)
    cfg = SinkhornConfig(eps=args.eps, marginal_tol=args.tol, max_iters=args.max_iters)
    sol = sinkhorn_solve(mu, nu, spec, cfg)
    sup = cost_sup(spec, mu.points, nu.points)
    budget = iteration_budget(max(mu.size, nu.size), cfg.eps, sup, args.budget_k)
    bound = stability_error_bound(sol, sup)

    print(f"dual value       {_human(sol.dual_value)}")
    print(f"primal value     {_human(sol.primal_value)}")
    print(f"iterations       {sol.iterations}")
    print(f"marginal err mu  {sol.marginal_err_mu:.6g}")
    print(f"marginal err nu  {sol.marginal_err_nu:.6g}")
    print(f"converged        {'yes' if sol.converged else 'no'}")
    print(f"iteration budget {budget} (K={args.budget_k:g})")
    print(f"stability bound  {bound:.6g}")
    if args.json:
        report = {**sol.summary(), "cost_sup": sup, "iteration_budget": budget, "stability_bound": bound}
        atomic_write_text(Path(args.json), json.dumps(report, indent=2) + "\n")
    return EXIT_OK if sol.converged else EXIT_NOT_CONVERGED


def _load_gaussians(path: Path) -> tuple[GaussianParam, GaussianParam]:
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"file not found: {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path} is not valid YAML or JSON: {exc}") from exc
    if not isinstance(raw, dict) or "p" not in raw or "q" not in raw:
        raise ConfigError(f"{path} must define 'p' and 'q' with 'mean' and 'cov'")
    unknown = sorted(set(raw) - {"p", "q"})
    if unknown:
        raise ConfigError(f"unknown keys in {path}: {', '.join(unknown)}")
    return GaussianParam.from_mapping(raw["p"]), GaussianParam.from_mapping(raw["q"])


def _cmd_gaussian(args: argparse.Namespace) -> int:
    p, q = _load_gaussians(Path(args.file))
    value = gaussian_eot(p, q, args.eps)
    bures = bures_eps(p.cov, q.cov, args.eps)
    print(f"gaussian eot     {_human(value)}")
    print(f"mean term        {_human(value - bures)}")
    print(f"bures term       {_human(bures)}")
    if args.lca:
        U1, lam1 = low_rank_factor(p.cov)
        lhs, rhs = gaussian_lca_check(U1, lam1, q.cov, args.eps)
        print(f"lca rank         {lam1.shape[0]}")
        print(f"lca lhs          {lhs:.17g}")
        print(f"lca rhs          {rhs:.17g}")
    return EXIT_OK


def _cmd_gw(args: argparse.Namespace) -> int:
    mu = read_measure_file(Path(args.mu))
    nu = read_measure_file(Path(args.nu))
    inner = SinkhornConfig(eps=args.eps, marginal_tol=args.tol, max_iters=args.max_iters)
    cfg = GwConfig(
        eps=args.eps,
        outer_tol=args.outer_tol,
        inner=inner,
        restarts=args.gw_restarts,
        seed=args.seed,
        workers=args.workers,
    )
    value, solution = entropic_gw_solution(mu, nu, cfg)
    print(f"entropic gw      {_human(value)}")
    print(f"moment term      {_human(gw11(center(mu), center(nu)))}")
    print(f"coupling term    {_human(solution.value)}")
    print(f"outer iterations {solution.outer_iters}")
    print(f"restarts         {solution.restarts}")
    print(f"converged        {'yes' if solution.converged else 'no'}")
    print("A =")
    print(np.array2string(solution.A, precision=6))
    return EXIT_OK if solution.converged else EXIT_NOT_CONVERGED


def _cmd_experiment(args: argparse.Namespace) -> int:
    cfg = load_config(Path(args.config)).with_overrides(
        seed=args.seed,
        eps=args.eps,
        tol=args.tol,
        reps=args.reps,
        d1=args.d1,
        workers=args.workers,
        timing=True if args.timing else None,
    )
    out_dir = Path(args.out)
    csv_path = out_dir / f"{cfg.name or cfg.setting}.csv"
    logger = setup_logger("cli")

    start_manifest(out_dir, command="experiment", config_path=str(args.config))
    step = "population"
    try:
        record_step(out_dir, step, "running")
        populations = population_table(cfg)
        record_step(out_dir, step, "completed", values=[entry.to_dict() for entry in populations])

        step = "sweep"
        record_step(out_dir, step, "running")
        records = run_experiment(cfg, [entry.value for entry in populations])
    except EotError as exc:
        record_step(out_dir, step, "failed", error=type(exc).__name__, detail=str(exc))
        raise
    failures = sum(1 for record in records if not record.converged)
    record_step(out_dir, step, "completed", records=len(records), failures=failures)

    atomic_write_text(csv_path, format_records_csv(records))
    write_run_manifest(out_dir, cfg, populations, records)
    record_step(out_dir, "emit", "completed", csv=str(csv_path))
    if failures:
        log(logger, logging.WARNING, "experiment_partial_failures", failures=failures, records=len(records))

    summary = summarize(records_frame(records))
    columns = ["eps", "n", "reps", "failures", "mean_abs_dev", "stderr", "asymptotic_sd", "valid"]
    print(summary[columns].to_string(index=False, float_format=lambda x: f"{x:.6g}"))
    print(f"wrote {csv_path}")
    return EXIT_OK


def _cmd_plot(args: argparse.Namespace) -> int:
    fits = plot_csvs([Path(path) for path in args.csv], Path(args.out), title=args.title or "")
    for (setting, d1, eps), fit in sorted(fits.items()):
        print(f"{setting} d1={d1} eps={eps:g}: slope {fit.slope:.2f} (r2 {fit.r_squared:.3f})")
    print(f"wrote {args.out}")
    return EXIT_OK


def _add_solver_flags(parser: argparse.ArgumentParser, *, eps_default: float = 1.0) -> None:
    parser.add_argument("--eps", type=float, default=eps_default, help="Regularization strength")
    parser.add_argument("--tol", type=float, default=1e-8, help="Marginal TV tolerance")
    parser.add_argument("--max-iters", type=int, default=1_000_000, help="Sinkhorn iteration cap")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eot", description="Entropic optimal transport toolkit")
    subparsers = parser.add_subparsers(dest="command", required=True)

    solve_parser = subparsers.add_parser("solve", help="Solve EOT between two measure files")
    solve_parser.add_argument("mu", help="Measure file for mu (lines of 'w x1 ... xd')")
    solve_parser.add_argument("nu", help="Measure file for nu")
    solve_parser.add_argument("--cost", choices=sorted(COSTS), default="sqeuclidean")
    solve_parser.add_argument("--scale", type=float, default=1.0, help="Cost scale factor")
    solve_parser.add_argument("--shift", type=float, default=0.0, help="Cost additive shift")
    solve_parser.add_argument("--budget-k", type=float, default=0.1, help="Target error K for the iteration budget")
    solve_parser.add_argument("--json", help="Write a machine-readable report to this path")
    _add_solver_flags(solve_parser)

    gaussian_parser = subparsers.add_parser("gaussian", help="Closed-form Gaussian EOT")
    gaussian_parser.add_argument("file", help="YAML/JSON file with p and q (mean, cov)")
    gaussian_parser.add_argument("--eps", type=float, default=1.0)
    gaussian_parser.add_argument("--lca", action="store_true", help="Also report both sides of the low-rank identity")

    gw_parser = subparsers.add_parser("gw", help="Entropic Gromov-Wasserstein between two measure files")
    gw_parser.add_argument("mu")
    gw_parser.add_argument("nu")
    gw_parser.add_argument("--outer-tol", type=float, default=1e-7)
    gw_parser.add_argument("--gw-restarts", type=int, default=1)
    gw_parser.add_argument("--seed", type=int, default=0)
    gw_parser.add_argument("--workers", type=int, default=1, help="Processes for independent restarts")
    _add_solver_flags(gw_parser)

    experiment_parser = subparsers.add_parser("experiment", help="Run a Monte Carlo sweep")
    experiment_parser.add_argument("config", help="Experiment config (YAML or JSON)")
    experiment_parser.add_argument("--out", default="out", help="Output directory")
    experiment_parser.add_argument("--seed", type=int)
    experiment_parser.add_argument("--eps", type=float)
    experiment_parser.add_argument("--tol", type=float)
    experiment_parser.add_argument("--reps", type=int)
    experiment_parser.add_argument("--d1", type=int)
    experiment_parser.add_argument("--workers", type=int)
    experiment_parser.add_argument("--timing", action="store_true", help="Measure wall time per record")

    plot_parser = subparsers.add_parser("plot", help="Render record CSVs as a log-log SVG")
    plot_parser.add_argument("csv", nargs="+")
    plot_parser.add_argument("--out", required=True, help="Output SVG path")
    plot_parser.add_argument("--title")
    return parser


COMMANDS = {
    "solve": _cmd_solve,
    "gaussian": _cmd_gaussian,
    "gw": _cmd_gw,
    "experiment": _cmd_experiment,
    "plot": _cmd_plot,
}


def main(argv: Optional[List[str]] = None) -> int:
    _ensure_run_id()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logger = setup_logger("cli", command=args.command)
    return _execute_step(args.command, COMMANDS[args.command], args, logger)


if __name__ == "__main__":
    sys.exit(main())
