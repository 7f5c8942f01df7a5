"""Command-line front end.

Subcommands: plan (dimension planning), simulate (one Monte Carlo
experiment), sweep (a grid of experiments), check-dist (distributional
oracles), bound (boundary/mixture evaluation). Machine-readable JSON goes to
stdout; logs go to stderr.

Exit codes: 0 success, 1 validation/usage error, 2 runtime error,
3 a statistical acceptance check failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import PlanParams, boundary, mixture_value, plan_dimension, union_bound_baseline
from .distributions import (
    LAMBDA_GRID,
    BetaLawParams,
    SubGaussianSpec,
    check_beta_mgf,
    check_inner_product_ks,
    check_inner_product_variance,
    check_subgaussian_mgf,
    sphere_source,
)
from .harness import (
    ConfigError,
    load_config,
    load_sweep_configs,
    run_experiment,
    sweep,
    with_seed,
    write_experiment_outputs,
    write_report_json,
    write_sweep_csv,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_CHECK_FAILED = 3

log = logging.getLogger("seqproj")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; the contract here is 1.
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="seqproj", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"seqproj {__version__}")
    parser.add_argument(
        "-v", "--verbose", action="count", default=0,
        help="log progress to stderr (repeat for debug)",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_plan = sub.add_parser("plan", help="plan the sketch dimension for a target guarantee")
    p_plan.add_argument("--eps", type=float, required=True)
    p_plan.add_argument("--delta", type=float, required=True)
    p_plan.add_argument("--c0", type=float, default=1.0)
    p_plan.add_argument("--cx", type=float, required=True)
    p_plan.add_argument("--x0sq", type=float, required=True)
    p_plan.add_argument("--T", type=int, required=True)
    p_plan.set_defaults(func=_cmd_plan)

    p_sim = sub.add_parser("simulate", help="run one seeded Monte Carlo experiment")
    p_sim.add_argument("--config", required=True, help="experiment config (JSON)")
    p_sim.add_argument("--output", "-o", default=None, help="output directory")
    p_sim.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_sim.add_argument("--workers", type=int, default=None,
                       help="worker processes (default: available parallelism)")
    p_sim.add_argument("--no-figures", action="store_true",
                       help="skip rendering PNG figures")
    p_sim.set_defaults(func=_cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="run a grid of experiments")
    p_sweep.add_argument("--config", required=True, help="sweep config (JSON)")
    p_sweep.add_argument("--output", "-o", default=".", help="output directory")
    p_sweep.add_argument("--seed", type=int, default=None, help="override every config seed")
    p_sweep.add_argument("--workers", type=int, default=None)
    p_sweep.add_argument("--no-figures", action="store_true")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_dist = sub.add_parser("check-dist", help="run the distributional oracles")
    p_dist.add_argument("--M", type=int, action="append", default=None,
                        help="sphere dimension to check (repeatable; default 3 and 25)")
    p_dist.add_argument("--n-samples", type=int, default=100_000,
                        help="samples for the law and variance checks")
    p_dist.add_argument("--n-mgf", type=int, default=100_000,
                        help="samples for the exponential-moment checks")
    p_dist.add_argument("--seed", type=int, default=0)
    p_dist.set_defaults(func=_cmd_check_dist)

    p_bound = sub.add_parser("bound", help="evaluate the deviation boundary and mixture statistic")
    p_bound.add_argument("--A", type=float, required=True)
    p_bound.add_argument("--Bsq", type=float, required=True)
    p_bound.add_argument("--L", type=float, required=True)
    p_bound.add_argument("--delta", type=float, required=True)
    p_bound.set_defaults(func=_cmd_bound)

    return parser


def _emit(payload) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _cmd_plan(args) -> int:
    try:
        params = PlanParams(eps=args.eps, delta=args.delta, c0=args.c0,
                            cx=args.cx, x0sq=args.x0sq, T=args.T)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    result = plan_dimension(params)
    _emit(
        {
            "M": result.M,
            "L_T": result.L_T,
            "B_sq_bound": result.B_sq_bound,
            "baseline_M": union_bound_baseline(params.eps, params.delta, params.T, params.c0),
        }
    )
    return EXIT_OK


def _cmd_bound(args) -> int:
    try:
        b = boundary(args.Bsq, args.L, args.delta)
        m = mixture_value(args.A, args.Bsq, args.L)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _emit({"boundary": b, "mixture_value": m, "crossed": abs(args.A) > b})
    return EXIT_OK


def _workers(args) -> int:
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError(f"--workers must be >= 1, got {args.workers}")
        return args.workers
    return os.cpu_count() or 1


def _cmd_simulate(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = with_seed(config, args.seed)
    workers = _workers(args)
    log.info("simulate: %d trials, M=%d, workers=%d",
             config.n_trials, config.M, workers)
    run = run_experiment(config, workers=workers)
    paths = write_experiment_outputs(run, config, args.output)
    if not args.no_figures:
        from .plots import render_experiment_figures

        render_experiment_figures(run.report, paths["directory"])
    _emit(run.report.to_dict())
    return EXIT_OK


def _cmd_sweep(args) -> int:
    configs = load_sweep_configs(args.config)
    if args.seed is not None:
        configs = [with_seed(c, args.seed) for c in configs]
    workers = _workers(args)
    log.info("sweep: %d configs, workers=%d", len(configs), workers)
    entries = sweep(configs, workers=workers)

    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(entries, outdir / "sweep.csv")
    summary = []
    for entry in entries:
        if entry.report is not None:
            write_report_json(entry.report, outdir / f"report_{entry.index}.json")
            summary.append(
                {
                    "index": entry.index,
                    "M": entry.config.M,
                    "failure_rate": entry.report.failure.rate,
                    "boundary_rate": entry.report.boundary_crossing.rate,
                }
            )
        else:
            log.error("sweep config %d failed: %s", entry.index, entry.error)
            summary.append({"index": entry.index, "error": entry.error})
    if not args.no_figures:
        from .plots import render_sweep_figure

        render_sweep_figure(entries, outdir)
    _emit(summary)
    if entries and all(e.report is None for e in entries):
        return EXIT_RUNTIME
    return EXIT_OK


def _cmd_check_dist(args) -> int:
    dims = args.M if args.M else [3, 25]
    for dim in dims:
        if dim < 2:
            raise ConfigError(f"check-dist needs dimension >= 2, got {dim}")
    rng = np.random.default_rng(args.seed)
    checks = []

    for dim in dims:
        ks = check_inner_product_ks(dim, args.n_samples, rng)
        checks.append(
            {
                "name": f"inner_product_ks_M{dim}",
                "passed": not ks.reject,
                "statistic": ks.statistic,
                "pvalue": ks.pvalue,
                "significance": ks.significance,
            }
        )
        var = check_inner_product_variance(dim, args.n_samples, rng)
        checks.append(
            {
                "name": f"inner_product_variance_M{dim}",
                "passed": var.passed,
                "sample_variance": var.sample_variance,
                "target": var.target,
                "se": var.se,
            }
        )
        mgf = check_subgaussian_mgf(
            sphere_source(dim),
            SubGaussianSpec(c0=1.0, dim=dim),
            direction=np.eye(dim)[0],
            lambda_grid=LAMBDA_GRID,
            n_samples=args.n_mgf,
            rng=rng,
        )
        checks.append(_mgf_check(f"subgaussian_mgf_M{dim}", mgf))

    for alpha, beta in ((1.0, 1.0), (12.0, 12.0)):
        mgf = check_beta_mgf(
            BetaLawParams(alpha, beta),
            lambda_grid=LAMBDA_GRID,
            n_samples=args.n_mgf,
            rng=rng,
        )
        checks.append(_mgf_check(f"beta_mgf_{alpha:g}_{beta:g}", mgf))

    passed = all(c["passed"] for c in checks)
    _emit({"checks": checks, "passed": passed})
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def _mgf_check(name: str, report) -> dict:
    return {
        "name": name,
        "passed": report.ok,
        "violations": [
            {"lambda": p.lam, "empirical": p.empirical, "bound": p.bound, "se": p.se}
            for p in report.violations
        ],
    }


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"seqproj: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version actions
        code = exc.code
        return int(code) if isinstance(code, int) else EXIT_OK

    level = logging.WARNING
    if args.verbose == 1:
        level = logging.INFO
    elif args.verbose >= 2:
        level = logging.DEBUG
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(message)s")

    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"seqproj: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not raises
        log.debug("unhandled error", exc_info=True)
        print(f"seqproj: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
