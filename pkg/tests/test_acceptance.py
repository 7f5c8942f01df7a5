"""End-to-end statistical acceptance suite.

One test per pinned criterion, each printing a single PASS/FAIL line (run
with `pytest tests/test_acceptance.py -v -s` to see them). All randomness is
seeded, so results are reproducible run to run; statistical checks carry a
3-standard-error Monte Carlo slack. Full-suite runtime is a couple of minutes
on a small machine; criterion 1 alone simulates 12,000 paths of length 200 at
the planned dimension.
"""

import itertools
import json
import math

import numpy as np
import pytest

from seqproj.adversary import History, StrategySpec, next_x
from seqproj.bounds import (
    BoundAccumulator,
    PlanParams,
    dimension_bound,
    plan_dimension,
)
from seqproj.cli import main as cli_main
from seqproj.distributions import (
    LAMBDA_GRID,
    BetaLawParams,
    SubGaussianSpec,
    check_beta_mgf,
    check_inner_product_ks,
    check_inner_product_variance,
    check_subgaussian_mgf,
    sphere_source,
)
from seqproj.harness import ExperimentConfig, run_experiment
from seqproj.sketch import SequentialSketch, check_trigger_identity

WORKERS = 2


def _verdict(name: str, ok: bool, detail: str) -> None:
    print(f"[acceptance] {name}: {'PASS' if ok else 'FAIL'} ({detail})")


def _strategy_zoo(cx: float = 1.0) -> dict[str, StrategySpec]:
    return {
        "constant": StrategySpec("constant", cx=cx),
        "uniform": StrategySpec("uniform", cx=cx),
        "amplify": StrategySpec("amplify", cx=cx),
        "burst": StrategySpec("burst", cx=cx, params={"k": 10, "rho": 0.1}),
        "zero_after": StrategySpec("zero_after", cx=cx, params={"k": 5}),
        "alternating": StrategySpec("alternating", cx=cx),
    }


@pytest.fixture(scope="module")
def amplify_run():
    """Shared 10^4-trial deviation study used by criteria 2-4.

    The supermartingale, mixture and boundary guarantees hold at any sketch
    dimension, so a reduced M = 64 keeps the run fast while producing richer
    deviation statistics than the planned dimension would.
    """
    config = ExperimentConfig(
        plan=PlanParams(eps=0.5, delta=0.05, c0=1.0, cx=1.0, x0sq=1.0, T=100),
        strategy=StrategySpec("amplify", cx=1.0),
        n_trials=10_000,
        seed=20240801,
        M_override=64,
    )
    run = run_experiment(config, workers=WORKERS)
    assert run.report.n_valid == config.n_trials  # invalid-trial rate must be 0
    return run


def test_01_planned_dimension_meets_failure_budget():
    """Failure rate stays within delta + 3 SE for every reference strategy at
    the planned dimension (eps=0.5, delta=0.05, T=200, 2000 trials each)."""
    plan = PlanParams(eps=0.5, delta=0.05, c0=1.0, cx=1.0, x0sq=1.0, T=200)
    n = 2000
    threshold = 0.05 + 3.0 * math.sqrt(0.05 * 0.95 / n)
    rates = {}
    for i, (name, strategy) in enumerate(sorted(_strategy_zoo().items())):
        config = ExperimentConfig(
            plan=plan, strategy=strategy, n_trials=n, seed=1000 + i
        )
        run = run_experiment(config, workers=WORKERS)
        assert run.report.n_valid == n
        rates[name] = run.report.failure.rate
    ok = all(rate <= threshold for rate in rates.values())
    detail = ", ".join(f"{k}={v:.4f}" for k, v in rates.items())
    _verdict("01 planner guarantee", ok, f"threshold={threshold:.4f}; {detail}")
    assert ok


def test_02_supermartingale_mean_at_most_one(amplify_run):
    """Monte Carlo mean of exp(lam*A - lam^2*B_sq/2) <= 1 + 3 SE for each
    fixed lam in {+-0.5, +-1, +-2} over 10^4 stopped paths."""
    means = amplify_run.report.supermartingale_means
    checks = {lam: est.mean <= 1.0 + 3.0 * est.se for lam, est in means.items()}
    ok = all(checks.values())
    detail = ", ".join(
        f"lam={lam:+g}: {est.mean:.4f}+-{est.se:.4f}" for lam, est in means.items()
    )
    _verdict("02 supermartingale mean", ok, detail)
    assert ok


def test_03_mixture_mean_at_most_one(amplify_run):
    """Monte Carlo mean of the Gaussian-mixture statistic <= 1 + 3 SE."""
    est = amplify_run.report.mixture_mean
    ok = est.mean <= 1.0 + 3.0 * est.se
    _verdict("03 mixture mean", ok, f"mean={est.mean:.4f} se={est.se:.4f}")
    assert ok


def test_04_anytime_boundary_crossing_rate(amplify_run):
    """Fraction of paths whose |A_t| ever exceeds the anytime boundary at
    delta = 0.05 stays within delta + 3 SE."""
    n = amplify_run.report.n_valid
    threshold = 0.05 + 3.0 * math.sqrt(0.05 * 0.95 / n)
    rate = amplify_run.report.boundary_crossing.rate
    ok = rate <= threshold
    _verdict("04 anytime boundary", ok, f"rate={rate:.4f} threshold={threshold:.4f}")
    assert ok


def test_05_inner_product_law_at_dimension_25():
    """KS test of 10^5 inner products against the affine Beta(12,12) reference
    does not reject at significance 1e-3; the sample variance sits within
    3 SE of 1/25."""
    rng = np.random.default_rng(55_025)
    ks = check_inner_product_ks(25, 100_000, rng, significance=1e-3)
    var = check_inner_product_variance(25, 100_000, np.random.default_rng(55_026))
    ok = (not ks.reject) and var.passed
    _verdict(
        "05 inner-product law",
        ok,
        f"ks stat={ks.statistic:.5f} p={ks.pvalue:.4f}; "
        f"var={var.sample_variance:.6f} target={var.target:.6f} se={var.se:.2e}",
    )
    assert ok


def test_06_exponential_moment_bounds():
    """Zero violations over the lambda grid at n = 10^6 for Beta(1,1),
    Beta(12,12), and the sphere at dimensions 3 and 25."""
    n = 1_000_000
    reports = {
        "beta(1,1)": check_beta_mgf(
            BetaLawParams(1.0, 1.0), LAMBDA_GRID, n, np.random.default_rng(61)
        ),
        "beta(12,12)": check_beta_mgf(
            BetaLawParams(12.0, 12.0), LAMBDA_GRID, n, np.random.default_rng(62)
        ),
        "sphere M=3": check_subgaussian_mgf(
            sphere_source(3), SubGaussianSpec(1.0, 3), np.eye(3)[0],
            LAMBDA_GRID, n, np.random.default_rng(63),
        ),
        "sphere M=25": check_subgaussian_mgf(
            sphere_source(25), SubGaussianSpec(1.0, 25), np.eye(25)[0],
            LAMBDA_GRID, n, np.random.default_rng(64),
        ),
    }
    ok = all(r.ok for r in reports.values())
    detail = ", ".join(f"{k}: {len(r.violations)} violations" for k, r in reports.items())
    _verdict("06 exponential-moment bounds", ok, detail)
    assert ok


def test_07_incremental_oracle_and_path_bounds():
    """Over 100 random paths of length 10^4: incremental Y tracks the direct
    |s|^2 - S within 1e-9 relative, the trigger identity holds exactly, and
    the accumulated variance proxy obeys both per-path upper bounds."""
    n_paths, T, dim = 100, 10_000, 16
    eps, c0, cx, x0 = 0.5, 1.0, 1.0, 1.0
    worst_gap = 0.0
    for path in range(n_paths):
        rng = np.random.default_rng(7_000 + path)
        z0 = _unit(rng, dim)
        sketch = SequentialSketch(x0, z0, eps, resync_interval=None)
        acc = BoundAccumulator(c0=c0, eps=eps, M=dim, L=1.0)
        goods = [sketch.good]
        S_stopped = None
        for _ in range(T):
            x = rng.uniform(-1.0, 1.0)
            z = _unit(rng, dim)
            was_stopped = sketch.tau is not None
            S_prev = sketch.S
            outcome = sketch.update(x, z)
            acc.add(outcome, x, S_prev, was_stopped)
            goods.append(outcome.good)
            if sketch.tau is not None and S_stopped is None:
                S_stopped = sketch.S
            scale = max(1.0, sketch.S, float(sketch.s @ sketch.s))
            gap = abs(sketch.Y - sketch.recompute_gap()) / scale
            worst_gap = max(worst_gap, gap)
        assert check_trigger_identity(goods)
        s_at_stop = S_stopped if S_stopped is not None else sketch.S
        running_bound = 4.0 * c0 * (1.0 + eps) / dim * (s_at_stop - x0 * x0) * s_at_stop
        as_bound = 4.0 * c0 * (1.0 + eps) / dim * (cx * x0 * x0 * T + cx * cx * T * T / 2.0)
        assert acc.B_sq <= running_bound * (1.0 + 1e-12)
        assert acc.B_sq <= as_bound * (1.0 + 1e-12)
    ok = worst_gap <= 1e-9
    _verdict("07 incremental oracle", ok, f"worst relative gap={worst_gap:.2e}")
    assert ok


def _unit(rng, dim):
    v = rng.standard_normal(dim)
    return v / math.sqrt(v @ v)


def test_08_two_point_walk_matches_enumeration():
    """At dimension 1 the path is a signed walk; the simulated failure rate
    over 10^5 trials matches exhaustive enumeration of all 2^10 sign paths
    within 3 SE (eps=0.9, x0=1, constant steps of squared size 0.09)."""
    eps, cx, T = 0.9, 0.09, 10
    spec = StrategySpec("constant", cx=cx)
    # exact step magnitude as the strategy emits it
    step = next_x(
        spec,
        History(steps=[(1.0, np.ones(1))], S=1.0, Y=0.0, distortion=0.0, tau=None),
        np.random.default_rng(0),
    )

    # Exhaustive oracle. A global sign flip leaves every |s|^2 unchanged, so
    # conditioning on z0 = +1 loses nothing and 2^T paths cover the law.
    fails = 0
    for signs in itertools.product((1.0, -1.0), repeat=T):
        s, S = 1.0, 1.0
        failed = abs(s * s - S) > eps * S
        for sign in signs:
            s += step * sign
            S += step * step
            if abs(s * s - S) > eps * S:
                failed = True
                break
        fails += failed
    exact = fails / 2.0**T

    config = ExperimentConfig(
        plan=PlanParams(eps=eps, delta=0.05, c0=1.0, cx=cx, x0sq=1.0, T=T),
        strategy=spec,
        n_trials=100_000,
        seed=808,
        M_override=1,
    )
    run = run_experiment(config, workers=WORKERS)
    assert run.report.n_valid == config.n_trials
    simulated = run.report.failure.rate
    slack = 3.0 * math.sqrt(exact * (1.0 - exact) / config.n_trials)
    ok = abs(simulated - exact) <= slack
    _verdict(
        "08 two-point enumeration",
        ok,
        f"exact={exact:.6f} simulated={simulated:.6f} slack={slack:.6f}",
    )
    assert ok


def test_09_byte_identical_outputs_across_workers(tmp_path, capsys):
    """simulate writes byte-identical trials.csv for the same config and seed
    regardless of worker count."""
    config = {
        "plan": {"eps": 0.5, "delta": 0.05, "c0": 1.0, "cx": 1.0, "x0sq": 1.0, "T": 25},
        "strategy": {"kind": "amplify"},
        "n_trials": 40,
        "seed": 99,
        "M_override": 32,
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config))
    blobs = {}
    for workers in (1, 2):
        for repeat in ("a", "b"):
            outdir = tmp_path / f"w{workers}{repeat}"
            code = cli_main(
                ["simulate", "--config", str(config_path), "--output", str(outdir),
                 "--workers", str(workers), "--no-figures"]
            )
            assert code == 0
            blobs[(workers, repeat)] = (outdir / "trials.csv").read_bytes()
    capsys.readouterr()
    unique = {blob for blob in blobs.values()}
    ok = len(unique) == 1
    _verdict("09 determinism", ok, f"{len(blobs)} runs, {len(unique)} distinct trials.csv")
    assert ok


def test_10_planner_arithmetic_and_monotonicity():
    """The planner reproduces its three pinned values exactly and is monotone
    in every parameter over 1000 random tuples."""
    collapsed = dimension_bound(0.5, math.exp(-1), 1.0, 1.0, 1.0, 0)
    m886 = plan_dimension(PlanParams(eps=0.5, delta=0.01, c0=1.0, cx=1.0, x0sq=1.0, T=100)).M
    m2951 = plan_dimension(PlanParams(eps=0.25, delta=0.01, c0=1.0, cx=1.0, x0sq=1.0, T=100)).M
    exact_ok = collapsed == 96.0 and m886 == 886 and m2951 == 2951

    rng = np.random.default_rng(10_000)
    monotone_ok = True
    for _ in range(1000):
        eps = rng.uniform(0.05, 0.9)
        delta = 10.0 ** rng.uniform(-8, -0.35)
        c0 = 10.0 ** rng.uniform(-1, 1)
        cx = 10.0 ** rng.uniform(-1, 1)
        x0sq = 10.0 ** rng.uniform(-1, 1)
        T = int(rng.integers(1, 100_000))

        def M(**kw):
            args = dict(eps=eps, delta=delta, c0=c0, cx=cx, x0sq=x0sq, T=T)
            args.update(kw)
            return plan_dimension(PlanParams(**args)).M

        m = M()
        monotone_ok &= M(eps=min(0.95, eps * 1.3)) <= m
        monotone_ok &= M(delta=delta / 3) >= m
        monotone_ok &= M(T=3 * T) >= m
        monotone_ok &= M(cx=3 * cx) >= m
        monotone_ok &= M(c0=3 * c0) >= m
        monotone_ok &= M(x0sq=3 * x0sq) <= m
        if not monotone_ok:
            break
    ok = exact_ok and monotone_ok
    _verdict(
        "10 planner arithmetic",
        ok,
        f"collapsed={collapsed} M(886)={m886} M(2951)={m2951} monotone={monotone_ok}",
    )
    assert ok
