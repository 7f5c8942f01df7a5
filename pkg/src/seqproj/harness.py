"""Seeded Monte Carlo experiment runner.

Simulates sketch paths under a chosen input strategy, aggregates failure
probabilities, stopping times, boundary crossings and deviation statistics,
and serializes machine-readable reports (JSON) and per-trial rows (CSV).

Per-trial randomness is keyed by (master seed, trial index), so any trial is
reproducible in isolation and results are bit-identical regardless of how
trials are scheduled across workers.
"""

from __future__ import annotations

import csv
import json
import math
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .adversary import History, StrategySpec, next_x
from .bounds import (
    BoundAccumulator,
    PlanParams,
    mixture_scale,
    plan_dimension,
    union_bound_baseline,
)
from .distributions import sample_sphere
from .sketch import TRACE_HEADER, SequentialSketch, check_trigger_identity

# Fixed-lambda grid for the deviation-statistic means reported per experiment.
SUPERMARTINGALE_LAMBDAS = (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0)

TRIALS_CSV_HEADER = (
    "trial_id",
    "failed",
    "tau",
    "max_distortion",
    "final_S",
    "final_A",
    "final_B_sq",
    "boundary_crossed",
)

SWEEP_CSV_HEADER = (
    "config_index",
    "strategy",
    "M",
    "eps",
    "delta",
    "T",
    "n_trials",
    "seed",
    "n_valid",
    "failure_rate",
    "failure_low",
    "failure_high",
    "boundary_rate",
    "boundary_low",
    "boundary_high",
    "error",
)

_WILSON_Z95 = 1.959963984540054


class ConfigError(ValueError):
    """Invalid experiment configuration or config file."""


class InvalidTrialError(RuntimeError):
    """A path produced non-finite state or broke a runtime contract; such a
    trial is reported separately, never averaged into the estimates."""


@dataclass(frozen=True)
class ExperimentConfig:
    plan: PlanParams
    strategy: StrategySpec
    n_trials: int
    seed: int
    M_override: int | None = None
    distribution: str = "sphere"
    trace_every: int | None = None
    report_paths: Mapping[str, str] | None = None

    def __post_init__(self) -> None:
        if self.n_trials < 1:
            raise ConfigError(f"n_trials must be >= 1, got {self.n_trials}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.distribution != "sphere":
            raise ConfigError(
                f"unsupported distribution {self.distribution!r}; only 'sphere' is available"
            )
        if self.M_override is not None and self.M_override < 1:
            raise ConfigError(f"M_override must be >= 1, got {self.M_override}")
        if self.trace_every is not None and self.trace_every < 1:
            raise ConfigError(f"trace_every must be >= 1, got {self.trace_every}")
        if self.strategy.cx > self.plan.cx:
            raise ConfigError(
                f"strategy square bound cx = {self.strategy.cx} exceeds the "
                f"planned bound {self.plan.cx}; the guarantee would not apply"
            )

    @property
    def M(self) -> int:
        """Effective sketch dimension: the override, or the planned value."""
        if self.M_override is not None:
            return self.M_override
        return plan_dimension(self.plan).M

    @property
    def mixture_L(self) -> float:
        """Mixture precision matched to the effective dimension."""
        return mixture_scale(self.plan.eps, self.plan.c0, self.plan.x0sq, self.M)


@dataclass(frozen=True)
class TrialRecord:
    trial_id: int
    failed: bool
    tau: int | None
    max_distortion: float
    final_S: float
    final_A: float
    final_B_sq: float
    boundary_crossed: bool
    trigger_identity_ok: bool


@dataclass(frozen=True)
class TrialResult:
    """One simulated path: the summary record plus the per-step distortion
    profile and, when traced, the full serialized path."""

    record: TrialRecord
    distortion_profile: tuple[float, ...]
    crossing_step: int | None
    mixture_at_crossing: float | None
    trace: tuple[tuple, ...] | None


@dataclass(frozen=True)
class RateEstimate:
    rate: float
    low: float
    high: float
    count: int

    def to_dict(self) -> dict:
        return {
            "rate": self.rate,
            "wilson_low": self.low,
            "wilson_high": self.high,
            "count": self.count,
        }


@dataclass(frozen=True)
class MeanEstimate:
    mean: float
    se: float

    def to_dict(self) -> dict:
        return {"mean": self.mean, "se": self.se}


@dataclass(frozen=True)
class ExperimentReport:
    n_trials: int
    n_valid: int
    failure: RateEstimate
    boundary_crossing: RateEstimate
    stopping_times: Mapping[int, int]
    n_no_stop: int
    distortion_mean: tuple[float, ...]
    distortion_max: tuple[float, ...]
    supermartingale_means: Mapping[float, MeanEstimate]
    mixture_mean: MeanEstimate
    M_planned: int
    M_effective: int
    L_T: float
    B_sq_bound: float
    baseline_M: int
    config: Mapping
    invalid_trials: tuple[tuple[int, str], ...]
    wall_clock_seconds: float

    def to_dict(self) -> dict:
        return {
            "n_trials": self.n_trials,
            "n_valid": self.n_valid,
            "failure": self.failure.to_dict(),
            "boundary_crossing": self.boundary_crossing.to_dict(),
            "stopping_times": {str(k): v for k, v in sorted(self.stopping_times.items())},
            "n_no_stop": self.n_no_stop,
            "distortion_profile": {
                "mean": list(self.distortion_mean),
                "max": list(self.distortion_max),
            },
            "supermartingale_means": {
                repr(lam): est.to_dict() for lam, est in self.supermartingale_means.items()
            },
            "mixture_mean": self.mixture_mean.to_dict(),
            "plan": {
                "M_planned": self.M_planned,
                "M_effective": self.M_effective,
                "L_T": self.L_T,
                "B_sq_bound": self.B_sq_bound,
                "baseline_M": self.baseline_M,
            },
            "config": dict(self.config),
            "invalid_trials": [
                {"trial_id": tid, "error": msg} for tid, msg in self.invalid_trials
            ],
            "wall_clock_seconds": self.wall_clock_seconds,
        }


@dataclass(frozen=True)
class ExperimentRun:
    """Everything one experiment produced: the aggregate report, the valid
    per-trial records in trial order, and any full traces."""

    report: ExperimentReport
    records: tuple[TrialRecord, ...]
    traces: Mapping[int, tuple[tuple, ...]]


def wilson_interval(successes: int, n: int, z: float = _WILSON_Z95) -> tuple[float, float]:
    """Wilson score interval; well-behaved at observed rates of 0 and 1."""
    if n < 1:
        raise ValueError("interval requires at least one observation")
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def trial_rng_streams(
    seed: int, trial_id: int
) -> tuple[np.random.Generator, np.random.Generator]:
    """Two independent child streams (strategy, projections) for one trial,
    keyed by (seed, trial index) so scheduling order cannot matter."""
    root = np.random.SeedSequence(entropy=seed, spawn_key=(trial_id,))
    strat_ss, proj_ss = root.spawn(2)
    return np.random.default_rng(strat_ss), np.random.default_rng(proj_ss)


def simulate_trial(config: ExperimentConfig, trial_id: int) -> TrialResult:
    """Simulate one path for steps 0..T: at each step the strategy commits to
    x_t first, the direction z_t is drawn strictly afterwards."""
    plan = config.plan
    M = config.M
    L = config.mixture_L
    cx = config.strategy.cx
    strat_rng, proj_rng = trial_rng_streams(config.seed, trial_id)

    x0 = math.sqrt(plan.x0sq)
    z0 = sample_sphere(M, proj_rng)
    sketch = SequentialSketch(x0, z0, plan.eps)
    acc = BoundAccumulator(c0=plan.c0, eps=plan.eps, M=M, L=L)

    steps: list[tuple[float, np.ndarray]] = [(x0, z0)]
    goods = [sketch.good]
    profile = [sketch.distortion()]
    max_distortion = profile[0]
    crossed = False
    crossing_step: int | None = None
    mixture_at_crossing: float | None = None

    traced = config.trace_every is not None and trial_id % config.trace_every == 0
    trace: list[tuple] | None = None
    if traced:
        trace = [(0, x0, 0.0, sketch.Y, sketch.S, profile[0], sketch.good, sketch.tau is not None)]

    for t in range(1, plan.T + 1):
        history = History(
            steps=steps,
            S=sketch.S,
            Y=sketch.Y,
            distortion=profile[t - 1],
            tau=sketch.tau,
        )
        x = float(next_x(config.strategy, history, strat_rng))
        if not x * x <= cx:
            raise InvalidTrialError(
                f"strategy emitted x with x^2 = {x * x!r} > cx = {cx!r} at step {t}"
            )
        # The direction for this step must not exist before x was committed.
        if sketch.t != t - 1 or len(steps) != t:
            raise InvalidTrialError(f"sequencing violation at step {t}")
        z = sample_sphere(M, proj_rng)

        was_stopped = sketch.tau is not None
        S_prev = sketch.S
        outcome = sketch.update(x, z)
        acc.add(outcome, x, S_prev, was_stopped)
        steps.append((x, z))
        goods.append(outcome.good)

        d = sketch.distortion()
        profile.append(d)
        if d > max_distortion:
            max_distortion = d
        if not crossed and abs(acc.A) > acc.boundary(plan.delta):
            crossed = True
            crossing_step = t
            mixture_at_crossing = acc.mixture()
        if not (
            math.isfinite(sketch.Y)
            and math.isfinite(sketch.S)
            and math.isfinite(acc.A)
            and math.isfinite(acc.B_sq)
        ):
            raise InvalidTrialError(f"non-finite state at step {t}")
        if traced:
            trace.append(
                (t, x, outcome.inner, sketch.Y, sketch.S, d, outcome.good, sketch.tau is not None)
            )

    if not check_trigger_identity(goods):
        raise AssertionError("stopping-time trigger identity violated on a simulated path")

    record = TrialRecord(
        trial_id=trial_id,
        failed=sketch.tau is not None,
        tau=sketch.tau,
        max_distortion=float(max_distortion),
        final_S=float(sketch.S),
        final_A=float(acc.A),
        final_B_sq=float(acc.B_sq),
        boundary_crossed=crossed,
        trigger_identity_ok=True,
    )
    return TrialResult(
        record=record,
        distortion_profile=tuple(profile),
        crossing_step=crossing_step,
        mixture_at_crossing=mixture_at_crossing,
        trace=tuple(trace) if traced else None,
    )


def run_trial(config: ExperimentConfig, trial_id: int) -> TrialRecord:
    """Summary record for a single trial; see simulate_trial for the details."""
    return simulate_trial(config, trial_id).record


def _guarded_trial(config: ExperimentConfig, trial_id: int):
    try:
        return simulate_trial(config, trial_id)
    except InvalidTrialError as exc:
        return (trial_id, str(exc))


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentRun:
    """Run all trials and fold them, in trial-index order, into a report.

    Trials are independent; `workers` > 1 distributes them over processes
    without affecting any per-trial random stream.
    """
    t_start = time.perf_counter()
    task = partial(_guarded_trial, config)
    ids = range(config.n_trials)
    if workers > 1 and config.n_trials > 1:
        chunksize = max(1, config.n_trials // (workers * 8))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(task, ids, chunksize=chunksize))
    else:
        outputs = [task(i) for i in ids]

    results: list[TrialResult] = []
    invalid: list[tuple[int, str]] = []
    for out in outputs:
        if isinstance(out, TrialResult):
            results.append(out)
        else:
            invalid.append(out)
    if not results:
        raise RuntimeError(
            f"all {config.n_trials} trials were invalid; first error: {invalid[0][1]}"
        )

    report = _aggregate(config, results, invalid, time.perf_counter() - t_start)
    traces = {
        res.record.trial_id: res.trace for res in results if res.trace is not None
    }
    return ExperimentRun(
        report=report,
        records=tuple(res.record for res in results),
        traces=traces,
    )


def _aggregate(
    config: ExperimentConfig,
    results: Sequence[TrialResult],
    invalid: Sequence[tuple[int, str]],
    wall_clock: float,
) -> ExperimentReport:
    n_valid = len(results)
    records = [res.record for res in results]
    failures = sum(r.failed for r in records)
    crossings = sum(r.boundary_crossed for r in records)

    profiles = np.array([res.distortion_profile for res in results])
    final_A = np.array([r.final_A for r in records])
    final_B_sq = np.array([r.final_B_sq for r in records])

    super_means = {}
    for lam in SUPERMARTINGALE_LAMBDAS:
        values = np.exp(lam * final_A - lam * lam * final_B_sq / 2.0)
        super_means[lam] = _mean_estimate(values)

    L = config.mixture_L
    total = L + final_B_sq
    mixture_values = np.exp(0.5 * np.log(L / total) + final_A**2 / (2.0 * total))

    plan_result = plan_dimension(config.plan)
    stop_counts = Counter(r.tau for r in records if r.tau is not None)

    return ExperimentReport(
        n_trials=config.n_trials,
        n_valid=n_valid,
        failure=_rate_estimate(failures, n_valid),
        boundary_crossing=_rate_estimate(crossings, n_valid),
        stopping_times=dict(stop_counts),
        n_no_stop=n_valid - int(failures),
        distortion_mean=tuple(float(v) for v in profiles.mean(axis=0)),
        distortion_max=tuple(float(v) for v in profiles.max(axis=0)),
        supermartingale_means=super_means,
        mixture_mean=_mean_estimate(mixture_values),
        M_planned=plan_result.M,
        M_effective=config.M,
        L_T=L,
        B_sq_bound=plan_result.B_sq_bound,
        baseline_M=union_bound_baseline(
            config.plan.eps, config.plan.delta, config.plan.T, config.plan.c0
        ),
        config=config_to_dict(config),
        invalid_trials=tuple(invalid),
        wall_clock_seconds=wall_clock,
    )


def _rate_estimate(count: int, n: int) -> RateEstimate:
    low, high = wilson_interval(count, n)
    return RateEstimate(rate=count / n, low=low, high=high, count=int(count))


def _mean_estimate(values: np.ndarray) -> MeanEstimate:
    n = values.size
    se = float(values.std(ddof=1)) / math.sqrt(n) if n > 1 else 0.0
    return MeanEstimate(mean=float(values.mean()), se=se)


# --------------------------------------------------------------------------
# configuration files
# --------------------------------------------------------------------------

_CONFIG_KEYS = {
    "plan",
    "strategy",
    "n_trials",
    "seed",
    "M_override",
    "distribution",
    "trace_every",
    "report_paths",
}
_PLAN_KEYS = {"eps", "delta", "c0", "cx", "x0sq", "T"}
_STRATEGY_KEYS = {"kind", "cx", "params"}
_REPORT_PATH_KEYS = {"directory", "report", "trials"}


def _reject_unknown(mapping: Mapping, allowed: set, where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} keys: {sorted(unknown)}")


def config_from_dict(data: Mapping) -> ExperimentConfig:
    if not isinstance(data, Mapping):
        raise ConfigError("experiment config must be a JSON object")
    _reject_unknown(data, _CONFIG_KEYS, "config")
    for required in ("plan", "strategy", "n_trials", "seed"):
        if required not in data:
            raise ConfigError(f"config is missing required key {required!r}")

    plan_data = data["plan"]
    if not isinstance(plan_data, Mapping):
        raise ConfigError("'plan' must be a JSON object")
    _reject_unknown(plan_data, _PLAN_KEYS, "plan")
    try:
        plan = PlanParams(**plan_data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid plan: {exc}") from exc

    strat_data = data["strategy"]
    if not isinstance(strat_data, Mapping):
        raise ConfigError("'strategy' must be a JSON object")
    _reject_unknown(strat_data, _STRATEGY_KEYS, "strategy")
    if "kind" not in strat_data:
        raise ConfigError("strategy is missing required key 'kind'")
    try:
        strategy = StrategySpec(
            kind=strat_data["kind"],
            cx=strat_data.get("cx", plan.cx),
            params=dict(strat_data.get("params", {})),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid strategy: {exc}") from exc

    report_paths = data.get("report_paths")
    if report_paths is not None:
        if not isinstance(report_paths, Mapping):
            raise ConfigError("'report_paths' must be a JSON object")
        _reject_unknown(report_paths, _REPORT_PATH_KEYS, "report_paths")
        report_paths = dict(report_paths)

    try:
        return ExperimentConfig(
            plan=plan,
            strategy=strategy,
            n_trials=int(data["n_trials"]),
            seed=int(data["seed"]),
            M_override=data.get("M_override"),
            distribution=data.get("distribution", "sphere"),
            trace_every=data.get("trace_every"),
            report_paths=report_paths,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def config_to_dict(config: ExperimentConfig) -> dict:
    """Round-trippable echo of a config, matching the JSON schema."""
    out: dict = {
        "plan": {
            "eps": config.plan.eps,
            "delta": config.plan.delta,
            "c0": config.plan.c0,
            "cx": config.plan.cx,
            "x0sq": config.plan.x0sq,
            "T": config.plan.T,
        },
        "strategy": {
            "kind": config.strategy.kind,
            "cx": config.strategy.cx,
            "params": dict(config.strategy.params),
        },
        "n_trials": config.n_trials,
        "seed": config.seed,
        "distribution": config.distribution,
    }
    if config.M_override is not None:
        out["M_override"] = config.M_override
    if config.trace_every is not None:
        out["trace_every"] = config.trace_every
    if config.report_paths is not None:
        out["report_paths"] = dict(config.report_paths)
    return out


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def with_seed(config: ExperimentConfig, seed: int) -> ExperimentConfig:
    return replace(config, seed=seed)


def load_sweep_configs(path: str | Path) -> list[ExperimentConfig]:
    """Read a sweep file: either a JSON array of full experiment configs, or
    an object {"base": <config>, "grid": [<partial override>, ...]} where each
    grid entry replaces top-level keys ("plan" and "strategy" merge per key)."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"sweep config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"sweep config file {path} is not valid JSON: {exc}") from exc

    if isinstance(data, list):
        return [config_from_dict(entry) for entry in data]
    if isinstance(data, Mapping):
        _reject_unknown(data, {"base", "grid"}, "sweep")
        if "base" not in data or "grid" not in data:
            raise ConfigError("sweep object needs 'base' and 'grid' keys")
        base = data["base"]
        if not isinstance(base, Mapping):
            raise ConfigError("'base' must be a JSON object")
        grid = data["grid"]
        if not isinstance(grid, list):
            raise ConfigError("'grid' must be a JSON array")
        configs = []
        for entry in grid:
            if not isinstance(entry, Mapping):
                raise ConfigError("grid entries must be JSON objects")
            merged = dict(base)
            for key, value in entry.items():
                if key in ("plan", "strategy") and isinstance(value, Mapping):
                    sub = dict(merged.get(key, {}))
                    sub.update(value)
                    merged[key] = sub
                else:
                    merged[key] = value
            configs.append(config_from_dict(merged))
        return configs
    raise ConfigError("sweep config must be a JSON array or object")


# --------------------------------------------------------------------------
# sweep
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepEntry:
    index: int
    config: ExperimentConfig
    report: ExperimentReport | None
    error: str | None


def sweep(configs: Sequence[ExperimentConfig], workers: int = 1) -> list[SweepEntry]:
    """Run each config in turn; a failing config is recorded and skipped so
    the rest of the grid still completes."""
    entries = []
    for index, config in enumerate(configs):
        try:
            run = run_experiment(config, workers=workers)
            entries.append(SweepEntry(index=index, config=config, report=run.report, error=None))
        except Exception as exc:  # noqa: BLE001 - isolation is the contract
            entries.append(
                SweepEntry(
                    index=index,
                    config=config,
                    report=None,
                    error=f"{type(exc).__name__}: {exc}",
                )
            )
    return entries


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_trials_csv(records: Sequence[TrialRecord], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRIALS_CSV_HEADER)
        for r in records:
            writer.writerow(
                [
                    _csv_cell(v)
                    for v in (
                        r.trial_id,
                        r.failed,
                        r.tau,
                        r.max_distortion,
                        r.final_S,
                        r.final_A,
                        r.final_B_sq,
                        r.boundary_crossed,
                    )
                ]
            )
    return path


def write_trace_csv(rows: Sequence[tuple], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for row in rows:
            writer.writerow([_csv_cell(v) for v in row])
    return path


def write_report_json(report: ExperimentReport, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    return path


def write_sweep_csv(entries: Sequence[SweepEntry], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_CSV_HEADER)
        for entry in entries:
            cfg = entry.config
            row = [entry.index, cfg.strategy.kind, cfg.M, cfg.plan.eps, cfg.plan.delta,
                   cfg.plan.T, cfg.n_trials, cfg.seed]
            if entry.report is not None:
                rep = entry.report
                row += [rep.n_valid,
                        rep.failure.rate, rep.failure.low, rep.failure.high,
                        rep.boundary_crossing.rate, rep.boundary_crossing.low,
                        rep.boundary_crossing.high, None]
            else:
                row += [None] * 7 + [entry.error]
            writer.writerow([_csv_cell(v) for v in row])
    return path


def resolve_output_paths(
    config: ExperimentConfig, directory: str | Path | None
) -> dict[str, Path]:
    """Where simulate outputs go: CLI directory wins, then the config's
    report_paths, then the current directory."""
    paths = dict(config.report_paths or {})
    base = Path(directory) if directory is not None else Path(paths.get("directory", "."))
    return {
        "directory": base,
        "report": base / paths.get("report", "report.json"),
        "trials": base / paths.get("trials", "trials.csv"),
    }


def write_experiment_outputs(
    run: ExperimentRun, config: ExperimentConfig, directory: str | Path | None = None
) -> dict[str, Path]:
    """Write report.json, trials.csv and any trace files; returns the paths."""
    paths = resolve_output_paths(config, directory)
    paths["directory"].mkdir(parents=True, exist_ok=True)
    write_report_json(run.report, paths["report"])
    write_trials_csv(run.records, paths["trials"])
    for trial_id, rows in sorted(run.traces.items()):
        trace_path = paths["directory"] / f"trace_{trial_id}.csv"
        write_trace_csv(rows, trace_path)
        paths[f"trace_{trial_id}"] = trace_path
    return paths
