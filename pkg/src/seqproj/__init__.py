"""Sequential random-projection sketching for adaptively generated streams.

The pieces: unit-sphere direction sampling with distributional oracles
(`distributions`), the incremental sketch with stopping-time bookkeeping
(`sketch`), the dimension planner plus anytime deviation boundary (`bounds`),
a zoo of adaptive input strategies (`adversary`), a seeded Monte Carlo
harness (`harness`), figure rendering (`plots`) and the CLI (`cli`).
"""

__version__ = "0.1.0"

from .adversary import REFERENCE_STRATEGIES, History, StrategySpec, next_x
from .bounds import (
    BoundAccumulator,
    PlanParams,
    PlanResult,
    boundary,
    dimension_bound,
    mixture_scale,
    mixture_value,
    plan_dimension,
    supermartingale_statistic,
    union_bound_baseline,
)
from .distributions import (
    LAMBDA_GRID,
    BetaLawParams,
    InnerProductLaw,
    KsResult,
    MgfReport,
    SubGaussianSpec,
    check_beta_mgf,
    check_inner_product_ks,
    check_inner_product_variance,
    check_subgaussian_mgf,
    inner_product_law,
    sample_sphere,
    sample_sphere_batch,
    sphere_source,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    ExperimentReport,
    ExperimentRun,
    InvalidTrialError,
    SweepEntry,
    TrialRecord,
    TrialResult,
    config_from_dict,
    load_config,
    load_sweep_configs,
    run_experiment,
    run_trial,
    simulate_trial,
    sweep,
    wilson_interval,
    write_experiment_outputs,
)
from .sketch import (
    DEFAULT_RESYNC_INTERVAL,
    SequentialSketch,
    StepOutcome,
    check_trigger_identity,
)

__all__ = [
    "__version__",
    "BetaLawParams",
    "BoundAccumulator",
    "ConfigError",
    "DEFAULT_RESYNC_INTERVAL",
    "ExperimentConfig",
    "ExperimentReport",
    "ExperimentRun",
    "History",
    "InnerProductLaw",
    "InvalidTrialError",
    "KsResult",
    "LAMBDA_GRID",
    "MgfReport",
    "PlanParams",
    "PlanResult",
    "REFERENCE_STRATEGIES",
    "SequentialSketch",
    "StepOutcome",
    "StrategySpec",
    "SubGaussianSpec",
    "SweepEntry",
    "TrialRecord",
    "TrialResult",
    "boundary",
    "check_beta_mgf",
    "check_inner_product_ks",
    "check_inner_product_variance",
    "check_subgaussian_mgf",
    "check_trigger_identity",
    "config_from_dict",
    "dimension_bound",
    "inner_product_law",
    "load_config",
    "load_sweep_configs",
    "mixture_scale",
    "mixture_value",
    "next_x",
    "plan_dimension",
    "run_experiment",
    "run_trial",
    "sample_sphere",
    "sample_sphere_batch",
    "simulate_trial",
    "sphere_source",
    "supermartingale_statistic",
    "sweep",
    "union_bound_baseline",
    "wilson_interval",
    "write_experiment_outputs",
]
