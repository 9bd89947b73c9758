"""Threshold estimation from per-dose p-values.

Replicated responses at each dose are turned into p-values for "the
regression function is still at its baseline here"; a misspecified
working model (stump or sigmoid) fitted to those p-values by least
squares locates the dose where the baseline ends.
"""

from .baseline import (
    MinMaxRegions,
    RegionFit,
    TauSearch,
    ThresholdEstimate,
    estimate_composite,
    estimate_interval,
    estimate_known_tau,
    estimate_method1,
    estimate_method2,
    estimate_minmax_regions,
    estimate_tau_method1,
    running_mean,
)
from .csvio import Ingested, RescaleMap, ingest_csv, load_dataset, pvalues_csv
from .errors import DataError, NumericError, ThresholdError, UsageError
from .fitters import (
    IntervalFit,
    SigmoidFit,
    StumpFit,
    fit_baseline_interval,
    fit_sigmoid,
    fit_stump_adaptive,
    fit_stump_fixed,
)
from .pvalues import (
    DoseResponseData,
    PValueSeries,
    VarianceModel,
    pvalues_binomial,
    pvalues_composite,
    pvalues_known_sigma,
    pvalues_per_dose,
    pvalues_pooled,
)
from .simulation import (
    MODELS,
    CellResult,
    RegressionModel,
    SimulationConfig,
    SimulationReport,
    allocation_sweep,
    eval_model,
    fit_kink_p2,
    run_cell,
)
from .special import binomial_cdf, std_normal_cdf, student_t_cdf
from .subsampling import ConfidenceInterval, SubsampleConfig, subsample_ci

__version__ = "0.1.0"
