"""Structured covariance estimation with hidden triple-Kronecker structure.

The pipeline rearranges a sample covariance into an order-3 tensor whose
matricizations are low-rank under the model, denoises it with two-sided
alternating truncated SVDs (or the one-shot / soft-thresholding baselines),
and maps it back. Includes diagnostics (partial traces, effective dimensions,
recovery conditions) and a seeded benchmark harness.
"""

from .rearrange import FactorShape, kron, rearrange, rearrange_inv, vec
from .tensor import fold, frobenius_norm, inner_product, mode_product, unfold
from .linalg import (
    TruncatedSvd,
    procrustes_distance,
    sigma_k,
    sin_theta,
    soft_threshold_svd,
    spectral_norm,
    truncated_svd,
)
from .estimators import (
    EstimatorSpec,
    Tucker2Factorization,
    Tucker3Factorization,
    estimate_covariance,
    hardtth,
    prls,
    sample_covariance,
    select_ranks,
    tt_hosvd,
    tucker_hooi,
    tune_prls,
)
from .diagnostics import (
    ConditionReport,
    EffectiveDims,
    SensitivityReport,
    effective_dims,
    partial_trace,
    recovery_condition_report,
    sensitivity_report,
)
from .synthgen import (
    GroundTruth,
    SpectrumDecay,
    TensorInstance,
    gen_ground_truth,
    gen_tensor_instance,
    sample_observations,
    true_covariance,
)
from .bench import (
    BenchConfig,
    TrialRecord,
    aggregate_records,
    load_bench_config,
    parse_bench_config,
    read_csv_records,
    run_benchmark,
)

__version__ = "0.1.0"
