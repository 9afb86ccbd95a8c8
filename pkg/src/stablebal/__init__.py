"""Balancing-weighted regression for stable prediction across environments.

The package learns per-sample balancing weights jointly with (optionally
auto-encoded) logistic regression coefficients so that predictions hold up
under distribution shift in the noisy features.  It also ships finite-sample
imbalance diagnostics, closed-form theory calculators, seeded synthetic
shift generators, an evaluation/tuning harness, scikit-learn estimator
wrappers, and a CLI (``stablebal``).
"""

from .autoencoder import (
    AutoEncoderParams,
    ParamGrads,
    autoenc_grads,
    decode,
    default_layer_sizes,
    encode,
    encode_rows,
    init_params,
    recon_loss,
    reconstruct_rows,
    sigmoid,
)
from .balancing import (
    DegenerateColumnWarning,
    ImbalanceReport,
    SampleWeights,
    balancing_loss,
    balancing_loss_grad_omega,
    exact_balancing_weights,
    imbalance_epsilon,
    imbalance_report,
    interaction_expand,
    max_imbalance,
    missing_pattern_count,
)
from .dataset import (
    BinaryDataset,
    DatasetError,
    EnvironmentSuite,
    StableSplit,
    binarize,
    load_csv,
    load_suite,
    overlap_filter,
    save_csv,
    save_suite,
)
from .estimators import (
    DeepGlobalBalancingClassifier,
    DeepLogistic,
    GlobalBalancingClassifier,
    LogisticBaseline,
)
from .evaluation import (
    SweepResult,
    TuningError,
    build_validation_envs,
    rmse,
    sweep,
    tune,
)
from .model import (
    DgbrModel,
    FitTrace,
    HyperParams,
    TrainingDataError,
    fit_dgbr,
    fit_dlr,
    fit_gbr,
    fit_lr,
    loss_pre,
    predict_proba,
    update_beta,
)
from .synthetic import (
    GenSpec,
    GenerationError,
    bias_select_vs,
    bias_select_yv,
    gen_features,
    gen_outcome,
    make_suite,
)
from .theory import (
    BoundInputs,
    RiskBound,
    alpha_from_m,
    expected_alpha,
    risk_bound,
)

__version__ = "0.1.0"

__all__ = [
    "AutoEncoderParams",
    "BinaryDataset",
    "BoundInputs",
    "DatasetError",
    "DeepGlobalBalancingClassifier",
    "DeepLogistic",
    "DegenerateColumnWarning",
    "DgbrModel",
    "EnvironmentSuite",
    "FitTrace",
    "GenSpec",
    "GenerationError",
    "GlobalBalancingClassifier",
    "HyperParams",
    "ImbalanceReport",
    "LogisticBaseline",
    "ParamGrads",
    "RiskBound",
    "SampleWeights",
    "StableSplit",
    "SweepResult",
    "TrainingDataError",
    "TuningError",
    "alpha_from_m",
    "autoenc_grads",
    "balancing_loss",
    "balancing_loss_grad_omega",
    "bias_select_vs",
    "bias_select_yv",
    "binarize",
    "build_validation_envs",
    "decode",
    "default_layer_sizes",
    "encode",
    "encode_rows",
    "exact_balancing_weights",
    "expected_alpha",
    "fit_dgbr",
    "fit_dlr",
    "fit_gbr",
    "fit_lr",
    "gen_features",
    "gen_outcome",
    "imbalance_epsilon",
    "imbalance_report",
    "init_params",
    "interaction_expand",
    "load_csv",
    "load_suite",
    "loss_pre",
    "make_suite",
    "max_imbalance",
    "missing_pattern_count",
    "overlap_filter",
    "predict_proba",
    "recon_loss",
    "reconstruct_rows",
    "risk_bound",
    "rmse",
    "save_csv",
    "save_suite",
    "sigmoid",
    "sweep",
    "tune",
    "update_beta",
]
