//! Dimension-penalized maximum-likelihood model selection for nonparametric
//! logistic regression.
//!
//! The library fits piecewise-constant logit estimators (regressograms) and
//! general dictionary models to binary data on a fixed design, selects among
//! them with dimension-based penalties (AIC, BIC, linear, and a shape penalty
//! whose constant can be calibrated from the data by the dimension-jump
//! heuristic), and benchmarks selection rules against the in-collection
//! oracle through the ratio of Hellinger risks.

pub mod dictionary;
pub mod export;
pub mod model;
pub mod penalty;
pub mod regressogram;
pub mod selection;
pub mod simulation;

pub use dictionary::{fit_mle, orthonormalize, Dictionary, DictionaryModel, FitConfig, MleFit};
pub use model::{
    contrast, empirical_norm_sq, hellinger_sq, kl_divergence, sigmoid, BinarySample, FittedLogit,
    ModelError, TrueFunction,
};
pub use penalty::{CollectionKind, PenaltySpec, WeightRule, WeightScheme};
pub use regressogram::{
    best_irregular_partition, fit_regressogram, project_truth, regular_collection, MaxDimRule,
    PartitionKind, PartitionModel, RegressogramFit,
};
pub use selection::{
    dimension_jump, select, CalibrationResult, CriterionPath, KappaGrid, ModelFit, PenaltyConfig,
};
pub use simulation::{
    generate, generate_sample, run_benchmark, run_benchmark_sweep, truth_eval, BenchmarkReport,
    Scenario, TruthId,
};
