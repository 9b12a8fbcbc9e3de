//! Metrics, data splits and the three experiment protocols.

mod experiment;
mod metrics;
mod split;

pub use experiment::{
    extract_corpus, learner_for, make_plan, prepare_manifest, run_experiment, run_experiment_with, ExperimentKind,
    FoldMetrics, FoldReport, Learner, MetricsReport, MlpLearner, ModelKind, Predictor, SvmLearner, REPORT_CSV_HEADER,
};
pub use metrics::{
    confusion, discriminant_power, heart_problem_sens_spec, precision_per_class, total_precision, youden,
    ConfusionMatrix, Rate, SensSpec,
};
pub use split::{grouped_kfold, split_challenge, stratified_kfold, Fold, SplitKind, SplitPlan};
