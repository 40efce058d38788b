//! Regression metrics, k-fold cross-validation and the modality ablation.

mod ablation;
mod cv;
mod metrics;

pub use ablation::{ablation, restrict_records, AblationRow, FeatureSet};
pub use cv::{
    cross_validate, cross_validate_with, kfold_split, score_predictions, CvOptions, CvOutcome,
    FoldMetrics, MetricReport, ReportRow, TaskMetrics,
};
pub use metrics::{ccc, rmse};
