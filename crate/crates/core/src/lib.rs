//! Crash injury severity classification.

pub mod config;
pub mod data;
pub mod error;
pub mod explain;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod pipeline;
pub mod report;
pub mod resample;
pub mod rng;
pub mod select;
pub mod tuning;

pub use data::{DesignMatrix, Dataset, FeatureSchema};
pub use error::{Error, ErrorCategory, Result};
pub use config::RunConfig;
pub use metrics::MetricsReport;
pub use models::{FittedModel, Hyperparams, ModelKind, ParamValue};
pub use pipeline::{run_pipeline, run_until, Stage};
pub use resample::SmoteConfig;
pub use tuning::Scoring;
