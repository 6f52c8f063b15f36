//! Learns the mapping from wearable and room features to TCI.
//!
//! Features are aggregated over a tumbling window (60 s by default), z-scored
//! with training-set statistics, and fed to a closed-form ridge regression.

mod dataset;
mod features;
mod linalg;
mod model;
mod samples;

pub use dataset::{read_dataset_csv, training_set_from_rows, write_dataset_csv, DatasetRow};
pub use features::{
    extract_features, extract_features_ending, FeatureVector, FEATURE_COUNT, FEATURE_NAMES,
};
pub use model::{predict_tci, train_tci_model, TciModel, TrainingMetadata, DEFAULT_RIDGE_STRENGTH};
pub use samples::{EnvSample, PhysioSample};
pub(crate) use features::aggregate;

use thiserror::Error;

use crate::comfort::ComfortError;

/// Default feature window, seconds.
pub const DEFAULT_WINDOW_SECS: f64 = 60.0;

/// Minimum number of labelled rows accepted by training.
pub const MIN_TRAINING_ROWS: usize = 10;

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("no samples inside the feature window")]
    EmptyWindow,
    #[error("samples from more than one occupant in a single window ({0} and {1})")]
    MixedOccupants(String, String),
    #[error("need at least {MIN_TRAINING_ROWS} training rows, got {0}")]
    TooFewSamples(usize),
    #[error("design matrix is singular (feature `{0}`)")]
    DegenerateDesign(&'static str),
    #[error("non-finite value")]
    NotFinite,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("invalid sample: {0}")]
    InvalidSample(#[from] ComfortError),
    #[error("model: {0}")]
    Model(String),
    #[error("dataset: {0}")]
    Dataset(#[from] csv::Error),
}
