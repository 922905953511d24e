//! Household socio-economic index.
//!
//! Ordinal census indicators are thermometer-encoded and compressed by an
//! autoencoder with a single bottleneck unit; that unit's activation is the
//! household score. Block scores are the trimean of their households.

mod metric;
mod net;
mod schema;
mod score;

use thiserror::Error;

pub use metric::{evaluate_model, MetricAccumulator, MetricWeighting};
pub use net::{train_autoencoder, Autoencoder, AutoencoderConfig, TrainingReport};
pub use schema::{encode_thermometer, OrdinalSchema, ThermometerMatrix};
pub use score::{score_households, trimean, trimean_blocks, HouseholdScores};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeiError {
    #[error("row {row}: value {value} of {variable} outside 1..={levels}")]
    OutOfRangeCategory { row: usize, variable: String, value: u32, levels: usize },
    #[error("row {row} has {got} values, schema expects {expected}")]
    RowWidth { row: usize, got: usize, expected: usize },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("loss became non-finite at epoch {epoch} (last finite loss {last})")]
    NonFiniteLoss { epoch: usize, last: f64 },
    #[error("model expects {expected} columns, matrix has {got}")]
    DimensionMismatch { expected: usize, got: usize },
}
