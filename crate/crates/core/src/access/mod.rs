//! Walking access to health providers over a street network.

mod graph;
mod providers;
mod travel;

use thiserror::Error;

pub use graph::{GraphIngest, StreetGraph};
pub use providers::{classify_providers, Classified, HealthProvider, LabelMap, LabelRule, ProviderCategory};
pub use travel::{block_travel_times, AccessParams, BlockAccess};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AccessError {
    #[error("street graph has no nodes")]
    EmptyGraph,
    #[error("speed must be positive, got {0}")]
    InvalidSpeed(f64),
    #[error("invalid parameter: {0}")]
    InvalidArgument(String),
    #[error("no providers to route to")]
    NoProviders,
}
