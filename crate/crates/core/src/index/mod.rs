//! Block-level index assembly: health vulnerability from travel time and
//! socio-economic level, density scaling, the combined prevalence index and
//! locality selection.

mod combine;
mod select;
mod vulnerability;

use thiserror::Error;

use crate::stats::StatsError;

pub use combine::{chppi, density_scale, DensityScale};
pub use select::{select_localities, LocalityBlock, LocalityReport, LocalityType, Selection, SelectionParams};
pub use vulnerability::{health_vulnerability, HealthVulnerability};

/// Candidate knots for the smooth CDF rescalings.
pub const CDF_KNOTS: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndexError {
    #[error("degenerate inputs: {0}")]
    DegenerateInputs(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("every included block has zero affinity")]
    AllZeroAffinity,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}
