//! Housing-material index from census dwelling categories.
//!
//! Dwellings are described by floor, roof and internal-ceiling categories. A
//! correspondence analysis of the indicator table gives one coordinate per
//! category on the leading dimension, oriented so that materials that shelter
//! the vector score high. Block scores are then spread onto antenna cells and
//! the endemic antennas are split into quartiles.

mod aggregate;
mod categories;
mod mca;

use thiserror::Error;

pub use aggregate::{aggregate_to_antennas, quartile_partition, AntennaHousing};
pub use categories::{Ceiling, Floor, HousingRecord, Profile, Roof, Variable};
pub use mca::{fit_mca, score_blocks, BlockHousing, BlockScores, McaModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HousingError {
    #[error("variable {0} has a single observed category")]
    ConstantVariable(Variable),
    #[error("no non-trivial dimension in the indicator table")]
    RankDeficient,
    #[error("need at least {needed} antennas inside the endemic area, got {got}")]
    TooFewAntennas { needed: usize, got: usize },
    #[error("unknown {0} category {1:?}")]
    UnknownToken(Variable, String),
    #[error("household count must be at least 1 for block {0}")]
    EmptyRecord(String),
}
