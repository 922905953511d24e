//! Affinity with the endemic area from call detail records.
//!
//! Three sequential stages: home-antenna detection from weeknight activity,
//! seed affinity per antenna (housing quartile inside the endemic polygon,
//! zero outside), and a one-hop max over each user's call neighbourhood. The
//! per-antenna distribution of the propagated scores is then spread over
//! census blocks by Voronoi overlap.

mod block;
mod graph;
mod home;
mod propagate;
mod records;

use thiserror::Error;

pub use block::{antenna_scalar, block_affinity_index, BlockAffinity};
pub use graph::SocialGraph;
pub use home::{detect_home_antennas, HomeAntenna, HomeAssignment, HomeCounter, NightWindow};
pub use propagate::{
    assign_seed_affinity, propagate_affinity, tally_antenna_tuples, AffinityTuple, Propagation, SeedAffinity,
    SelfInclusion,
};
pub use records::{parse_timestamp, CallRecord, Direction, IngestStats};

/// Seed affinities range over `0..=MAX_AFFINITY`.
pub const MAX_AFFINITY: u8 = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AffinityError {
    #[error("antenna {0} lies in the endemic polygon but has no housing quartile")]
    MissingQuartile(String),
    #[error("quartile {1} for antenna {0} is outside 1..=4")]
    InvalidQuartile(String, u8),
    #[error("malformed call record: {0}")]
    Parse(String),
}
