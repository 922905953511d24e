use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{AffinityError, HomeAssignment, SocialGraph, MAX_AFFINITY};
use crate::geo::{Point, Polygon};
use crate::scalar::Scalar;

/// Antenna id to seed affinity in `0..=4`.
pub type SeedAffinity = BTreeMap<String, u8>;

/// Whether a user's own seed takes part in the neighbourhood max.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum SelfInclusion {
    /// Neighbours only; users without scoreable neighbours stay unscored.
    Never,
    /// Neighbours only, falling back to the own seed when none is scoreable.
    #[default]
    Fallback,
    /// Own seed always joins the max.
    Always,
}

impl std::str::FromStr for SelfInclusion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "never" | "false" | "off" => Ok(SelfInclusion::Never),
            "fallback" | "true" | "on" => Ok(SelfInclusion::Fallback),
            "always" => Ok(SelfInclusion::Always),
            other => Err(format!("unknown self-inclusion policy {other:?}")),
        }
    }
}

/// Seeds antennas with their housing quartile inside `endemic` (boundary
/// inclusive) and zero elsewhere.
pub fn assign_seed_affinity<T: Scalar>(
    antennas: &[(String, Point<T>)],
    endemic: &Polygon<T>,
    quartile_of: &BTreeMap<String, u8>,
) -> Result<SeedAffinity, AffinityError> {
    let mut out = SeedAffinity::new();
    for (id, p) in antennas {
        let s = if endemic.contains(p) {
            match quartile_of.get(id) {
                None => return Err(AffinityError::MissingQuartile(id.clone())),
                Some(&q) if !(1..=MAX_AFFINITY).contains(&q) => {
                    return Err(AffinityError::InvalidQuartile(id.clone(), q))
                }
                Some(&q) => q,
            }
        } else {
            0
        };
        out.insert(id.clone(), s);
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Propagation {
    /// Propagated affinity per scored user.
    pub scores: BTreeMap<String, u8>,
    /// Graph nodes with no home antenna.
    pub users_without_home: usize,
    /// Users whose home antenna carries no seed.
    pub users_without_seed: usize,
    /// Users left unscored because no neighbour was scoreable and the policy
    /// forbids falling back to the own seed.
    pub users_unscored: usize,
}

/// One-hop max of neighbour seeds for every user with a home antenna.
/// Edge intensities are ignored.
pub fn propagate_affinity(
    graph: &SocialGraph,
    homes: &HomeAssignment,
    seeds: &SeedAffinity,
    policy: SelfInclusion,
) -> Propagation {
    let seed_of = |u: &str| homes.get(u).and_then(|a| seeds.get(a)).copied();
    let users: Vec<(&String, &str)> = homes.homes.iter().map(|(u, h)| (u, h.antenna.as_str())).collect();
    let results: Vec<(&String, Result<Option<u8>, ()>)> = users
        .par_iter()
        .map(|&(u, home)| {
            let Some(&own) = seeds.get(home) else {
                return (u, Err(()));
            };
            let best = graph.neighbours(u).filter_map(|(v, _)| seed_of(v)).max();
            let s = match (policy, best) {
                (SelfInclusion::Always, b) => Some(b.map_or(own, |b| b.max(own))),
                (_, Some(b)) => Some(b),
                (SelfInclusion::Fallback, None) => Some(own),
                (SelfInclusion::Never, None) => None,
            };
            (u, Ok(s))
        })
        .collect();
    let mut out = Propagation {
        users_without_home: graph.users().filter(|u| homes.get(u).is_none()).count(),
        ..Propagation::default()
    };
    for (u, r) in results {
        match r {
            Err(()) => out.users_without_seed += 1,
            Ok(None) => out.users_unscored += 1,
            Ok(Some(s)) => {
                out.scores.insert(u.clone(), s);
            }
        }
    }
    out
}

/// Resident counts per propagated affinity level for one antenna.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffinityTuple {
    pub antenna: String,
    pub counts: [u64; 5],
}

impl AffinityTuple {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Tallies scored users by home antenna. Every id in `antennas` gets a tuple,
/// zero-filled when it has no scored residents; homes on other antennas are
/// appended in id order.
pub fn tally_antenna_tuples<S: AsRef<str>>(
    antennas: &[S],
    homes: &HomeAssignment,
    scores: &BTreeMap<String, u8>,
) -> Vec<AffinityTuple> {
    let mut by_antenna: BTreeMap<&str, [u64; 5]> = BTreeMap::new();
    for (u, &s) in scores {
        if let Some(a) = homes.get(u) {
            by_antenna.entry(a).or_default()[s.min(MAX_AFFINITY) as usize] += 1;
        }
    }
    let mut out = Vec::with_capacity(antennas.len());
    for a in antennas {
        let counts = by_antenna.remove(a.as_ref()).unwrap_or_default();
        out.push(AffinityTuple { antenna: a.as_ref().to_string(), counts });
    }
    for (a, counts) in by_antenna {
        out.push(AffinityTuple { antenna: a.to_string(), counts });
    }
    out
}
