use std::collections::BTreeMap;

use super::{AffinityTuple, MAX_AFFINITY};
use crate::geo::{Polygon, VoronoiDiagram};
use crate::scalar::Scalar;

/// Mean propagated affinity of an antenna's residents scaled to `[0, 1]`;
/// zero for an antenna without residents.
pub fn antenna_scalar(t: &AffinityTuple) -> f64 {
    let total = t.total();
    if total == 0 {
        return 0.0;
    }
    let weighted: u64 = t.counts.iter().enumerate().map(|(k, &c)| k as u64 * c).sum();
    weighted as f64 / (MAX_AFFINITY as f64 * total as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockAffinity<T> {
    pub block: String,
    pub ai: T,
    /// Fraction of the block's area covered by the diagram.
    pub coverage: T,
    /// Set when part of the block lies outside the diagram.
    pub uncovered: bool,
}

/// Area-weighted antenna scalar per block. Parts of a block outside the
/// diagram contribute zero and flag the block. A zero-area block takes the
/// scalar of the cell holding its centroid.
pub fn block_affinity_index<T: Scalar>(
    tuples: &[AffinityTuple],
    diagram: &VoronoiDiagram<String, T>,
    blocks: &[(String, Polygon<T>)],
) -> Vec<BlockAffinity<T>> {
    let by_id: BTreeMap<&str, f64> = tuples.iter().map(|t| (t.antenna.as_str(), antenna_scalar(t))).collect();
    let alpha: Vec<T> = diagram
        .ids()
        .iter()
        .map(|id| T::of(by_id.get(id.as_str()).copied().unwrap_or(0.0)))
        .collect();
    let tol = T::of(1e-6);
    blocks
        .iter()
        .map(|(id, poly)| {
            let area = poly.area();
            if area <= T::zero() {
                let cell = diagram.locate(&poly.centroid());
                return BlockAffinity {
                    block: id.clone(),
                    ai: cell.map_or(T::zero(), |i| alpha[i]),
                    coverage: if cell.is_some() { T::one() } else { T::zero() },
                    uncovered: cell.is_none(),
                };
            }
            let mut covered = T::zero();
            let mut acc = T::zero();
            for (i, a) in diagram.overlaps(poly) {
                covered += a;
                acc += alpha[i] * a;
            }
            let coverage = (covered / area).min(T::one());
            BlockAffinity {
                block: id.clone(),
                ai: (acc / area).max(T::zero()).min(T::one()),
                coverage,
                uncovered: coverage < T::one() - tol,
            }
        })
        .collect()
}
