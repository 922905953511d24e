use std::collections::BTreeMap;

use super::{BlockHousing, HousingError};
use crate::geo::{Point, Polygon, VoronoiDiagram};
use crate::scalar::{cmp, Scalar};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AntennaHousing<T> {
    /// Household-weighted mean block score per antenna cell.
    pub values: BTreeMap<String, T>,
    /// Households apportioned to each cell by area share.
    pub households: BTreeMap<String, T>,
    /// Cells that received no households.
    pub empty_cells: Vec<String>,
}

/// Spreads block scores onto antenna cells. Each block hands every cell the
/// share of its households equal to the share of its area inside the cell.
pub fn aggregate_to_antennas<T: Scalar>(
    scores: &BTreeMap<String, BlockHousing<T>>,
    diagram: &VoronoiDiagram<String, T>,
    blocks: &[(String, Polygon<T>)],
) -> AntennaHousing<T> {
    let n = diagram.len();
    let mut num = vec![T::zero(); n];
    let mut den = vec![T::zero(); n];
    for (id, poly) in blocks {
        let Some(b) = scores.get(id) else { continue };
        let area = poly.area();
        if area <= T::zero() {
            if let Some(i) = diagram.locate(&poly.centroid()) {
                num[i] += b.score * b.households;
                den[i] += b.households;
            }
            continue;
        }
        for (i, a) in diagram.overlaps(poly) {
            let h = b.households * (a / area);
            num[i] += b.score * h;
            den[i] += h;
        }
    }
    let mut out = AntennaHousing::default();
    for (i, id) in diagram.ids().iter().enumerate() {
        if den[i] > T::zero() {
            out.values.insert(id.clone(), num[i] / den[i]);
            out.households.insert(id.clone(), den[i]);
        } else {
            out.empty_cells.push(id.clone());
        }
    }
    out
}

/// Quartile of each antenna inside `endemic` (boundary inclusive) by its
/// position in the sorted values; tied values take the lowest position.
pub fn quartile_partition<T: Scalar>(
    values: &BTreeMap<String, T>,
    antennas: &[(String, Point<T>)],
    endemic: &Polygon<T>,
) -> Result<BTreeMap<String, u8>, HousingError> {
    let inside: Vec<(&String, T)> = antennas
        .iter()
        .filter(|(_, p)| endemic.contains(p))
        .filter_map(|(id, _)| values.get(id).map(|v| (id, *v)))
        .collect();
    let n = inside.len();
    if n < 4 {
        return Err(HousingError::TooFewAntennas { needed: 4, got: n });
    }
    let mut sorted: Vec<T> = inside.iter().map(|(_, v)| *v).collect();
    sorted.sort_by(cmp);
    Ok(inside
        .into_iter()
        .map(|(id, v)| {
            let first = sorted.partition_point(|s| *s < v);
            (id.clone(), (4 * first / n) as u8 + 1)
        })
        .collect())
}
