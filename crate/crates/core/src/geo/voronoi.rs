use std::collections::BTreeMap;
use std::fmt::Debug;

use super::clip::{area_in_piece, clip_half_plane, clip_ring, convex_pieces, ConvexPiece};
use super::polygon::{BBox, Polygon};
use super::{GeoError, Point};
use crate::scalar::{cmp, Scalar};

/// Voronoi partition of a clip boundary by a set of sites.
///
/// Each cell is the intersection of the clip polygon with the convex region
/// of points at least as close to its site as to any other. Overlap areas are
/// computed against the convex decomposition of that intersection, so they
/// stay exact when the boundary is not convex.
#[derive(Debug, Clone)]
pub struct VoronoiDiagram<K, T> {
    ids: Vec<K>,
    lookup: BTreeMap<K, usize>,
    sites: Vec<Point<T>>,
    regions: Vec<Vec<Point<T>>>,
    pieces: Vec<Vec<ConvexPiece<T>>>,
    cells: Vec<Polygon<T>>,
    clip: Polygon<T>,
}

impl<K: Ord + Clone + Debug, T: Scalar> VoronoiDiagram<K, T> {
    pub fn build(sites: &[(K, Point<T>)], clip: Polygon<T>) -> Result<Self, GeoError> {
        if sites.is_empty() {
            return Err(GeoError::EmptySites);
        }
        let mut order: Vec<usize> = (0..sites.len()).collect();
        order.sort_by(|&a, &b| cmp(&sites[a].1.x, &sites[b].1.x).then(cmp(&sites[a].1.y, &sites[b].1.y)));
        for w in order.windows(2) {
            if sites[w[0]].1 == sites[w[1]].1 {
                let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
                return Err(GeoError::DuplicateSite(
                    format!("{:?}", sites[a].0),
                    format!("{:?}", sites[b].0),
                ));
            }
        }
        let mut lookup = BTreeMap::new();
        for (k, (id, p)) in sites.iter().enumerate() {
            if !p.is_finite() || !clip.contains(p) {
                return Err(GeoError::SiteOutsideClip(format!("{id:?}")));
            }
            if lookup.insert(id.clone(), k).is_some() {
                return Err(GeoError::InvalidArgument(format!("site id {id:?} repeated")));
            }
        }

        let points: Vec<Point<T>> = sites.iter().map(|(_, p)| *p).collect();
        let clip_pieces = convex_pieces(&clip)?;
        let convex_clip = clip.is_convex();
        let bb = *clip.bbox();

        let mut regions = Vec::with_capacity(points.len());
        let mut pieces = Vec::with_capacity(points.len());
        let mut cells = Vec::with_capacity(points.len());
        for i in 0..points.len() {
            let region = dominance_region(i, &points, &bb);
            let cell_pieces: Vec<ConvexPiece<T>> = clip_pieces
                .iter()
                .filter_map(|piece| {
                    let r = clip_ring(&piece.ring, &region);
                    (!r.is_empty()).then(|| ConvexPiece::new(piece.sign, r))
                })
                .collect();
            let cell = if convex_clip {
                Polygon::new_unchecked(cell_pieces.first().map(|p| p.ring.clone()).unwrap_or_default(), vec![])
            } else {
                let ext = clip_ring(clip.exterior(), &region);
                let holes = clip
                    .holes()
                    .iter()
                    .map(|h| clip_ring(h, &region))
                    .filter(|h| !h.is_empty())
                    .collect();
                Polygon::new_unchecked(ext, holes)
            };
            regions.push(region);
            pieces.push(cell_pieces);
            cells.push(cell);
        }

        Ok(Self {
            ids: sites.iter().map(|(id, _)| id.clone()).collect(),
            lookup,
            sites: points,
            regions,
            pieces,
            cells,
            clip,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[K] {
        &self.ids
    }

    pub fn index_of(&self, id: &K) -> Option<usize> {
        self.lookup.get(id).copied()
    }

    pub fn site(&self, idx: usize) -> Point<T> {
        self.sites[idx]
    }

    pub fn cell(&self, idx: usize) -> &Polygon<T> {
        &self.cells[idx]
    }

    pub fn clip(&self) -> &Polygon<T> {
        &self.clip
    }

    pub fn cell_area(&self, idx: usize) -> T {
        self.pieces[idx].iter().map(|p| p.sign * p.area()).sum()
    }

    /// Index of the cell containing `p`, or `None` outside the clip.
    /// Points on a shared edge resolve to the lowest index.
    pub fn locate(&self, p: &Point<T>) -> Option<usize> {
        if !self.clip.contains(p) {
            return None;
        }
        // Nearest site, computed directly: the clipped rings carry rounding
        // and a point on a shared edge can miss both of them.
        let mut best = 0;
        let mut best_d = self.sites[0].distance_squared(p);
        for (i, s) in self.sites.iter().enumerate().skip(1) {
            let d = s.distance_squared(p);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        Some(best)
    }

    /// Overlap area between `poly` and cell `idx`.
    pub fn overlap_area(&self, poly: &Polygon<T>, idx: usize) -> T {
        let a: T = self.pieces[idx]
            .iter()
            .map(|piece| piece.sign * area_in_piece(poly, piece))
            .sum();
        a.max(T::zero())
    }

    /// All cells with positive overlap against `poly`, in cell order.
    pub fn overlaps(&self, poly: &Polygon<T>) -> Vec<(usize, T)> {
        (0..self.len())
            .filter(|&i| BBox::of(&self.regions[i]).intersects(poly.bbox()))
            .filter_map(|i| {
                let a = self.overlap_area(poly, i);
                (a > T::zero()).then_some((i, a))
            })
            .collect()
    }
}

/// Convex region of points closer to site `i` than to any other site,
/// bounded by `bb`.
fn dominance_region<T: Scalar>(i: usize, sites: &[Point<T>], bb: &BBox<T>) -> Vec<Point<T>> {
    let s = sites[i];
    let mut region = vec![
        bb.min,
        Point::new(bb.max.x, bb.min.y),
        bb.max,
        Point::new(bb.min.x, bb.max.y),
        bb.min,
    ];
    let mut others: Vec<(T, usize)> = sites
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, q)| (s.distance_squared(q), j))
        .collect();
    others.sort_by(|a, b| cmp(&a.0, &b.0).then(a.1.cmp(&b.1)));

    let four = T::of(4.0);
    let mut reach = region.iter().map(|v| s.distance_squared(v)).fold(T::zero(), T::max);
    for (d2, j) in others {
        // A site farther than twice the farthest vertex cannot cut the region.
        if d2 > four * reach {
            break;
        }
        let q = sites[j];
        let normal = Point::new(q.x - s.x, q.y - s.y);
        let offset = normal.x * (s.x + q.x) * T::half() + normal.y * (s.y + q.y) * T::half();
        region = clip_half_plane(&region, normal, offset);
        if region.is_empty() {
            break;
        }
        reach = region.iter().map(|v| s.distance_squared(v)).fold(T::zero(), T::max);
    }
    region
}
