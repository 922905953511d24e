use rayon::prelude::*;

use super::graph::metres_per_minute;
use super::{AccessError, HealthProvider, ProviderCategory, StreetGraph};
use crate::geo::{sample_points, Point, Polygon, SpatialIndex};
use crate::scalar::{cmp, Scalar};
use crate::seed::keyed_seed;
use crate::stats::median;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccessParams<T> {
    pub speed_kmh: T,
    /// Euclidean candidates routed per category; `usize::MAX` routes to all.
    pub k: usize,
    pub samples: usize,
    pub seed: u64,
}

impl<T: Scalar> Default for AccessParams<T> {
    fn default() -> Self {
        AccessParams { speed_kmh: T::of(5.0), k: 10, samples: 5, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockAccess<T> {
    pub block: String,
    /// Mean over sample points of the time to the closest provider of each
    /// category, in minutes; `None` when the category has no providers.
    pub mean_times: [Option<T>; 3],
    /// Provider most often closest to a sample point, per category.
    pub nearest: [Option<String>; 3],
    /// Median over sample points of the time to the closest provider of any
    /// category, in minutes.
    pub delta: T,
    /// Some sample point could not reach a provider over the network.
    pub unreachable: bool,
    /// The block was too thin to sample and its centroid stood in.
    pub degenerate: bool,
}

impl<T: Scalar> BlockAccess<T> {
    pub fn mean_time(&self, c: ProviderCategory) -> Option<T> {
        self.mean_times[c as usize]
    }
}

struct Router<'a, T> {
    graph: &'a StreetGraph<T>,
    providers: Vec<&'a HealthProvider<T>>,
    snapped: Vec<(usize, T)>,
    by_category: Vec<Option<SpatialIndex<usize, T>>>,
    per_minute: T,
    k: usize,
}

impl<'a, T: Scalar> Router<'a, T> {
    fn new(graph: &'a StreetGraph<T>, providers: &'a [HealthProvider<T>], speed: T, k: usize) -> Result<Self, AccessError> {
        let mut providers: Vec<&HealthProvider<T>> = providers.iter().collect();
        providers.sort_by(|a, b| a.id.cmp(&b.id));
        let snapped = providers.iter().map(|p| graph.snap(&p.location)).collect();
        let by_category = ProviderCategory::ALL
            .iter()
            .map(|&c| {
                let items: Vec<(usize, Point<T>)> = providers
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| p.category == c)
                    .map(|(i, p)| (i, p.location))
                    .collect();
                (!items.is_empty()).then(|| SpatialIndex::build(items))
            })
            .collect();
        Ok(Router { graph, providers, snapped, by_category, per_minute: metres_per_minute(speed)?, k })
    }

    /// Closest provider per category from one point: `(provider, minutes)`.
    fn from_point(&self, p: &Point<T>) -> [Option<(usize, T)>; 3] {
        let (src, d_src) = self.graph.snap(p);
        let candidates: Vec<Vec<usize>> = self
            .by_category
            .iter()
            .map(|idx| match idx {
                Some(idx) => idx
                    .knn_indices(p, self.k.min(idx.len()))
                    .expect("non-empty index")
                    .into_iter()
                    .map(|(pos, _)| idx.get(pos).0)
                    .collect(),
                None => Vec::new(),
            })
            .collect();
        let targets: Vec<usize> = candidates.iter().flatten().map(|&i| self.snapped[i].0).collect();
        let dist = self.graph.distances_to(src, &targets);
        let mut out = [None; 3];
        let mut t = 0;
        for (c, cands) in candidates.iter().enumerate() {
            for &i in cands {
                let minutes = (d_src + dist[t] + self.snapped[i].1) / self.per_minute;
                t += 1;
                let better = match out[c] {
                    None => true,
                    Some((j, m)) => minutes < m || (minutes == m && i < j),
                };
                if better {
                    out[c] = Some((i, minutes));
                }
            }
        }
        out
    }
}

/// Travel times from seeded sample points of each block to the closest
/// provider of every category. Sample points are drawn from a seed keyed by
/// the block id; output order follows `blocks`.
pub fn block_travel_times<T: Scalar>(
    blocks: &[(String, Polygon<T>)],
    providers: &[HealthProvider<T>],
    graph: &StreetGraph<T>,
    params: &AccessParams<T>,
) -> Result<Vec<BlockAccess<T>>, AccessError> {
    if providers.is_empty() {
        return Err(AccessError::NoProviders);
    }
    if params.k == 0 || params.samples == 0 {
        return Err(AccessError::InvalidArgument("k and samples must be at least 1".into()));
    }
    let router = Router::new(graph, providers, params.speed_kmh, params.k)?;
    Ok(blocks
        .par_iter()
        .map(|(id, poly)| {
            let sample = sample_points(poly, params.samples, keyed_seed(params.seed, id))
                .expect("positive sample size");
            let per_point: Vec<[Option<(usize, T)>; 3]> = sample.points.iter().map(|p| router.from_point(p)).collect();
            let mut mean_times = [None; 3];
            let mut nearest: [Option<String>; 3] = [None, None, None];
            let mut unreachable = false;
            for c in 0..3 {
                let hits: Vec<(usize, T)> = per_point.iter().filter_map(|r| r[c]).collect();
                if hits.is_empty() {
                    continue;
                }
                let mean = hits.iter().map(|h| h.1).sum::<T>() / T::of_usize(hits.len());
                unreachable |= !mean.is_finite();
                mean_times[c] = Some(mean);
                nearest[c] = modal_provider(&hits).map(|i| router.providers[i].id.clone());
            }
            let minima: Vec<T> = per_point
                .iter()
                .map(|r| r.iter().flatten().map(|h| h.1).min_by(cmp).unwrap_or(T::infinity()))
                .collect();
            let delta = median_with_infinity(&minima);
            BlockAccess {
                block: id.clone(),
                mean_times,
                nearest,
                delta,
                unreachable: unreachable || minima.iter().any(|m| !m.is_finite()),
                degenerate: sample.degenerate,
            }
        })
        .collect())
}

/// Sample median where an infinite middle order statistic yields infinity.
fn median_with_infinity<T: Scalar>(x: &[T]) -> T {
    let mut s = x.to_vec();
    s.sort_by(cmp);
    let n = s.len();
    if !s[n / 2].is_finite() || (n % 2 == 0 && !s[n / 2 - 1].is_finite()) {
        return T::infinity();
    }
    median(&s)
}

/// Reachable provider that is closest for the most sample points; ties go
/// to the lower provider position.
fn modal_provider<T: Scalar>(hits: &[(usize, T)]) -> Option<usize> {
    let mut counts: Vec<(usize, usize)> = Vec::new();
    for &(i, m) in hits {
        if !m.is_finite() {
            continue;
        }
        match counts.iter_mut().find(|(j, _)| *j == i) {
            Some(e) => e.1 += 1,
            None => counts.push((i, 1)),
        }
    }
    counts.into_iter().max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(&a.0))).map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, step: f64) -> StreetGraph<f64> {
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                nodes.push((format!("n{i}_{j}"), Point::new(i as f64 * step, j as f64 * step)));
                if i + 1 < n {
                    edges.push((format!("n{i}_{j}"), format!("n{}_{j}", i + 1), step));
                }
                if j + 1 < n {
                    edges.push((format!("n{i}_{j}"), format!("n{i}_{}", j + 1), step));
                }
            }
        }
        StreetGraph::new(nodes, edges).unwrap().0
    }

    fn provider(id: &str, x: f64, y: f64, c: ProviderCategory) -> HealthProvider<f64> {
        HealthProvider { id: id.into(), location: Point::new(x, y), category: c }
    }

    #[test]
    fn colocated_hospital_costs_only_the_snaps() {
        let g = grid(5, 100.0);
        let block = Polygon::rectangle(Point::new(190.0, 190.0), Point::new(210.0, 210.0)).unwrap();
        let providers = vec![provider("h", 200.0, 200.0, ProviderCategory::Hospital)];
        let out = block_travel_times(&[("b".into(), block)], &providers, &g, &AccessParams::default()).unwrap();
        let t = out[0].mean_time(ProviderCategory::Hospital).unwrap();
        // At most the half-diagonal of the block walked at 5 km/h.
        assert!(t <= 10.0f64.hypot(10.0) / (5000.0 / 60.0) + 1e-12);
        assert_eq!(out[0].nearest[0].as_deref(), Some("h"));
        assert!(out[0].mean_time(ProviderCategory::HealthCenter).is_none());
        assert!(out[0].delta <= t * 2.0);
    }

    #[test]
    fn disconnected_provider_is_flagged() {
        let nodes = vec![
            ("a".to_string(), Point::new(0.0, 0.0)),
            ("b".to_string(), Point::new(100.0, 0.0)),
            ("c".to_string(), Point::new(5000.0, 0.0)),
        ];
        let (g, _) = StreetGraph::new(nodes, [("a".to_string(), "b".to_string(), 100.0)]).unwrap();
        let block = Polygon::rectangle(Point::new(0.0, -10.0), Point::new(20.0, 10.0)).unwrap();
        let providers = vec![provider("p", 5000.0, 0.0, ProviderCategory::SanitaryPost)];
        let out = block_travel_times(&[("b".into(), block)], &providers, &g, &AccessParams::default()).unwrap();
        assert!(out[0].unreachable);
        assert!(out[0].delta.is_infinite());
        assert!(out[0].nearest[2].is_none());
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = grid(2, 1.0);
        let block = Polygon::rectangle(Point::new(0.0, 0.0), Point::new(1.0, 1.0)).unwrap();
        let blocks = [("b".to_string(), block)];
        assert_eq!(block_travel_times(&blocks, &[], &g, &AccessParams::default()), Err(AccessError::NoProviders));
        let p = vec![provider("h", 0.0, 0.0, ProviderCategory::Hospital)];
        let bad = AccessParams { speed_kmh: -1.0, ..AccessParams::default() };
        assert!(matches!(block_travel_times(&blocks, &p, &g, &bad), Err(AccessError::InvalidSpeed(_))));
    }
}
