use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GeoError, Point, Polygon};
use crate::scalar::Scalar;

/// Result of [`sample_points`].
#[derive(Debug, Clone, PartialEq)]
pub struct PointSample<T> {
    pub points: Vec<Point<T>>,
    /// Set when the polygon had no usable area and the centroid was replicated.
    pub degenerate: bool,
}

const ATTEMPTS_PER_POINT: usize = 10_000;

/// Uniform points strictly inside `poly` by rejection over its bounding box.
///
/// Zero-area polygons (and slivers too thin for rejection sampling to hit)
/// yield the centroid replicated `n` times with `degenerate` set.
pub fn sample_points<T: Scalar>(poly: &Polygon<T>, n: usize, seed: u64) -> Result<PointSample<T>, GeoError> {
    if n == 0 {
        return Err(GeoError::InvalidArgument("sample size must be at least 1".into()));
    }
    let fallback = || PointSample {
        points: vec![poly.centroid(); n],
        degenerate: true,
    };
    let bb = poly.bbox();
    if !(poly.area() > T::zero()) || !(bb.width() > T::zero()) || !(bb.height() > T::zero()) {
        return Ok(fallback());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut attempts = 0;
    while points.len() < n {
        if attempts >= ATTEMPTS_PER_POINT * n {
            return Ok(fallback());
        }
        attempts += 1;
        let u: f64 = rng.gen();
        let v: f64 = rng.gen();
        let q = Point::new(bb.min.x + bb.width() * T::of(u), bb.min.y + bb.height() * T::of(v));
        if poly.contains_strictly(&q) {
            points.push(q);
        }
    }
    Ok(PointSample {
        points,
        degenerate: false,
    })
}
