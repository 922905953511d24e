//! Planar geometry in a projected metric CRS.

mod clip;
mod index;
mod polygon;
mod sample;
mod voronoi;

use thiserror::Error;

use crate::scalar::Scalar;

pub use clip::{intersection_area, ConvexPiece};
pub use index::SpatialIndex;
pub use polygon::{BBox, Polygon};
pub use sample::{sample_points, PointSample};
pub use voronoi::VoronoiDiagram;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("no sites given")]
    EmptySites,
    #[error("sites {0} and {1} share the same coordinates")]
    DuplicateSite(String, String),
    #[error("site {0} lies outside the clip boundary")]
    SiteOutsideClip(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("polygon has zero area")]
    DegeneratePolygon,
    #[error("spatial index is empty")]
    EmptyIndex,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Planar point; `x` grows east and `y` north, both in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn distance_squared(&self, other: &Self) -> T {
        (self.x - other.x).pow2() + (self.y - other.y).pow2()
    }

    #[inline]
    pub fn distance(&self, other: &Self) -> T {
        self.distance_squared(other).sqrt()
    }
}

/// Twice the signed area of the triangle `a, b, c`; positive when counter-clockwise.
#[inline]
pub(crate) fn cross<T: Scalar>(a: &Point<T>, b: &Point<T>, c: &Point<T>) -> T {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}
