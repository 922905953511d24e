pub mod access;
pub mod affinity;
pub mod geo;
pub mod housing;
pub mod index;
pub mod linalg;
pub mod scalar;
pub mod seed;
pub mod sei;
pub mod stats;

pub use scalar::Scalar;

pub type Point = geo::Point<f64>;
pub type Polygon = geo::Polygon<f64>;
pub type VoronoiDiagram = geo::VoronoiDiagram<String, f64>;
pub type SpatialIndex = geo::SpatialIndex<String, f64>;
pub type SmoothCdf = stats::SmoothCdf<f64>;
pub type SpcaResult = stats::SpcaResult<f64>;
pub type McaModel = housing::McaModel<f64>;
pub type StreetGraph = access::StreetGraph<f64>;
pub type HealthProvider = access::HealthProvider<f64>;
pub type BlockAccess = access::BlockAccess<f64>;
pub type BlockAffinity = affinity::BlockAffinity<f64>;
pub type Autoencoder = sei::Autoencoder<f64>;
pub type ThermometerMatrix = sei::ThermometerMatrix<f64>;
pub type LocalityBlock = index::LocalityBlock<f64>;
pub type LocalityReport = index::LocalityReport<f64>;
