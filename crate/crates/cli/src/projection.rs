use chppi_core::Point;
use serde::{Deserialize, Serialize};

/// Radius of the sphere with the same surface area as the WGS84 ellipsoid.
pub const AUTHALIC_RADIUS_M: f64 = 6_371_007.181;

/// Spherical Lambert azimuthal equal-area projection centred on
/// (`lon0`, `lat0`), in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Projection {
    pub lon0: f64,
    pub lat0: f64,
    #[serde(default = "default_radius")]
    pub radius_m: f64,
}

fn default_radius() -> f64 {
    AUTHALIC_RADIUS_M
}

impl Projection {
    pub fn new(lon0: f64, lat0: f64) -> Self {
        Projection { lon0, lat0, radius_m: AUTHALIC_RADIUS_M }
    }

    pub fn is_valid(&self) -> bool {
        self.lon0.is_finite()
            && (-180.0..=180.0).contains(&self.lon0)
            && (-90.0..=90.0).contains(&self.lat0)
            && self.radius_m > 0.0
    }

    pub fn forward(&self, lon: f64, lat: f64) -> Point {
        let (phi1, lam0) = (self.lat0.to_radians(), self.lon0.to_radians());
        let (phi, dl) = (lat.to_radians(), lon.to_radians() - lam0);
        let (s1, c1) = phi1.sin_cos();
        let (s, c) = phi.sin_cos();
        let cos_dl = dl.cos();
        let k = (2.0 / (1.0 + s1 * s + c1 * c * cos_dl)).sqrt();
        Point::new(self.radius_m * k * c * dl.sin(), self.radius_m * k * (c1 * s - s1 * c * cos_dl))
    }

    /// Returns `(lon, lat)` in degrees.
    pub fn inverse(&self, p: &Point) -> (f64, f64) {
        let rho = p.x.hypot(p.y);
        if rho == 0.0 {
            return (self.lon0, self.lat0);
        }
        let phi1 = self.lat0.to_radians();
        let (s1, c1) = phi1.sin_cos();
        let c = 2.0 * (rho / (2.0 * self.radius_m)).min(1.0).asin();
        let (sc, cc) = c.sin_cos();
        let phi = (cc * s1 + p.y * sc * c1 / rho).clamp(-1.0, 1.0).asin();
        let lam = self.lon0.to_radians() + (p.x * sc).atan2(rho * c1 * cc - p.y * s1 * sc);
        let mut lon = lam.to_degrees();
        if lon > 180.0 {
            lon -= 360.0;
        } else if lon < -180.0 {
            lon += 360.0;
        }
        (lon, phi.to_degrees())
    }
}
