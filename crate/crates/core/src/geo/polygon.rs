use super::{cross, GeoError, Point};
use crate::scalar::Scalar;

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox<T> {
    pub min: Point<T>,
    pub max: Point<T>,
}

impl<T: Scalar> BBox<T> {
    pub fn of(points: &[Point<T>]) -> Self {
        let mut min = Point::new(T::infinity(), T::infinity());
        let mut max = Point::new(T::neg_infinity(), T::neg_infinity());
        for p in points {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Self { min, max }
    }

    pub fn intersects(&self, other: &Self) -> bool {
        self.min.x <= other.max.x
            && other.min.x <= self.max.x
            && self.min.y <= other.max.y
            && other.min.y <= self.max.y
    }

    pub fn contains(&self, p: &Point<T>) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn width(&self) -> T {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> T {
        self.max.y - self.min.y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Location {
    Inside,
    Boundary,
    Outside,
}

/// Shoelace area of a closed ring (first == last), signed by orientation.
pub(crate) fn ring_signed_area<T: Scalar>(ring: &[Point<T>]) -> T {
    let mut s = T::zero();
    for w in ring.windows(2) {
        s += w[0].x * w[1].y - w[1].x * w[0].y;
    }
    s * T::half()
}

fn on_segment<T: Scalar>(p: &Point<T>, a: &Point<T>, b: &Point<T>) -> bool {
    cross(a, b, p) == T::zero()
        && p.x >= a.x.min(b.x)
        && p.x <= a.x.max(b.x)
        && p.y >= a.y.min(b.y)
        && p.y <= a.y.max(b.y)
}

pub(crate) fn locate_in_ring<T: Scalar>(p: &Point<T>, ring: &[Point<T>]) -> Location {
    let mut inside = false;
    for w in ring.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if on_segment(p, a, b) {
            return Location::Boundary;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x_at = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_at {
                inside = !inside;
            }
        }
    }
    if inside {
        Location::Inside
    } else {
        Location::Outside
    }
}

fn segments_touch<T: Scalar>(p1: &Point<T>, p2: &Point<T>, q1: &Point<T>, q2: &Point<T>) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    let z = T::zero();
    if ((d1 > z && d2 < z) || (d1 < z && d2 > z)) && ((d3 > z && d4 < z) || (d3 < z && d4 > z)) {
        return true;
    }
    on_segment(p1, q1, q2) || on_segment(p2, q1, q2) || on_segment(q1, p1, p2) || on_segment(q2, p1, p2)
}

fn close_ring<T: Scalar>(mut ring: Vec<Point<T>>) -> Vec<Point<T>> {
    if let (Some(first), Some(last)) = (ring.first().copied(), ring.last().copied()) {
        if first != last {
            ring.push(first);
        }
    }
    ring
}

fn check_ring<T: Scalar>(ring: &[Point<T>], what: &str) -> Result<(), GeoError> {
    if ring.iter().any(|p| !p.is_finite()) {
        return Err(GeoError::InvalidGeometry(format!("{what} has non-finite coordinates")));
    }
    if ring.len() < 4 {
        return Err(GeoError::InvalidGeometry(format!("{what} has fewer than 3 vertices")));
    }
    let edges = ring.len() - 1;
    for i in 0..edges {
        for j in (i + 1)..edges {
            let adjacent = j == i + 1 || (i == 0 && j == edges - 1);
            if adjacent {
                continue;
            }
            if segments_touch(&ring[i], &ring[i + 1], &ring[j], &ring[j + 1]) {
                return Err(GeoError::InvalidGeometry(format!(
                    "{what} self-intersects between edges {i} and {j}"
                )));
            }
        }
    }
    Ok(())
}

/// Simple polygon with optional holes. Rings are stored closed.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon<T> {
    exterior: Vec<Point<T>>,
    holes: Vec<Vec<Point<T>>>,
    bbox: BBox<T>,
}

impl<T: Scalar> Polygon<T> {
    /// Validates ring closure, simplicity, positive area and hole containment.
    /// Open rings are closed automatically.
    pub fn new(exterior: Vec<Point<T>>, holes: Vec<Vec<Point<T>>>) -> Result<Self, GeoError> {
        let poly = Self::new_unchecked(exterior, holes);
        check_ring(&poly.exterior, "exterior ring")?;
        for (k, h) in poly.holes.iter().enumerate() {
            check_ring(h, &format!("hole {k}"))?;
            if h[..h.len() - 1]
                .iter()
                .any(|p| locate_in_ring(p, &poly.exterior) != Location::Inside)
            {
                return Err(GeoError::InvalidGeometry(format!("hole {k} is not strictly inside the exterior")));
            }
        }
        if !(poly.area() > T::zero()) {
            return Err(GeoError::DegeneratePolygon);
        }
        Ok(poly)
    }

    /// Builds without validation. Used for degenerate census slivers and for
    /// clipped cells whose area is exact even when the ring touches itself.
    pub fn new_unchecked(exterior: Vec<Point<T>>, holes: Vec<Vec<Point<T>>>) -> Self {
        let exterior = close_ring(exterior);
        let holes: Vec<_> = holes.into_iter().map(close_ring).collect();
        let bbox = BBox::of(&exterior);
        Self { exterior, holes, bbox }
    }

    pub fn rectangle(min: Point<T>, max: Point<T>) -> Result<Self, GeoError> {
        Self::new(
            vec![min, Point::new(max.x, min.y), max, Point::new(min.x, max.y)],
            vec![],
        )
    }

    pub fn exterior(&self) -> &[Point<T>] {
        &self.exterior
    }

    pub fn holes(&self) -> &[Vec<Point<T>>] {
        &self.holes
    }

    pub fn bbox(&self) -> &BBox<T> {
        &self.bbox
    }

    pub fn area(&self) -> T {
        let holes: T = self.holes.iter().map(|h| ring_signed_area(h).abs()).sum();
        ring_signed_area(&self.exterior).abs() - holes
    }

    pub(crate) fn locate(&self, p: &Point<T>) -> Location {
        if !self.bbox.contains(p) {
            return Location::Outside;
        }
        match locate_in_ring(p, &self.exterior) {
            Location::Outside => Location::Outside,
            Location::Boundary => Location::Boundary,
            Location::Inside => {
                for h in &self.holes {
                    match locate_in_ring(p, h) {
                        Location::Inside => return Location::Outside,
                        Location::Boundary => return Location::Boundary,
                        Location::Outside => {}
                    }
                }
                Location::Inside
            }
        }
    }

    /// Point in the closed polygon (boundary counts as inside).
    pub fn contains(&self, p: &Point<T>) -> bool {
        self.locate(p) != Location::Outside
    }

    /// Point in the open interior.
    pub fn contains_strictly(&self, p: &Point<T>) -> bool {
        self.locate(p) == Location::Inside
    }

    /// Area centroid; the vertex mean when the area vanishes.
    pub fn centroid(&self) -> Point<T> {
        let mut a = T::zero();
        let mut cx = T::zero();
        let mut cy = T::zero();
        let mut add_ring = |ring: &[Point<T>], sign: T| {
            let orient = if ring_signed_area(ring) < T::zero() { -T::one() } else { T::one() };
            for w in ring.windows(2) {
                let f = (w[0].x * w[1].y - w[1].x * w[0].y) * orient * sign;
                a += f;
                cx += (w[0].x + w[1].x) * f;
                cy += (w[0].y + w[1].y) * f;
            }
        };
        add_ring(&self.exterior, T::one());
        for h in &self.holes {
            add_ring(h, -T::one());
        }
        let scale = T::max(self.bbox.width(), self.bbox.height()).pow2();
        if a.abs() <= T::epsilon() * scale * T::of(16.0) {
            let pts = &self.exterior[..self.exterior.len().saturating_sub(1).max(1)];
            let n = T::of_usize(pts.len());
            return Point::new(
                pts.iter().map(|p| p.x).sum::<T>() / n,
                pts.iter().map(|p| p.y).sum::<T>() / n,
            );
        }
        let six_a = T::of(3.0) * a;
        Point::new(cx / six_a, cy / six_a)
    }

    pub(crate) fn is_convex(&self) -> bool {
        if !self.holes.is_empty() {
            return false;
        }
        let ring = &self.exterior;
        let n = ring.len() - 1;
        let mut sign = T::zero();
        for i in 0..n {
            let c = cross(&ring[i], &ring[(i + 1) % n], &ring[(i + 2) % n]);
            if c != T::zero() {
                if sign == T::zero() {
                    sign = c.signum();
                } else if c.signum() != sign {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point<f64> {
        Point::new(x, y)
    }

    #[test]
    fn rings_are_closed_on_construction() {
        let poly = Polygon::new(vec![p(0., 0.), p(1., 0.), p(1., 1.)], vec![]).unwrap();
        assert_eq!(poly.exterior().first(), poly.exterior().last());
        assert!((poly.area() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bowtie_is_rejected() {
        let err = Polygon::new(vec![p(0., 0.), p(1., 1.), p(1., 0.), p(0., 1.)], vec![]).unwrap_err();
        assert!(matches!(err, GeoError::InvalidGeometry(_)));
    }

    #[test]
    fn zero_area_ring_is_degenerate() {
        let err = Polygon::new(vec![p(0., 0.), p(1., 0.), p(2., 0.)], vec![]).unwrap_err();
        assert!(matches!(err, GeoError::InvalidGeometry(_) | GeoError::DegeneratePolygon));
    }

    #[test]
    fn hole_reduces_area_and_excludes_points() {
        let poly = Polygon::new(
            vec![p(0., 0.), p(4., 0.), p(4., 4.), p(0., 4.)],
            vec![vec![p(1., 1.), p(1., 2.), p(2., 2.), p(2., 1.)]],
        )
        .unwrap();
        assert_eq!(poly.area(), 15.0);
        assert!(!poly.contains(&p(1.5, 1.5)));
        assert!(poly.contains(&p(1.0, 1.5)));
        assert!(!poly.contains_strictly(&p(1.0, 1.5)));
        assert!(poly.contains_strictly(&p(3.0, 3.0)));
    }

    #[test]
    fn hole_outside_exterior_is_rejected() {
        let err = Polygon::new(
            vec![p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)],
            vec![vec![p(2., 2.), p(2., 3.), p(3., 3.)]],
        )
        .unwrap_err();
        assert!(matches!(err, GeoError::InvalidGeometry(_)));
    }

    #[test]
    fn centroid_of_l_shape() {
        let poly = Polygon::new(
            vec![p(0., 0.), p(2., 0.), p(2., 1.), p(1., 1.), p(1., 2.), p(0., 2.)],
            vec![],
        )
        .unwrap();
        let c = poly.centroid();
        assert!((c.x - 5.0 / 6.0).abs() < 1e-12 && (c.y - 5.0 / 6.0).abs() < 1e-12);
        assert!(!poly.is_convex());
    }

    #[test]
    fn degenerate_centroid_falls_back_to_vertex_mean() {
        let poly = Polygon::new_unchecked(vec![p(0., 0.), p(2., 0.), p(4., 0.)], vec![]);
        assert_eq!(poly.centroid(), p(2.0, 0.0));
    }
}
