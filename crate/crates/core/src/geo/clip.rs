//! Polygon overlap areas.
//!
//! Every overlap is reduced to "ring clipped by a convex polygon": the second
//! operand is split into signed convex pieces (itself when convex, otherwise
//! ear-clipped triangles of the exterior minus triangles of the holes), and the
//! first operand's rings are Sutherland-Hodgman clipped against each piece.
//! Sutherland-Hodgman may emit zero-width bridges for non-convex subjects, but
//! the shoelace area of its output is exact, which is all that is needed here.

use super::polygon::{ring_signed_area, BBox, Polygon};
use super::{cross, GeoError, Point};
use crate::scalar::Scalar;

/// Convex counter-clockwise ring with a sign: `+1` adds area, `-1` removes it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPiece<T> {
    pub sign: T,
    pub ring: Vec<Point<T>>,
    pub bbox: BBox<T>,
}

impl<T: Scalar> ConvexPiece<T> {
    pub(crate) fn new(sign: T, ring: Vec<Point<T>>) -> Self {
        let ring = ccw(ring);
        let bbox = BBox::of(&ring);
        Self { sign, ring, bbox }
    }

    pub fn area(&self) -> T {
        ring_signed_area(&self.ring).abs()
    }
}

fn ccw<T: Scalar>(mut ring: Vec<Point<T>>) -> Vec<Point<T>> {
    if ring_signed_area(&ring) < T::zero() {
        ring.reverse();
    }
    ring
}

fn intersect_line<T: Scalar>(s: &Point<T>, e: &Point<T>, a: &Point<T>, b: &Point<T>) -> Point<T> {
    let d1 = cross(a, b, s);
    let d2 = cross(a, b, e);
    let t = d1 / (d1 - d2);
    Point::new(s.x + (e.x - s.x) * t, s.y + (e.y - s.y) * t)
}

/// Clips a closed ring against the left side of each edge of a closed
/// counter-clockwise convex ring. Returns a closed ring, or empty.
pub(crate) fn clip_ring<T: Scalar>(subject: &[Point<T>], clipper: &[Point<T>]) -> Vec<Point<T>> {
    let mut output: Vec<Point<T>> = subject[..subject.len().saturating_sub(1)].to_vec();
    for edge in clipper.windows(2) {
        if output.is_empty() {
            break;
        }
        let (a, b) = (&edge[0], &edge[1]);
        let input = std::mem::take(&mut output);
        let mut prev = *input.last().unwrap();
        let mut prev_in = cross(a, b, &prev) >= T::zero();
        for cur in input {
            let cur_in = cross(a, b, &cur) >= T::zero();
            if cur_in {
                if !prev_in {
                    output.push(intersect_line(&prev, &cur, a, b));
                }
                output.push(cur);
            } else if prev_in {
                output.push(intersect_line(&prev, &cur, a, b));
            }
            prev = cur;
            prev_in = cur_in;
        }
    }
    if output.len() < 3 {
        return Vec::new();
    }
    output.push(output[0]);
    output
}

/// Keeps the part of a convex ring where `normal · p <= offset`.
pub(crate) fn clip_half_plane<T: Scalar>(ring: &[Point<T>], normal: Point<T>, offset: T) -> Vec<Point<T>> {
    let side = |p: &Point<T>| offset - (normal.x * p.x + normal.y * p.y);
    let mut out = Vec::with_capacity(ring.len() + 1);
    for w in ring.windows(2) {
        let (s, e) = (&w[0], &w[1]);
        let (ds, de) = (side(s), side(e));
        if ds >= T::zero() {
            out.push(*s);
        }
        if (ds >= T::zero()) != (de >= T::zero()) {
            let t = ds / (ds - de);
            out.push(Point::new(s.x + (e.x - s.x) * t, s.y + (e.y - s.y) * t));
        }
    }
    if out.len() < 3 {
        return Vec::new();
    }
    out.push(out[0]);
    out
}

fn point_in_triangle<T: Scalar>(p: &Point<T>, a: &Point<T>, b: &Point<T>, c: &Point<T>) -> bool {
    cross(a, b, p) >= T::zero() && cross(b, c, p) >= T::zero() && cross(c, a, p) >= T::zero()
}

/// Ear-clipping triangulation of a simple closed ring.
pub(crate) fn triangulate<T: Scalar>(ring: &[Point<T>]) -> Result<Vec<[Point<T>; 3]>, GeoError> {
    let ring = ccw(ring.to_vec());
    let mut verts: Vec<Point<T>> = ring[..ring.len() - 1].to_vec();
    let mut tris = Vec::with_capacity(verts.len().saturating_sub(2));
    let mut guard = 0usize;
    while verts.len() > 3 {
        let n = verts.len();
        let mut clipped = false;
        for i in 0..n {
            let (a, b, c) = (verts[(i + n - 1) % n], verts[i], verts[(i + 1) % n]);
            if cross(&a, &b, &c) <= T::zero() {
                continue;
            }
            let blocked = verts.iter().enumerate().any(|(k, p)| {
                k != i
                    && k != (i + n - 1) % n
                    && k != (i + 1) % n
                    && *p != a
                    && *p != b
                    && *p != c
                    && point_in_triangle(p, &a, &b, &c)
            });
            if !blocked {
                tris.push([a, b, c]);
                verts.remove(i);
                clipped = true;
                break;
            }
        }
        if !clipped {
            // Only collinear or reflex corners remain: drop a flat vertex, it carries no area.
            let flat = (0..n).find(|&i| {
                cross(&verts[(i + n - 1) % n], &verts[i], &verts[(i + 1) % n]) == T::zero()
            });
            match flat {
                Some(i) => {
                    verts.remove(i);
                }
                None => {
                    return Err(GeoError::InvalidGeometry(
                        "ring cannot be triangulated (self-intersecting?)".into(),
                    ))
                }
            }
        }
        guard += 1;
        if guard > ring.len() * ring.len() + 8 {
            return Err(GeoError::InvalidGeometry("triangulation did not terminate".into()));
        }
    }
    if verts.len() == 3 && cross(&verts[0], &verts[1], &verts[2]) > T::zero() {
        tris.push([verts[0], verts[1], verts[2]]);
    }
    Ok(tris)
}

/// Splits a polygon into signed convex pieces whose signed areas sum to its area.
pub fn convex_pieces<T: Scalar>(poly: &Polygon<T>) -> Result<Vec<ConvexPiece<T>>, GeoError> {
    if poly.is_convex() {
        return Ok(vec![ConvexPiece::new(T::one(), poly.exterior().to_vec())]);
    }
    let mut pieces = Vec::new();
    for t in triangulate(poly.exterior())? {
        pieces.push(ConvexPiece::new(T::one(), vec![t[0], t[1], t[2], t[0]]));
    }
    for h in poly.holes() {
        for t in triangulate(h)? {
            pieces.push(ConvexPiece::new(-T::one(), vec![t[0], t[1], t[2], t[0]]));
        }
    }
    Ok(pieces)
}

/// Area of `poly ∩ piece`, unsigned.
pub(crate) fn area_in_piece<T: Scalar>(poly: &Polygon<T>, piece: &ConvexPiece<T>) -> T {
    if !poly.bbox().intersects(&piece.bbox) {
        return T::zero();
    }
    let mut a = ring_signed_area(&clip_ring(poly.exterior(), &piece.ring)).abs();
    for h in poly.holes() {
        a -= ring_signed_area(&clip_ring(h, &piece.ring)).abs();
    }
    a.max(T::zero())
}

/// Area of the overlap of two polygons, in squared map units.
pub fn intersection_area<T: Scalar>(a: &Polygon<T>, b: &Polygon<T>) -> Result<T, GeoError> {
    if !a.bbox().intersects(b.bbox()) {
        return Ok(T::zero());
    }
    let pieces = convex_pieces(b)?;
    let total: T = pieces.iter().map(|p| p.sign * area_in_piece(a, p)).sum();
    Ok(total.max(T::zero()).min(a.area().min(b.area())))
}
