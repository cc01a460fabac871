//! Planar geometry primitives: points, 2x2 matrices, oriented polygons
//! and the segment predicates the rest of the crate is built on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ZERO: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product, treating points as vectors.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn scale(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }

    pub fn normalized(self) -> Point {
        let n = self.norm();
        Point::new(self.x / n, self.y / n)
    }

    pub fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Row-major 2x2 real matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn det(self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(self) -> f64 {
        self.a + self.d
    }

    pub fn apply(self, p: Point) -> Point {
        Point::new(self.a * p.x + self.b * p.y, self.c * p.x + self.d * p.y)
    }

    pub fn mul(self, m: Mat2) -> Mat2 {
        Mat2::new(
            self.a * m.a + self.b * m.c,
            self.a * m.b + self.b * m.d,
            self.c * m.a + self.d * m.c,
            self.c * m.b + self.d * m.d,
        )
    }

    pub fn inverse(self) -> Option<Mat2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Mat2::new(self.d / det, -self.b / det, -self.c / det, self.a / det))
    }

    /// Solve `self * v = rhs`.
    pub fn solve(self, rhs: Point) -> Option<Point> {
        self.inverse().map(|inv| inv.apply(rhs))
    }

    /// Eigenvalues as complex pairs `(re, im)`, sorted by descending
    /// modulus, then descending real part.
    pub fn eigenvalues(self) -> [(f64, f64); 2] {
        let half_tr = 0.5 * self.trace();
        let disc = half_tr * half_tr - self.det();
        let mut eigs = if disc >= 0.0 {
            let s = disc.sqrt();
            [(half_tr + s, 0.0), (half_tr - s, 0.0)]
        } else {
            let s = (-disc).sqrt();
            [(half_tr, s), (half_tr, -s)]
        };
        eigs.sort_by(|p, q| {
            let mp = p.0.hypot(p.1);
            let mq = q.0.hypot(q.1);
            mq.partial_cmp(&mp)
                .unwrap()
                .then(q.0.partial_cmp(&p.0).unwrap())
        });
        eigs
    }

    /// Unit eigenvector for a real eigenvalue.
    pub fn eigenvector(self, lambda: f64) -> Option<Point> {
        // rows of (A - lambda I): pick the better-conditioned one.
        let r1 = Point::new(self.a - lambda, self.b);
        let r2 = Point::new(self.c, self.d - lambda);
        let v1 = Point::new(-r1.y, r1.x);
        let v2 = Point::new(-r2.y, r2.x);
        let v = if r1.norm() >= r2.norm() { v1 } else { v2 };
        if v.norm() < 1e-300 {
            return None;
        }
        Some(v.normalized())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Counterclockwise,
    Clockwise,
}

/// Closed simple polygon with a declared orientation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrientedPolygon {
    pub vertices: Vec<Point>,
    pub orientation: Orientation,
}

impl OrientedPolygon {
    /// Builds a polygon, checking vertex count and that the signed area
    /// sign matches the declared orientation. Simplicity is checked
    /// separately (`is_simple`) because callers on refined manifold data
    /// sometimes tolerate grazing contacts.
    pub fn new(vertices: Vec<Point>, orientation: Orientation) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::DegenerateLoop(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        let poly = OrientedPolygon { vertices, orientation };
        let area = poly.signed_area();
        let ok = match orientation {
            Orientation::Counterclockwise => area > 0.0,
            Orientation::Clockwise => area < 0.0,
        };
        if !ok {
            return Err(Error::DegenerateLoop(format!(
                "signed area {area:e} does not match declared orientation"
            )));
        }
        Ok(poly)
    }

    /// Builds a counterclockwise polygon, reversing the input if needed.
    pub fn ccw(mut vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::DegenerateLoop(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        let area = signed_area(&vertices);
        if area == 0.0 {
            return Err(Error::DegenerateLoop("zero-area polygon".into()));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        OrientedPolygon::new(vertices, Orientation::Counterclockwise)
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge(&self, i: usize) -> (Point, Point) {
        let n = self.vertices.len();
        (self.vertices[i % n], self.vertices[(i + 1) % n])
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }

    /// No intersections among non-adjacent edges, within `tol`.
    pub fn is_simple(&self, tol: f64) -> bool {
        let n = self.vertices.len();
        let grid = SegmentGrid::build(
            (0..n).map(|i| self.edge(i)),
        );
        for i in 0..n {
            let (a, b) = self.edge(i);
            for j in grid.candidates(a, b) {
                if j <= i {
                    continue;
                }
                // adjacent edges share a vertex
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (c, d) = self.edge(j);
                if segment_distance(a, b, c, d) < tol {
                    return false;
                }
            }
        }
        true
    }

    /// Crossing-number classification with a boundary band of width `band`.
    pub fn locate(&self, p: Point, band: f64) -> PointLocation {
        let n = self.vertices.len();
        for i in 0..n {
            let (a, b) = self.edge(i);
            if point_segment_distance(p, a, b) <= band {
                return PointLocation::Boundary;
            }
        }
        if self.winding_contains(p) {
            PointLocation::Inside
        } else {
            PointLocation::Outside
        }
    }

    /// Nonzero-winding containment test, robust for our near-simple
    /// refined polygons.
    fn winding_contains(&self, p: Point) -> bool {
        let mut winding: i64 = 0;
        let n = self.vertices.len();
        for i in 0..n {
            let (a, b) = self.edge(i);
            if a.y <= p.y {
                if b.y > p.y && (b - a).cross(p - a) > 0.0 {
                    winding += 1;
                }
            } else if b.y <= p.y && (b - a).cross(p - a) < 0.0 {
                winding -= 1;
            }
        }
        winding != 0
    }

    pub fn reversed(&self) -> OrientedPolygon {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        OrientedPolygon {
            vertices,
            orientation: match self.orientation {
                Orientation::Counterclockwise => Orientation::Clockwise,
                Orientation::Clockwise => Orientation::Counterclockwise,
            },
        }
    }

    /// Inward offset by `delta` using miter joins at angle bisectors.
    /// Returns an error when the offset curve self-intersects or collapses.
    pub fn eroded(&self, delta: f64) -> Result<OrientedPolygon> {
        let ccw = match self.orientation {
            Orientation::Counterclockwise => self.clone(),
            Orientation::Clockwise => self.reversed(),
        };
        let n = ccw.vertices.len();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let prev = ccw.vertices[(i + n - 1) % n];
            let cur = ccw.vertices[i];
            let next = ccw.vertices[(i + 1) % n];
            let d0 = (cur - prev).normalized();
            let d1 = (next - cur).normalized();
            // inward (left) normals of a ccw boundary
            let n0 = Point::new(-d0.y, d0.x);
            let n1 = Point::new(-d1.y, d1.x);
            let bis = n0 + n1;
            let bn = bis.norm();
            let offset = if bn < 1e-12 {
                // reversal spike: fall back to a single edge normal
                n1.scale(delta)
            } else {
                let bis = bis.scale(1.0 / bn);
                // miter length, clamped to keep spikes bounded
                let cos_half = bis.dot(n1).max(0.1);
                bis.scale(delta / cos_half)
            };
            out.push(cur + offset);
        }
        let poly = OrientedPolygon::ccw(out)?;
        if !poly.is_simple(0.0) {
            return Err(Error::DegenerateLoop(format!(
                "eroded polygon (offset {delta:e}) self-intersects"
            )));
        }
        Ok(poly)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointLocation {
    Inside,
    Outside,
    Boundary,
}

pub fn signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        acc += a.cross(b);
    }
    0.5 * acc
}

/// Proper intersection of segments ab and cd. Returns interpolation
/// parameters (s on ab, t on cd) and the point, or None when parallel
/// or meeting outside the closed segments.
pub fn segment_intersection(a: Point, b: Point, c: Point, d: Point) -> Option<(f64, f64, Point)> {
    let r = b - a;
    let s = d - c;
    let denom = r.cross(s);
    if denom == 0.0 {
        return None;
    }
    let qp = c - a;
    let t = qp.cross(s) / denom;
    let u = qp.cross(r) / denom;
    if !(0.0..=1.0).contains(&t) || !(0.0..=1.0).contains(&u) {
        return None;
    }
    Some((t, u, a.lerp(b, t)))
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.dist(a.lerp(b, t))
}

/// Minimal distance between two segments.
pub fn segment_distance(a: Point, b: Point, c: Point, d: Point) -> f64 {
    if segment_intersection(a, b, c, d).is_some() {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// Uniform-grid bucket index over segments, for pruning pairwise
/// intersection tests on long polylines.
pub struct SegmentGrid {
    lo: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl SegmentGrid {
    pub fn build<I: IntoIterator<Item = (Point, Point)>>(segments: I) -> Self {
        let segs: Vec<(Point, Point)> = segments.into_iter().collect();
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut total_len = 0.0;
        for (a, b) in &segs {
            lo.x = lo.x.min(a.x.min(b.x));
            lo.y = lo.y.min(a.y.min(b.y));
            hi.x = hi.x.max(a.x.max(b.x));
            hi.y = hi.y.max(a.y.max(b.y));
            total_len += a.dist(*b);
        }
        let count = segs.len().max(1);
        let avg = (total_len / count as f64).max(1e-12);
        let span = ((hi.x - lo.x).max(hi.y - lo.y)).max(1e-12);
        let cell = avg.max(span / 512.0);
        let nx = (((hi.x - lo.x) / cell).ceil() as usize + 1).min(1024).max(1);
        let ny = (((hi.y - lo.y) / cell).ceil() as usize + 1).min(1024).max(1);
        let mut grid = SegmentGrid { lo, cell, nx, ny, buckets: vec![Vec::new(); nx * ny] };
        for (i, (a, b)) in segs.iter().enumerate() {
            for idx in grid.cover(*a, *b) {
                grid.buckets[idx].push(i);
            }
        }
        grid
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let ix = (((p.x - self.lo.x) / self.cell).floor() as isize).clamp(0, self.nx as isize - 1);
        let iy = (((p.y - self.lo.y) / self.cell).floor() as isize).clamp(0, self.ny as isize - 1);
        (ix as usize, iy as usize)
    }

    fn cover(&self, a: Point, b: Point) -> Vec<usize> {
        let (x0, y0) = self.cell_of(Point::new(a.x.min(b.x), a.y.min(b.y)));
        let (x1, y1) = self.cell_of(Point::new(a.x.max(b.x), a.y.max(b.y)));
        let mut out = Vec::new();
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                out.push(iy * self.nx + ix);
            }
        }
        out
    }

    /// Candidate segment indices whose grid cells overlap segment ab.
    pub fn candidates(&self, a: Point, b: Point) -> Vec<usize> {
        let mut out = Vec::new();
        for idx in self.cover(a, b) {
            out.extend_from_slice(&self.buckets[idx]);
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signed_area_square() {
        let sq = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        assert_eq!(signed_area(&sq), 1.0);
        let mut cw = sq.clone();
        cw.reverse();
        assert_eq!(signed_area(&cw), -1.0);
    }

    #[test]
    fn eigen_real_and_complex() {
        let m = Mat2::new(2.0, 0.0, 0.0, 0.5);
        let e = m.eigenvalues();
        assert_eq!(e, [(2.0, 0.0), (0.5, 0.0)]);
        let rot = Mat2::new(0.0, -1.0, 1.0, 0.0);
        let e = rot.eigenvalues();
        assert!((e[0].0).abs() < 1e-15 && (e[0].1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigenvector_of_shear_saddle() {
        let m = Mat2::new(2.0, 1.0, 0.0, 0.5);
        let v = m.eigenvector(2.0).unwrap();
        let mv = m.apply(v);
        assert!((mv - v.scale(2.0)).norm() < 1e-12);
    }

    #[test]
    fn locate_in_square() {
        let sq = OrientedPolygon::ccw(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap();
        assert_eq!(sq.locate(Point::new(0.5, 0.5), 1e-9), PointLocation::Inside);
        assert_eq!(sq.locate(Point::new(1.5, 0.5), 1e-9), PointLocation::Outside);
        assert_eq!(sq.locate(Point::new(1.0, 0.5), 1e-9), PointLocation::Boundary);
    }

    #[test]
    fn segment_intersection_basic() {
        let (t, u, p) = segment_intersection(
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 0.0),
        )
        .unwrap();
        assert!((t - 0.5).abs() < 1e-15 && (u - 0.5).abs() < 1e-15);
        assert!(p.dist(Point::new(0.5, 0.5)) < 1e-15);
        assert!(segment_intersection(
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 1.0),
        )
        .is_none());
    }

    #[test]
    fn simplicity_detects_bowtie() {
        let bow = OrientedPolygon {
            vertices: vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 1.0),
                Point::new(1.0, 0.0),
                Point::new(0.0, 1.0),
            ],
            orientation: Orientation::Counterclockwise,
        };
        assert!(!bow.is_simple(1e-12));
    }

    #[test]
    fn erosion_of_square() {
        let sq = OrientedPolygon::ccw(vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 2.0),
            Point::new(0.0, 2.0),
        ])
        .unwrap();
        let small = sq.eroded(0.5).unwrap();
        assert!((small.area() - 1.0).abs() < 1e-12);
    }
}
