//! Homoclinic points, loops, and cells.
//!
//! A homoclinic point p' is a point other than the saddle p where the
//! stable and unstable branches meet. The loop through p' is the closed
//! curve made of the unstable arc p -> p' and the stable arc p' -> p;
//! when the two arcs share only their endpoints the loop is simple and
//! bounds an open 2-cell V. Near p the cell occupies either exactly the
//! open quadrant between the two departing branches (positive, rho = 1)
//! or its complement (negative, rho = 2).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{
    segment_intersection, Mat2, OrientedPolygon, Point, PointLocation, SegmentGrid,
};
use crate::manifolds::{BranchKind, ManifoldBranch};

/// Default mask radius around the saddle when listing intersections.
pub const DEFAULT_EXCLUSION_RADIUS: f64 = 1e-3;

/// Crossings with |sin(angle)| below this are reported as tangential.
const TANGENCY_SIN: f64 = 1e-6;

/// Vertex-to-other-branch distance below which the two curves are
/// treated as coincident (overlapping separatrix).
const OVERLAP_DIST: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingSign {
    Positive,
    Negative,
    Tangential,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HomoclinicPoint {
    pub location: Point,
    /// Parameter along the unstable branch.
    pub t_u: f64,
    /// Parameter along the stable branch.
    pub t_s: f64,
    pub crossing_sign: CrossingSign,
    pub transversal: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HomoclinicLoop {
    /// The saddle.
    pub p: Point,
    pub p_prime: Point,
    /// Unstable arc from p to p', endpoints included.
    pub j_u: Vec<Point>,
    /// Stable arc from p' back to p, endpoints included.
    pub j_s: Vec<Point>,
    pub simple: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellSign {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Serialize)]
pub struct HomoclinicCell {
    #[serde(rename = "loop")]
    pub hloop: HomoclinicLoop,
    #[serde(skip)]
    pub polygon: OrientedPolygon,
    pub sign: CellSign,
    pub rho: i64,
    /// The closure D is V together with the loop itself.
    pub closure_is_d: bool,
}

/// All stable/unstable intersections outside the exclusion disk around
/// the saddle, sorted by unstable parameter. Coincident curves (the two
/// branches overlap as sets, e.g. a separatrix) are reported as a single
/// tangential point at maximal distance from the saddle.
pub fn find_homoclinic_points(
    wu: &ManifoldBranch,
    ws: &ManifoldBranch,
    exclusion_radius: f64,
) -> Result<Vec<HomoclinicPoint>> {
    if wu.kind != BranchKind::Unstable || ws.kind != BranchKind::Stable {
        return Err(Error::Config(format!(
            "expected an unstable and a stable branch, got {:?} and {:?}",
            wu.kind, ws.kind
        )));
    }
    if wu.saddle.dist(ws.saddle) > 1e-8 {
        return Err(Error::Config("branches are rooted at different saddles".into()));
    }
    if branches_coincide(wu, ws, exclusion_radius) {
        return Ok(vec![overlap_point(wu, ws)?]);
    }

    let saddle = wu.saddle;
    let wu_segments: Vec<(Point, Point)> =
        wu.polyline.windows(2).map(|w| (w[0], w[1])).collect();
    let grid = SegmentGrid::build(wu_segments.iter().copied());
    let mut found: Vec<HomoclinicPoint> = Vec::new();
    for j in 0..ws.polyline.len().saturating_sub(1) {
        let (c, d) = (ws.polyline[j], ws.polyline[j + 1]);
        for i in grid.candidates(c, d) {
            let (a, b) = wu_segments[i];
            let Some((t, u, x)) = segment_intersection(a, b, c, d) else { continue };
            if x.dist(saddle) < exclusion_radius {
                continue;
            }
            let du = b - a;
            let dsv = d - c;
            let denom = du.norm() * dsv.norm();
            let sin = if denom == 0.0 { 0.0 } else { (du.cross(dsv) / denom).abs() };
            let (location, t_s) = if sin < TANGENCY_SIN {
                (x, ws.params[j] + u * (ws.params[j + 1] - ws.params[j]))
            } else {
                polish_crossing(ws, j, a, du, u)
            };
            let t_u = wu.params[i] + t * (wu.params[i + 1] - wu.params[i]);
            let crossing_sign = if sin < TANGENCY_SIN {
                CrossingSign::Tangential
            } else if du.cross(dsv) > 0.0 {
                CrossingSign::Positive
            } else {
                CrossingSign::Negative
            };
            if found.iter().any(|h| h.location.dist(location) < 1e-9) {
                continue;
            }
            found.push(HomoclinicPoint {
                location,
                t_u,
                t_s,
                crossing_sign,
                transversal: crossing_sign != CrossingSign::Tangential,
            });
        }
    }
    found.sort_by(|a, b| a.t_u.partial_cmp(&b.t_u).unwrap());
    Ok(found)
}

/// True when a macroscopic share of one branch lies on top of the other.
fn branches_coincide(wu: &ManifoldBranch, ws: &ManifoldBranch, exclusion_radius: f64) -> bool {
    let saddle = wu.saddle;
    let step = (wu.polyline.len() / 200).max(1);
    let mut sampled = 0usize;
    let mut close = 0usize;
    for p in wu.polyline.iter().step_by(step) {
        if p.dist(saddle) < 10.0 * exclusion_radius {
            continue;
        }
        sampled += 1;
        if let Some((_, d)) = ws.project(*p) {
            if d < OVERLAP_DIST {
                close += 1;
            }
        }
    }
    sampled >= 20 && close * 10 >= sampled * 8
}

/// Overlap rule for coincident curves: p' is the point of the shared
/// lobe farthest from the saddle, refined by a parabolic fit of the
/// squared distance over the neighboring vertices.
fn overlap_point(wu: &ManifoldBranch, ws: &ManifoldBranch) -> Result<HomoclinicPoint> {
    let saddle = wu.saddle;
    let (best, _) = wu
        .polyline
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.dist(saddle).partial_cmp(&b.dist(saddle)).unwrap())
        .ok_or_else(|| Error::NoHomoclinicPoint("empty unstable branch".into()))?;
    let t_u = if best == 0 || best + 1 >= wu.polyline.len() {
        wu.params[best]
    } else {
        let (t0, t1, t2) = (wu.params[best - 1], wu.params[best], wu.params[best + 1]);
        let d = |i: usize| wu.polyline[i].dist(saddle).powi(2);
        let (d0, d1, d2) = (d(best - 1), d(best), d(best + 1));
        // vertex of the parabola through the three samples
        let denom = (t1 - t0) * (d1 - d2) - (t1 - t2) * (d1 - d0);
        if denom.abs() < 1e-300 {
            t1
        } else {
            let num = (t1 - t0).powi(2) * (d1 - d2) - (t1 - t2).powi(2) * (d1 - d0);
            t1 - 0.5 * num / denom
        }
    };
    let location = wu.zeta(t_u)?;
    let (t_s, dist) = ws
        .project(location)
        .ok_or_else(|| Error::NoHomoclinicPoint("empty stable branch".into()))?;
    if dist > OVERLAP_DIST {
        return Err(Error::NoHomoclinicPoint(format!(
            "overlap apex {location:?} is {dist:e} away from the stable branch"
        )));
    }
    Ok(HomoclinicPoint {
        location,
        t_u,
        t_s,
        crossing_sign: CrossingSign::Tangential,
        transversal: false,
    })
}

/// Bisects the stable parameter on segment j of `ws` until the signed
/// cross-product against the unstable segment direction changes sign on
/// an interval narrower than 1e-10 in position.
fn polish_crossing(
    ws: &ManifoldBranch,
    j: usize,
    a: Point,
    du: Point,
    u0: f64,
) -> (Point, f64) {
    let (c, d) = (ws.polyline[j], ws.polyline[j + 1]);
    let g = |u: f64| du.cross(c.lerp(d, u) - a);
    let (mut lo, mut hi) = ((u0 - 1e-3).max(0.0), (u0 + 1e-3).min(1.0));
    if g(lo).signum() == g(hi).signum() {
        lo = 0.0;
        hi = 1.0;
    }
    let (mut glo, ghi) = (g(lo), g(hi));
    if glo.signum() == ghi.signum() {
        // fall back to the linear intersection parameter
        let t_s = ws.params[j] + u0 * (ws.params[j + 1] - ws.params[j]);
        return (c.lerp(d, u0), t_s);
    }
    let seg_len = c.dist(d).max(1e-300);
    while (hi - lo) * seg_len > 1e-10 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    let u = 0.5 * (lo + hi);
    let t_s = ws.params[j] + u * (ws.params[j + 1] - ws.params[j]);
    (c.lerp(d, u), t_s)
}

/// Extracts the loop through p' and shrinks it to a simple one: while
/// the two arcs cross away from their endpoints, the crossing with the
/// smallest unstable parameter replaces p'.
pub fn build_simple_loop(
    point: &HomoclinicPoint,
    wu: &ManifoldBranch,
    ws: &ManifoldBranch,
) -> Result<HomoclinicLoop> {
    let mut t_u = point.t_u;
    let mut t_s = point.t_s;
    let mut p_prime = point.location;
    for _ in 0..64 {
        let j_u = arc_until(wu, t_u, p_prime);
        let mut j_s = arc_until(ws, t_s, p_prime);
        j_s.reverse();
        match first_interior_crossing(&j_u, &j_s) {
            None => {
                let simple = loop_is_simple(&j_u, &j_s);
                return Ok(HomoclinicLoop { p: wu.saddle, p_prime, j_u, j_s, simple });
            }
            Some(x) => {
                let (tu_new, du) = wu
                    .project(x)
                    .ok_or_else(|| Error::DegenerateLoop("empty unstable arc".into()))?;
                let (ts_new, ds) = ws
                    .project(x)
                    .ok_or_else(|| Error::DegenerateLoop("empty stable arc".into()))?;
                if du > 1e-8 || ds > 1e-8 || tu_new >= t_u - 1e-12 {
                    return Err(Error::DegenerateLoop(format!(
                        "interior crossing {x:?} does not shrink the loop"
                    )));
                }
                t_u = tu_new;
                t_s = ts_new;
                p_prime = x;
            }
        }
    }
    Err(Error::DegenerateLoop("simple-loop extraction did not converge".into()))
}

/// Vertices of a branch from the saddle up to parameter t, ending at
/// the exact endpoint.
fn arc_until(branch: &ManifoldBranch, t: f64, endpoint: Point) -> Vec<Point> {
    let mut arc = vec![branch.saddle];
    for (i, &ti) in branch.params.iter().enumerate() {
        if ti >= t {
            break;
        }
        let v = branch.polyline[i];
        if v.dist(endpoint) > 1e-12 && v.dist(branch.saddle) > 1e-12 {
            arc.push(v);
        }
    }
    arc.push(endpoint);
    arc
}

/// First crossing of the two arcs away from the shared endpoints,
/// by ascending position along j_u.
fn first_interior_crossing(j_u: &[Point], j_s: &[Point]) -> Option<Point> {
    let p = j_u.first()?;
    let q = j_u.last()?;
    let grid = SegmentGrid::build(j_s.windows(2).map(|w| (w[0], w[1])));
    let s_segs: Vec<(Point, Point)> = j_s.windows(2).map(|w| (w[0], w[1])).collect();
    for i in 0..j_u.len().saturating_sub(1) {
        let (a, b) = (j_u[i], j_u[i + 1]);
        let mut hits: Vec<(f64, Point)> = Vec::new();
        for k in grid.candidates(a, b) {
            let (c, d) = s_segs[k];
            if let Some((t, _, x)) = segment_intersection(a, b, c, d) {
                if x.dist(*p) > 1e-9 && x.dist(*q) > 1e-9 {
                    hits.push((t, x));
                }
            }
        }
        if let Some((_, x)) =
            hits.into_iter().min_by(|(t0, _), (t1, _)| t0.partial_cmp(t1).unwrap())
        {
            return Some(x);
        }
    }
    None
}

fn loop_is_simple(j_u: &[Point], j_s: &[Point]) -> bool {
    first_interior_crossing(j_u, j_s).is_none()
}

/// Builds the bounded cell of a simple loop: counterclockwise polygon,
/// sign by quadrant probes in the saddle's eigenbasis, rho per the sign
/// table (positive -> 1, negative -> 2).
pub fn cell_from_loop(
    hloop: &HomoclinicLoop,
    wu: &ManifoldBranch,
    ws: &ManifoldBranch,
) -> Result<HomoclinicCell> {
    if !hloop.simple {
        return Err(Error::DegenerateLoop("loop is not simple".into()));
    }
    let mut vertices = hloop.j_u.clone();
    // j_s starts at p' (the last j_u vertex) and ends at p (the first)
    for v in &hloop.j_s[1..hloop.j_s.len() - 1] {
        vertices.push(*v);
    }
    let polygon = OrientedPolygon::ccw(dedup_consecutive(vertices))?;
    if polygon.signed_area() <= 1e-10 {
        return Err(Error::DegenerateLoop(format!(
            "cell area {:e} below threshold",
            polygon.signed_area()
        )));
    }
    let sign = classify_cell_sign(&polygon, hloop.p, wu.eigenvector, ws.eigenvector)?;
    let rho = match sign {
        CellSign::Positive => 1,
        CellSign::Negative => 2,
    };
    Ok(HomoclinicCell { hloop: hloop.clone(), polygon, sign, rho, closure_is_d: true })
}

fn dedup_consecutive(vertices: Vec<Point>) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(vertices.len());
    for v in vertices {
        if out.last().map_or(true, |last| last.dist(v) > 1e-13) {
            out.push(v);
        }
    }
    if out.len() > 1 && out[0].dist(*out.last().unwrap()) <= 1e-13 {
        out.pop();
    }
    out
}

/// Decides positive/negative by sampling circles of radius 1e-4, 1e-3,
/// 1e-2 around the saddle and recording which open quadrants of the
/// eigenbasis chart (unstable direction -> first axis, stable ->
/// second) contain interior points. All three radii must agree.
pub fn classify_cell_sign(
    polygon: &OrientedPolygon,
    saddle: Point,
    unstable_dir: Point,
    stable_dir: Point,
) -> Result<CellSign> {
    let chart = Mat2::new(unstable_dir.x, stable_dir.x, unstable_dir.y, stable_dir.y)
        .inverse()
        .ok_or_else(|| Error::AmbiguousSign("eigenvectors are collinear".into()))?;
    let mut verdicts = Vec::new();
    for r in [1e-4, 1e-3, 1e-2] {
        let mut occupied = [false; 4];
        for k in 0..720 {
            let th = 2.0 * std::f64::consts::PI * k as f64 / 720.0;
            let x = saddle + Point::new(r * th.cos(), r * th.sin());
            if polygon.locate(x, 1e-12) != PointLocation::Inside {
                continue;
            }
            let c = chart.apply(x - saddle);
            // skip near-axis samples: quadrant membership is not robust
            let margin = 0.02 * c.x.hypot(c.y);
            if c.x.abs() < margin || c.y.abs() < margin {
                continue;
            }
            let q = match (c.x > 0.0, c.y > 0.0) {
                (true, true) => 0,
                (false, true) => 1,
                (false, false) => 2,
                (true, false) => 3,
            };
            occupied[q] = true;
        }
        let verdict = match occupied {
            [true, false, false, false] => Some(CellSign::Positive),
            [false, true, true, true] => Some(CellSign::Negative),
            _ => None,
        };
        match verdict {
            Some(v) => verdicts.push(v),
            None => {
                return Err(Error::AmbiguousSign(format!(
                    "radius {r:e}: occupied quadrants {occupied:?}"
                )))
            }
        }
    }
    if verdicts.iter().all(|v| *v == verdicts[0]) {
        Ok(verdicts[0])
    } else {
        Err(Error::AmbiguousSign(format!("probe radii disagree: {verdicts:?}")))
    }
}

/// Crossing-number membership with a boundary band of 1e-9.
pub fn point_in_cell(cell: &HomoclinicCell, x: Point) -> PointLocation {
    cell.polygon.locate(x, 1e-9)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::fixed_points::find_periodic_points;
    use crate::manifolds::{grow_branch, seed_branch, BranchSide, GrowSettings};
    use crate::map_model::{builtin_map, SmoothPlanarMap};

    fn saddle_of(map: &SmoothPlanarMap, half: f64, grid: usize) -> crate::fixed_points::FixedPointRecord {
        let recs = find_periodic_points(
            map,
            1,
            (Point::new(-half, -half), Point::new(half, half)),
            grid,
        )
        .unwrap();
        recs.into_iter()
            .find(|r| {
                matches!(
                    r.classification,
                    crate::fixed_points::Classification::DirectSaddle
                        | crate::fixed_points::Classification::MixedSaddle
                )
            })
            .unwrap()
    }

    fn duffing_branches() -> (SmoothPlanarMap, ManifoldBranch, ManifoldBranch) {
        let m = builtin_map("duffing_time1", &BTreeMap::new()).unwrap();
        let saddle = saddle_of(&m, 0.5, 6);
        let settings = GrowSettings { h_max: 0.01, ..GrowSettings::default() };
        let wu = grow_branch(
            &m,
            seed_branch(&m, &saddle, BranchKind::Unstable, BranchSide::Plus, 1e-6).unwrap(),
            6.0,
            &settings,
        )
        .unwrap();
        let ws = grow_branch(
            &m,
            seed_branch(&m, &saddle, BranchKind::Stable, BranchSide::Plus, 1e-6).unwrap(),
            6.0,
            &settings,
        )
        .unwrap();
        (m, wu, ws)
    }

    #[test]
    fn linear_saddle_has_no_homoclinic_points() {
        let mut ps = BTreeMap::new();
        ps.insert("lambda".to_string(), 0.5);
        ps.insert("mu".to_string(), 2.0);
        let m = builtin_map("linear_saddle", &ps).unwrap();
        let saddle = saddle_of(&m, 1.0, 4);
        let settings = GrowSettings::default();
        let wu = grow_branch(
            &m,
            seed_branch(&m, &saddle, BranchKind::Unstable, BranchSide::Plus, 1e-4).unwrap(),
            5.0,
            &settings,
        )
        .unwrap();
        let ws = grow_branch(
            &m,
            seed_branch(&m, &saddle, BranchKind::Stable, BranchSide::Plus, 1e-4).unwrap(),
            5.0,
            &settings,
        )
        .unwrap();
        let pts = find_homoclinic_points(&wu, &ws, DEFAULT_EXCLUSION_RADIUS).unwrap();
        assert!(pts.is_empty(), "spurious intersections: {pts:?}");
    }

    #[test]
    fn duffing_overlap_rule_designates_the_apex() {
        let (_, wu, ws) = duffing_branches();
        let pts = find_homoclinic_points(&wu, &ws, DEFAULT_EXCLUSION_RADIUS).unwrap();
        assert_eq!(pts.len(), 1, "expected one tangential overlap point: {pts:?}");
        let p = pts[0];
        assert!(!p.transversal);
        assert_eq!(p.crossing_sign, CrossingSign::Tangential);
        // level-set oracle: the apex of the right lobe is (sqrt 2, 0)
        let apex = Point::new(std::f64::consts::SQRT_2, 0.0);
        assert!(p.location.dist(apex) < 1e-3, "apex {:?}", p.location);
        // chord interpolation carries sagitta error, so the level-set
        // residual is looser here than at polyline vertices
        let h = p.location.y * p.location.y / 2.0 - p.location.x * p.location.x / 2.0
            + p.location.x.powi(4) / 4.0;
        assert!(h.abs() < 1e-4, "energy {h:e}");
    }

    #[test]
    fn duffing_lobe_is_a_positive_cell() {
        let (_, wu, ws) = duffing_branches();
        let pts = find_homoclinic_points(&wu, &ws, DEFAULT_EXCLUSION_RADIUS).unwrap();
        let l = build_simple_loop(&pts[0], &wu, &ws).unwrap();
        assert!(l.simple);
        assert!(l.p.dist(Point::ZERO) < 1e-8);
        let cell = cell_from_loop(&l, &wu, &ws).unwrap();
        assert_eq!(cell.sign, CellSign::Positive);
        assert_eq!(cell.rho, 1);
        // membership against the energy oracle
        assert_eq!(point_in_cell(&cell, Point::new(1.0, 0.0)), PointLocation::Inside);
        assert_eq!(point_in_cell(&cell, Point::new(-1.0, 0.0)), PointLocation::Outside);
        assert_eq!(point_in_cell(&cell, l.p), PointLocation::Boundary);
        // area of the right lobe: integral of 2 sqrt(x^2/2 - x^4/4... ) known ~ 4/3 *? just positivity and sanity
        let area = cell.polygon.signed_area();
        assert!(area > 1.0 && area < 3.0, "lobe area {area}");
    }

    #[test]
    fn quadrant_fixture_classifies_both_signs() {
        // a diamond strictly inside quadrant I of a rotated eigenbasis
        let e1 = Point::new(1.0, 1.0).scale(1.0 / 2f64.sqrt());
        let e2 = Point::new(-1.0, 1.0).scale(1.0 / 2f64.sqrt());
        let basis = Mat2::new(e1.x, e2.x, e1.y, e2.y);
        let chartwise: Vec<Point> = vec![
            Point::new(0.0, 0.0),
            Point::new(0.2, 0.0),
            Point::new(0.2, 0.2),
            Point::new(0.0, 0.2),
        ];
        let verts: Vec<Point> = chartwise.iter().map(|c| basis.apply(*c)).collect();
        let poly = OrientedPolygon::ccw(verts).unwrap();
        assert_eq!(
            classify_cell_sign(&poly, Point::ZERO, e1, e2).unwrap(),
            CellSign::Positive
        );
        // the three-quadrant complement within a box
        let chartwise_neg = vec![
            Point::new(0.0, 0.0),
            Point::new(0.0, 0.2),
            Point::new(-0.2, 0.2),
            Point::new(-0.2, -0.2),
            Point::new(0.2, -0.2),
            Point::new(0.2, 0.0),
        ];
        let verts: Vec<Point> = chartwise_neg.iter().map(|c| basis.apply(*c)).collect();
        let poly = OrientedPolygon::ccw(verts).unwrap();
        assert_eq!(
            classify_cell_sign(&poly, Point::ZERO, e1, e2).unwrap(),
            CellSign::Negative
        );
        // invariance under positive rescaling of the eigenvectors
        assert_eq!(
            classify_cell_sign(&poly, Point::ZERO, e1.scale(3.7), e2.scale(0.02)).unwrap(),
            CellSign::Negative
        );
    }

    #[test]
    fn artificial_double_crossing_picks_the_inner_one() {
        // unstable arc: a wide arch; stable arc: a line crossing it twice
        let j_u = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 2.0),
            Point::new(3.0, 2.0),
            Point::new(4.0, 0.0),
        ];
        let j_s = vec![Point::new(4.0, 0.0), Point::new(2.0, 3.0), Point::new(0.0, 0.0)];
        let x = first_interior_crossing(&j_u, &j_s).unwrap();
        // both crossings lie on the arch's top segment; the one earlier
        // along the unstable arc is (4/3, 2)
        assert!(x.dist(Point::new(4.0 / 3.0, 2.0)) < 1e-12, "picked {x:?}");
    }

    #[test]
    fn tangle_map_has_transversal_homoclinic_points() {
        let mut ps = BTreeMap::new();
        ps.insert("alpha".to_string(), (0.24f64).acos());
        let m = builtin_map("area_preserving_henon", &ps).unwrap();
        let saddle = saddle_of(&m, 2.0, 40);
        let settings = GrowSettings::default();
        let wu = grow_branch(
            &m,
            seed_branch(&m, &saddle, BranchKind::Unstable, BranchSide::Minus, 1e-5).unwrap(),
            8.0,
            &settings,
        )
        .unwrap();
        let ws = grow_branch(
            &m,
            seed_branch(&m, &saddle, BranchKind::Stable, BranchSide::Minus, 1e-5).unwrap(),
            8.0,
            &settings,
        )
        .unwrap();
        let pts = find_homoclinic_points(&wu, &ws, DEFAULT_EXCLUSION_RADIUS).unwrap();
        let transversal: Vec<_> = pts.iter().filter(|p| p.transversal).collect();
        assert!(!transversal.is_empty(), "no transversal intersection found");
        for p in &transversal {
            // invariant: the point lies on both polylines
            let (_, du) = wu.project(p.location).unwrap();
            let (_, ds) = ws.project(p.location).unwrap();
            assert!(du < 1e-8 && ds < 1e-8, "du {du:e} ds {ds:e}");
            assert!(p.t_u > 0.0);
        }
    }
}
