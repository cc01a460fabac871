//! Orientation-preserving sphere maps in two stereographic charts, and
//! the sphere-level index checks: total index 2, the two complementary
//! components of a simple homoclinic loop carrying indices 1 and 2, and
//! the Lefschetz counting bound.
//!
//! The chart transition is complex inversion w = 1/z, i.e. (x, -y)
//! scaled by 1/(x^2 + y^2); it is orientation preserving away from the
//! origin. The north chart covers everything but the south pole (w = 0)
//! and vice versa; the two representations must agree on the overlap
//! annulus r_in <= |z| <= r_out.
//!
//! ```
//! use homcell::sphere::{sphere_fixture, total_index};
//!
//! let g = sphere_fixture("north_south").unwrap();
//! assert_eq!(total_index(&g, 12).unwrap(), 2);
//! ```

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixed_points::{find_periodic_points, FixedPointRecord};
use crate::geom::{Mat2, Point};
use crate::homoclinic::HomoclinicCell;
use crate::index::{index_at_point, index_of_block};
use crate::map_model::{make_time_t_map, SmoothPlanarMap, VectorField};
use crate::periodic_cell::ERODE_OFFSET;

/// Chart agreement tolerance on the overlap annulus.
pub const CONSISTENCY_TOL: f64 = 1e-8;

/// w = 1/z in complex terms.
pub fn transition(p: Point) -> Point {
    let d = p.norm_sq();
    Point::new(p.x / d, -p.y / d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    North,
    South,
}

#[derive(Debug)]
pub struct SphereMap {
    pub north: SmoothPlanarMap,
    pub south: SmoothPlanarMap,
    pub r_in: f64,
    pub r_out: f64,
}

impl SphereMap {
    /// Builds the pair and certifies chart agreement by sampling the
    /// overlap annulus: transition(north(z)) must match
    /// south(transition(z)) to within CONSISTENCY_TOL.
    pub fn new(
        north: SmoothPlanarMap,
        south: SmoothPlanarMap,
        r_in: f64,
        r_out: f64,
    ) -> Result<SphereMap> {
        if !(r_in > 0.0 && r_out > r_in) {
            return Err(Error::Config(format!("bad overlap annulus [{r_in}, {r_out}]")));
        }
        let g = SphereMap { north, south, r_in, r_out };
        for r in [r_in, (r_in * r_out).sqrt(), r_out] {
            for k in 0..48 {
                let th = 2.0 * std::f64::consts::PI * k as f64 / 48.0;
                let z = Point::new(r * th.cos(), r * th.sin());
                let via_north = transition(g.north.eval(z)?);
                let via_south = g.south.eval(transition(z))?;
                let d = via_north.dist(via_south);
                if d > CONSISTENCY_TOL {
                    return Err(Error::ChartInconsistency(format!(
                        "at z = {z:?}: north gives {via_north:?}, south gives {via_south:?} \
                         (distance {d:e})"
                    )));
                }
            }
        }
        Ok(g)
    }

    /// Radius of the cut circle separating the two chart territories.
    pub fn cut_radius(&self) -> f64 {
        (self.r_in * self.r_out).sqrt()
    }
}

/// Every fixed point of the sphere map, each reported in the chart that
/// owns it: the north chart inside the cut circle, the south chart
/// outside. Indices are filled in; for points visible in both charts
/// the two chart computations must agree.
pub fn sphere_fixed_points(
    g: &SphereMap,
    grid: usize,
) -> Result<Vec<(Chart, FixedPointRecord)>> {
    let rc = g.cut_radius();
    let mut out = Vec::new();
    let north = find_periodic_points(
        &g.north,
        1,
        (Point::new(-rc, -rc), Point::new(rc, rc)),
        grid,
    )?;
    for mut rec in north {
        if rec.location.norm() > rc {
            continue;
        }
        let ix = index_at_point(&g.north, 1, rec.location)?;
        if rec.location.norm() >= g.r_in {
            // visible in both charts: the south computation must agree
            let ix_s = index_at_point(&g.south, 1, transition(rec.location))?;
            if ix_s != ix {
                return Err(Error::ChartInconsistency(format!(
                    "index at {:?}: north {ix}, south {ix_s}",
                    rec.location
                )));
            }
        }
        rec.index = Some(ix);
        out.push((Chart::North, rec));
    }
    let rs = 1.0 / rc;
    let south = find_periodic_points(
        &g.south,
        1,
        (Point::new(-rs, -rs), Point::new(rs, rs)),
        grid,
    )?;
    for mut rec in south {
        if rec.location.norm() >= rs {
            continue;
        }
        rec.index = Some(index_at_point(&g.south, 1, rec.location)?);
        out.push((Chart::South, rec));
    }
    Ok(out)
}

/// Sum of the indices of all fixed points; 2 for every degree-one
/// orientation-preserving sphere map.
pub fn total_index(g: &SphereMap, grid: usize) -> Result<i64> {
    Ok(sphere_fixed_points(g, grid)?
        .iter()
        .map(|(_, r)| r.index.unwrap_or(0))
        .sum())
}

/// Indices of the two complementary components of a simple homoclinic
/// loop living in the north chart: the bounded side by winding along an
/// inward offset, the side containing the point at infinity as the
/// total minus the winding along an outward offset.
pub fn component_indices(
    g: &SphereMap,
    cell: &HomoclinicCell,
    grid: usize,
) -> Result<(i64, i64)> {
    if !cell.hloop.simple {
        return Err(Error::DegenerateLoop("component indices need a simple loop".into()));
    }
    let inner = index_of_block(&g.north, 1, &cell.polygon.eroded(ERODE_OFFSET)?)?;
    let enclosed = index_of_block(&g.north, 1, &cell.polygon.eroded(-ERODE_OFFSET)?)?;
    let saddle_index = index_at_point(&g.north, 1, cell.hloop.p)?;
    if enclosed != inner + saddle_index {
        return Err(Error::HypothesisUnmet(format!(
            "a fixed point other than the saddle sits on the loop: \
             enclosed {enclosed} != inner {inner} + saddle {saddle_index}"
        )));
    }
    let total = total_index(g, grid)?;
    Ok((inner, total - enclosed))
}

#[derive(Debug, Clone, Serialize)]
pub struct LefschetzReport {
    pub lefschetz: i64,
    pub fixed_point_count: usize,
    pub rho: i64,
    /// |Lef + 1 - rho| + 1 + rho
    pub strong_bound: i64,
    /// |Lef| + 2
    pub weak_bound: i64,
    pub strong_satisfied: bool,
    pub weak_satisfied: bool,
    /// Corollary-level floor: at least 3 fixed points.
    pub at_least_three: bool,
}

/// Checks #Fix >= |Lef + 1 - rho| + 1 + rho >= |Lef| + 2 from the
/// per-point indices. The hypothesis requires every index in
/// {-1, 0, +1}; a violation is an error, not a verdict.
pub fn lefschetz_bound_check(indices: &[i64], rho: i64) -> Result<LefschetzReport> {
    if let Some(bad) = indices.iter().find(|ix| ix.abs() > 1) {
        return Err(Error::HypothesisUnmet(format!(
            "fixed point of index {bad} outside {{-1, 0, +1}}"
        )));
    }
    let lefschetz: i64 = indices.iter().sum();
    let n = indices.len();
    let strong = (lefschetz + 1 - rho).abs() + 1 + rho;
    let weak = lefschetz.abs() + 2;
    Ok(LefschetzReport {
        lefschetz,
        fixed_point_count: n,
        rho,
        strong_bound: strong,
        weak_bound: weak,
        strong_satisfied: n as i64 >= strong,
        weak_satisfied: n as i64 >= weak,
        at_least_three: n >= 3,
    })
}

/// Smooth bump: 1 for r <= 1, 0 for r >= 2, quintic smoothstep between.
fn bump(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        let t = r - 1.0;
        1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

fn bump_deriv(r: f64) -> f64 {
    if !(1.0..2.0).contains(&r) {
        0.0
    } else {
        let t = r - 1.0;
        -(30.0 * t * t * (1.0 - t) * (1.0 - t))
    }
}

/// Field for the tangle fixture: the Hamiltonian field (y, x - 4x^3)
/// inside the unit disk, blended through the bump into the linear
/// contraction -gamma z outside radius 2. The separatrix lobe through
/// (1/sqrt 2, 0) lies entirely inside the unit disk, where the field is
/// exactly Hamiltonian with H = y^2/2 - x^2/2 + x^4.
pub fn blended_tangle_field(gamma: f64) -> VectorField {
    let f = move |p: Point| {
        let r = p.norm();
        let b = bump(r);
        let h = Point::new(p.y, p.x - 4.0 * p.x.powi(3));
        let l = p.scale(-gamma);
        h.scale(b) + l.scale(1.0 - b)
    };
    let jac = move |p: Point| {
        let r = p.norm();
        let b = bump(r);
        let jh = Mat2::new(0.0, 1.0, 1.0 - 12.0 * p.x * p.x, 0.0);
        let jl = Mat2::new(-gamma, 0.0, 0.0, -gamma);
        let mut j = Mat2::new(
            b * jh.a + (1.0 - b) * jl.a,
            b * jh.b + (1.0 - b) * jl.b,
            b * jh.c + (1.0 - b) * jl.c,
            b * jh.d + (1.0 - b) * jl.d,
        );
        if r > 0.0 {
            let db = bump_deriv(r);
            let grad = Point::new(db * p.x / r, db * p.y / r);
            let h = Point::new(p.y, p.x - 4.0 * p.x.powi(3));
            let l = p.scale(-gamma);
            let u = h - l;
            j.a += u.x * grad.x;
            j.b += u.x * grad.y;
            j.c += u.y * grad.x;
            j.d += u.y * grad.y;
        }
        j
    };
    VectorField::native("blended tangle field", f, jac)
}

const TANGLE_GAMMA: f64 = 0.5;

/// Built-in sphere fixtures: "north_south" (sink and source poles),
/// "rotation" (two elliptic poles), "tangle" (time-1 blended
/// Hamiltonian with a saddle, two centers, and a source at the south
/// pole).
pub fn sphere_fixture(name: &str) -> Result<SphereMap> {
    match name {
        "north_south" => {
            let north = SmoothPlanarMap::from_closures(
                "half contraction z/2",
                |p| p.scale(0.5),
                |_| Mat2::new(0.5, 0.0, 0.0, 0.5),
                Some(Arc::new(|p: Point| p.scale(2.0))),
            );
            let south = SmoothPlanarMap::from_closures(
                "doubling 2w",
                |p| p.scale(2.0),
                |_| Mat2::new(2.0, 0.0, 0.0, 2.0),
                Some(Arc::new(|p: Point| p.scale(0.5))),
            );
            SphereMap::new(north, south, 0.5, 2.0)
        }
        "rotation" => {
            let theta: f64 = 0.7;
            let (s, c) = theta.sin_cos();
            let north = SmoothPlanarMap::from_closures(
                "rotation by theta",
                move |p| Point::new(c * p.x - s * p.y, s * p.x + c * p.y),
                move |_| Mat2::new(c, -s, s, c),
                Some(Arc::new(move |p: Point| Point::new(c * p.x + s * p.y, -s * p.x + c * p.y))),
            );
            let south = SmoothPlanarMap::from_closures(
                "rotation by -theta",
                move |p| Point::new(c * p.x + s * p.y, -s * p.x + c * p.y),
                move |_| Mat2::new(c, s, -s, c),
                Some(Arc::new(move |p: Point| Point::new(c * p.x - s * p.y, s * p.x + c * p.y))),
            );
            SphereMap::new(north, south, 0.5, 2.0)
        }
        "tangle" => {
            let north = make_time_t_map(blended_tangle_field(TANGLE_GAMMA), 1.0)?;
            let scale = TANGLE_GAMMA.exp();
            let south = SmoothPlanarMap::from_closures(
                "south expansion e^gamma w",
                move |p| p.scale(scale),
                move |_| Mat2::new(scale, 0.0, 0.0, scale),
                Some(Arc::new(move |p: Point| p.scale(1.0 / scale))),
            );
            // outside radius 2 the field is exactly -gamma z, and a
            // time-1 trajectory from radius >= 3.5 never re-enters it
            SphereMap::new(north, south, 3.5, 4.5)
        }
        other => Err(Error::UnknownBuiltin(format!("sphere fixture {other}"))),
    }
}

/// Parameters for a user-configured sphere check.
#[derive(Debug, Clone, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereSpec {
    pub north: crate::map_model::MapSpec,
    pub south: crate::map_model::MapSpec,
    pub r_in: f64,
    pub r_out: f64,
}

impl SphereSpec {
    pub fn build(&self) -> Result<SphereMap> {
        SphereMap::new(self.north.build()?, self.south.build()?, self.r_in, self.r_out)
    }
}
