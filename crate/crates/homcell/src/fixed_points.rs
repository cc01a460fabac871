//! Newton location of fixed and periodic points from grid seeds, and
//! eigenvalue classification.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{Mat2, Point};
use crate::map_model::SmoothPlanarMap;

pub const RESIDUAL_TOL: f64 = 1e-10;
pub const NEWTON_TOL: f64 = 1e-12;
pub const DEDUP_TOL: f64 = 1e-6;
/// Eigenvalues closer than this to the unit circle (or to being real)
/// are treated as borderline.
pub const EIG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    DirectSaddle,
    TwistedSaddle,
    Sink,
    Source,
    Elliptic,
    /// 1 is an eigenvalue of df^n.
    Nonsimple,
    /// Real eigenvalues of opposite sign straddling the unit circle;
    /// only arises for orientation-reversing maps.
    MixedSaddle,
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointRecord {
    pub location: Point,
    /// Period used for the search: the record is a fixed point of f^n.
    pub n: u32,
    pub minimal_period: u32,
    /// Eigenvalue pair of df^n at the point, (re, im), by descending modulus.
    pub eigenvalues: [(f64, f64); 2],
    pub classification: Classification,
    /// Fixed-point index, filled by the index module.
    pub index: Option<i64>,
    pub residual: f64,
    /// Some eigenvalue lies within EIG_TOL of the unit circle.
    pub borderline: bool,
}

impl FixedPointRecord {
    pub fn is_saddle(&self) -> bool {
        matches!(self.classification, Classification::DirectSaddle | Classification::TwistedSaddle)
    }
}

/// Classification from an eigenvalue pair, by descending modulus.
pub fn classify_eigenvalues(eigs: [(f64, f64); 2]) -> (Classification, bool) {
    let m0 = eigs[0].0.hypot(eigs[0].1);
    let m1 = eigs[1].0.hypot(eigs[1].1);
    let borderline = (m0 - 1.0).abs() < EIG_TOL || (m1 - 1.0).abs() < EIG_TOL;
    let is_one = |e: (f64, f64)| (e.0 - 1.0).abs() < EIG_TOL && e.1.abs() < EIG_TOL;
    if is_one(eigs[0]) || is_one(eigs[1]) {
        return (Classification::Nonsimple, borderline);
    }
    let real = eigs[0].1.abs() < EIG_TOL && eigs[1].1.abs() < EIG_TOL;
    if !real {
        // complex pair: common modulus decides
        let class = if (m0 - 1.0).abs() < EIG_TOL {
            Classification::Elliptic
        } else if m0 < 1.0 {
            Classification::Sink
        } else {
            Classification::Source
        };
        return (class, borderline);
    }
    let (mu, lambda) = (eigs[0].0, eigs[1].0);
    let class = if mu > 1.0 && 1.0 > lambda && lambda > 0.0 {
        Classification::DirectSaddle
    } else if mu < -1.0 && -1.0 < lambda && lambda < 0.0 {
        Classification::TwistedSaddle
    } else if m0 < 1.0 && m1 < 1.0 {
        Classification::Sink
    } else if m0 > 1.0 && m1 > 1.0 {
        Classification::Source
    } else if borderline {
        // real eigenvalue pinned to the unit circle: -1 counts as elliptic
        Classification::Elliptic
    } else {
        Classification::MixedSaddle
    };
    (class, borderline)
}

/// Classifies a located fixed point of f^n by the eigenvalues of df^n.
pub fn classify(map: &SmoothPlanarMap, location: Point, n: u32) -> Result<(Classification, [(f64, f64); 2], bool)> {
    let jac = map.iterate_jacobian(location, n)?;
    let eigs = jac.eigenvalues();
    let (class, borderline) = classify_eigenvalues(eigs);
    Ok((class, eigs, borderline))
}

/// Damped Newton on f^n - id from `seed`. Converges to NEWTON_TOL within
/// 50 iterations or reports failure.
pub fn newton_refine(map: &SmoothPlanarMap, n: u32, seed: Point) -> Result<Point> {
    let mut x = seed;
    let mut residual = displacement(map, n, x)?;
    for _ in 0..50 {
        if residual.norm() < NEWTON_TOL {
            return Ok(x);
        }
        let jac = map.iterate_jacobian(x, n)?;
        let newton_matrix = Mat2::new(jac.a - 1.0, jac.b, jac.c, jac.d - 1.0);
        let step = newton_matrix.solve(residual).ok_or_else(|| {
            Error::NewtonFailure(format!("singular Jacobian of f^{n} - id at {x:?}"))
        })?;
        // damping: halve until the residual decreases
        let mut damping = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let candidate = x - step.scale(damping);
            if !map.in_working_rect(candidate) {
                damping *= 0.5;
                continue;
            }
            match displacement(map, n, candidate) {
                Ok(r) if r.norm() < residual.norm() || r.norm() < NEWTON_TOL => {
                    x = candidate;
                    residual = r;
                    accepted = true;
                    break;
                }
                _ => damping *= 0.5,
            }
        }
        if !accepted {
            return Err(Error::NewtonFailure(format!(
                "stalled at {x:?} with residual {:e}",
                residual.norm()
            )));
        }
    }
    if residual.norm() < NEWTON_TOL {
        Ok(x)
    } else {
        Err(Error::NewtonFailure(format!(
            "no convergence in 50 iterations from {seed:?} (residual {:e})",
            residual.norm()
        )))
    }
}

fn displacement(map: &SmoothPlanarMap, n: u32, x: Point) -> Result<Point> {
    Ok(map.iterate(x, n)? - x)
}

/// Grid-seeded sweep for fixed points of f^n in `region`. Each orbit is
/// reported once, anchored at its lexicographically smallest point.
/// Completeness is heuristic in the grid density.
pub fn find_periodic_points(
    map: &SmoothPlanarMap,
    n: u32,
    region: (Point, Point),
    grid: usize,
) -> Result<Vec<FixedPointRecord>> {
    assert!(grid >= 2, "grid must be at least 2 per axis");
    assert!(n >= 1);
    let mut found: Vec<Point> = Vec::new();
    for i in 0..grid {
        for j in 0..grid {
            let seed = Point::new(
                region.0.x + (i as f64 + 0.5) / grid as f64 * (region.1.x - region.0.x),
                region.0.y + (j as f64 + 0.5) / grid as f64 * (region.1.y - region.0.y),
            );
            let Ok(p) = newton_refine(map, n, seed) else { continue };
            if p.x < region.0.x || p.x > region.1.x || p.y < region.0.y || p.y > region.1.y {
                continue;
            }
            if found.iter().any(|q| q.dist(p) < DEDUP_TOL) {
                continue;
            }
            found.push(p);
        }
    }
    assemble_records(map, n, found)
}

/// Deduplicates orbits, computes minimal periods and classifications.
pub fn assemble_records(
    map: &SmoothPlanarMap,
    n: u32,
    points: Vec<Point>,
) -> Result<Vec<FixedPointRecord>> {
    let mut anchors: Vec<Point> = Vec::new();
    let mut records = Vec::new();
    for p in points {
        // walk the orbit to its lexicographically smallest point
        let mut orbit = vec![p];
        let mut q = p;
        for _ in 1..n {
            q = map.eval(q)?;
            orbit.push(q);
        }
        let anchor = *orbit
            .iter()
            .min_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).unwrap())
            .unwrap();
        if anchors.iter().any(|a| a.dist(anchor) < DEDUP_TOL) {
            continue;
        }
        anchors.push(anchor);
        let residual = (map.iterate(anchor, n)? - anchor).norm();
        if residual > RESIDUAL_TOL {
            continue;
        }
        let mut minimal_period = n;
        for d in 1..n {
            if n % d == 0 && (map.iterate(anchor, d)? - anchor).norm() < 1e-9 {
                minimal_period = d;
                break;
            }
        }
        let (classification, eigenvalues, borderline) = classify(map, anchor, n)?;
        records.push(FixedPointRecord {
            location: anchor,
            n,
            minimal_period,
            eigenvalues,
            classification,
            index: None,
            residual,
            borderline,
        });
    }
    records.sort_by(|a, b| {
        (a.location.x, a.location.y).partial_cmp(&(b.location.x, b.location.y)).unwrap()
    });
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_model::builtin_map;
    use std::collections::BTreeMap;

    fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn classify_table() {
        let case = |eigs, expect| {
            assert_eq!(classify_eigenvalues(eigs).0, expect, "{eigs:?}");
        };
        case([(2.0, 0.0), (0.5, 0.0)], Classification::DirectSaddle);
        case([(-2.0, 0.0), (-0.5, 0.0)], Classification::TwistedSaddle);
        case([(0.5, 0.0), (0.2, 0.0)], Classification::Sink);
        case([(3.0, 0.0), (1.5, 0.0)], Classification::Source);
        case([(0.3, 0.4), (0.3, -0.4)], Classification::Sink);
        let th = std::f64::consts::SQRT_2;
        case([(th.cos(), th.sin()), (th.cos(), -th.sin())], Classification::Elliptic);
        case([(1.0, 0.0), (0.5, 0.0)], Classification::Nonsimple);
        case([(2.0, 0.0), (-0.5, 0.0)], Classification::MixedSaddle);
    }

    #[test]
    fn linear_saddle_unique_fixed_point() {
        let m = builtin_map("linear_saddle", &params(&[("lambda", 0.5), ("mu", 2.0)])).unwrap();
        let recs =
            find_periodic_points(&m, 1, (Point::new(-1.0, -1.0), Point::new(1.0, 1.0)), 10)
                .unwrap();
        assert_eq!(recs.len(), 1);
        assert!(recs[0].location.norm() < 1e-11);
        assert_eq!(recs[0].classification, Classification::DirectSaddle);
    }

    #[test]
    fn newton_from_seed_converges_and_fails_cleanly() {
        let m = builtin_map("linear_saddle", &params(&[("lambda", 0.5), ("mu", 2.0)])).unwrap();
        let p = newton_refine(&m, 1, Point::new(0.3, -0.2)).unwrap();
        assert!(p.norm() < 1e-12);
        // a map with no fixed point: translation
        let shift = crate::map_model::SmoothPlanarMap::from_closures(
            "shift",
            |p| Point::new(p.x + 1.0, p.y),
            |_| Mat2::IDENTITY,
            None,
        );
        assert!(newton_refine(&shift, 1, Point::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn henon_fixed_points_match_quadratic_oracle() {
        let (a, b) = (1.4, 0.3);
        let m = builtin_map("henon", &params(&[("a", a), ("b", b)])).unwrap();
        let recs =
            find_periodic_points(&m, 1, (Point::new(-3.0, -3.0), Point::new(3.0, 3.0)), 50)
                .unwrap();
        // fixed points solve x^2 + (1-b)x - a = 0, y = x
        let disc = ((1.0 - b) * (1.0 - b) + 4.0 * a).sqrt();
        let roots = [(-(1.0 - b) - disc) / 2.0, (-(1.0 - b) + disc) / 2.0];
        assert_eq!(recs.len(), 2);
        for root in roots {
            let hit = recs
                .iter()
                .any(|r| r.location.dist(Point::new(root, root)) < 1e-10);
            assert!(hit, "missing root {root}");
        }
    }

    #[test]
    fn duffing_three_fixed_points() {
        let m = builtin_map("duffing_time1", &BTreeMap::new()).unwrap();
        let recs =
            find_periodic_points(&m, 1, (Point::new(-2.0, -2.0), Point::new(2.0, 2.0)), 14)
                .unwrap();
        assert_eq!(recs.len(), 3, "records: {recs:?}");
        let at = |x: f64| {
            recs.iter()
                .find(|r| r.location.dist(Point::new(x, 0.0)) < 1e-8)
                .unwrap_or_else(|| panic!("no fixed point near ({x},0)"))
        };
        assert_eq!(at(0.0).classification, Classification::DirectSaddle);
        assert_eq!(at(1.0).classification, Classification::Elliptic);
        assert_eq!(at(-1.0).classification, Classification::Elliptic);
        // oracle: eigenvalues at (1,0) are exp(+-i sqrt 2)
        let eig = at(1.0).eigenvalues[0];
        let th = std::f64::consts::SQRT_2;
        assert!((eig.0 - th.cos()).abs() < 1e-8 && (eig.1.abs() - th.sin()).abs() < 1e-8);
    }

    #[test]
    fn classification_is_similarity_invariant() {
        // conjugate a linear saddle by a rotation; eigenvalues are unchanged
        let theta: f64 = 0.83;
        let (s, c) = theta.sin_cos();
        let rot = Mat2::new(c, -s, s, c);
        let rot_inv = Mat2::new(c, s, -s, c);
        let diag = Mat2::new(0.5, 0.0, 0.0, 2.0);
        let conj = rot.mul(diag).mul(rot_inv);
        let (class, _) = classify_eigenvalues(conj.eigenvalues());
        assert_eq!(class, Classification::DirectSaddle);
    }

    #[test]
    fn minimal_period_of_period_two_orbit() {
        // twisted saddle squared: the fixed point is period 1 for n = 2
        let m = builtin_map(
            "twisted_linear_saddle",
            &params(&[("lambda", -0.5), ("mu", -2.0)]),
        )
        .unwrap();
        let recs =
            find_periodic_points(&m, 2, (Point::new(-1.0, -1.0), Point::new(1.0, 1.0)), 8)
                .unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].minimal_period, 1);
        // eigenvalues of df^2 are (4, 0.25): direct saddle for f^2
        assert_eq!(recs[0].classification, Classification::DirectSaddle);
    }
}
