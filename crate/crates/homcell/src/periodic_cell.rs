//! V_n, the n-periodic block inside a homoclinic cell, and the block
//! index checks for Theorems A and A1.
//!
//! V_n is the set of cell points whose first n-1 iterates stay in the
//! cell. The fixed points of f^n in V_n form a block whose index must
//! equal rho(V): 1 for a positive cell, 2 for a negative one. The block
//! index is computed twice, as the sum of per-point indices and as the
//! winding of f^n along an inward offset of the cell boundary, and the
//! two must agree whenever both certify.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixed_points::{assemble_records, newton_refine, Classification, FixedPointRecord};
use crate::geom::{Point, PointLocation};
use crate::homoclinic::HomoclinicCell;
use crate::index::{index_at_point, index_of_block};
use crate::map_model::SmoothPlanarMap;

/// Boundary band for membership verdicts.
pub const BOUNDARY_BAND: f64 = 1e-9;

/// Inward offset of the cell boundary for the winding cross-check.
pub const ERODE_OFFSET: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    In,
    Out,
    Uncertain,
}

#[derive(Debug, Clone)]
pub struct VnRegion<'a> {
    pub n: u32,
    pub cell: &'a HomoclinicCell,
    pub sample_grid: usize,
}

impl<'a> VnRegion<'a> {
    pub fn new(n: u32, cell: &'a HomoclinicCell, sample_grid: usize) -> Self {
        VnRegion { n, cell, sample_grid }
    }

    pub fn membership(&self, map: &SmoothPlanarMap, x: Point) -> Result<Membership> {
        vn_membership(map, self.cell, self.n, x)
    }
}

/// x is in V_n when x and its first n-1 iterates are all inside the
/// cell; the test short-circuits on the first exit and answers
/// uncertain when an iterate lands in the boundary band.
pub fn vn_membership(
    map: &SmoothPlanarMap,
    cell: &HomoclinicCell,
    n: u32,
    x: Point,
) -> Result<Membership> {
    let mut p = x;
    for i in 0..n {
        if i > 0 {
            p = map.eval(p)?;
        }
        match cell.polygon.locate(p, BOUNDARY_BAND) {
            PointLocation::Outside => return Ok(Membership::Out),
            PointLocation::Boundary => return Ok(Membership::Uncertain),
            PointLocation::Inside => {}
        }
    }
    Ok(Membership::In)
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockDiagnostics {
    pub grid: usize,
    pub seeds_in: usize,
    pub uncertain_points: usize,
    pub max_residual: f64,
    /// Why the winding cross-check is absent, when it is.
    pub winding_note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockReport {
    pub n: u32,
    /// Orbits (by anchor) whose points enter the block.
    pub orbits: Vec<FixedPointRecord>,
    /// Every fixed point of f^n in V_n, each counted once.
    pub block_points: Vec<Point>,
    pub per_point_indices: Vec<i64>,
    /// Sum of per-point indices; absent when some index fails to certify.
    pub block_index: Option<i64>,
    /// Winding of f^n along the eroded cell boundary, when computable.
    pub boundary_winding: Option<i64>,
    pub rho: i64,
    /// block_index == rho; false also covers the non-certified case.
    pub matches: bool,
    pub certified: bool,
    pub diagnostics: BlockDiagnostics,
}

/// Finds the block Fix f^n ∩ V_n and computes its index both ways.
pub fn find_block(
    map: &SmoothPlanarMap,
    cell: &HomoclinicCell,
    n: u32,
    grid: usize,
) -> Result<BlockReport> {
    if grid < 20 {
        return Err(Error::Config(format!("seeding grid {grid} below the minimum of 20")));
    }
    let (lo, hi) = cell.polygon.bounding_box();
    let mut raw: Vec<Point> = Vec::new();
    let mut seeds_in = 0usize;
    for i in 0..grid {
        for j in 0..grid {
            let seed = Point::new(
                lo.x + (i as f64 + 0.5) / grid as f64 * (hi.x - lo.x),
                lo.y + (j as f64 + 0.5) / grid as f64 * (hi.y - lo.y),
            );
            if vn_membership(map, cell, n, seed)? != Membership::In {
                continue;
            }
            seeds_in += 1;
            let Ok(p) = newton_refine(map, n, seed) else { continue };
            if raw.iter().any(|q| q.dist(p) < crate::fixed_points::DEDUP_TOL) {
                continue;
            }
            raw.push(p);
        }
    }
    let records = assemble_records(map, n, raw)?;

    // expand orbits: every orbit point is its own fixed point of f^n
    let mut orbits = Vec::new();
    let mut block_points: Vec<Point> = Vec::new();
    let mut inside_cell: Vec<Point> = Vec::new();
    let mut uncertain_points = 0usize;
    let mut max_residual: f64 = 0.0;
    for rec in records {
        max_residual = max_residual.max(rec.residual);
        let mut orbit = vec![rec.location];
        for _ in 1..rec.minimal_period {
            orbit.push(map.eval(*orbit.last().unwrap())?);
        }
        let mut contributes = false;
        for q in orbit {
            match cell.polygon.locate(q, BOUNDARY_BAND) {
                PointLocation::Inside => inside_cell.push(q),
                PointLocation::Boundary => uncertain_points += 1,
                PointLocation::Outside => {}
            }
            match vn_membership(map, cell, n, q)? {
                Membership::In => {
                    contributes = true;
                    block_points.push(q);
                }
                Membership::Uncertain => uncertain_points += 1,
                Membership::Out => {}
            }
        }
        if contributes {
            orbits.push(rec);
        }
    }

    // per-point indices for f^n
    let mut per_point_indices = Vec::new();
    let mut certified = true;
    for q in &block_points {
        match index_at_point(map, n, *q) {
            Ok(ix) => per_point_indices.push(ix),
            Err(_) => {
                certified = false;
                break;
            }
        }
    }
    let block_index = if certified && per_point_indices.len() == block_points.len() {
        Some(per_point_indices.iter().sum())
    } else {
        None
    };

    // winding cross-check along the eroded boundary; the offset curve
    // must cleanly separate the boundary from every interior fixed point
    let mut winding_note = None;
    let boundary_winding = match cell.polygon.eroded(ERODE_OFFSET) {
        Err(e) => {
            winding_note = Some(format!("erosion failed: {e}"));
            None
        }
        Ok(inner) => {
            let clean = inside_cell
                .iter()
                .all(|q| inner.locate(*q, BOUNDARY_BAND) == PointLocation::Inside);
            if !clean {
                winding_note =
                    Some("a fixed point lies within the erosion offset of the boundary".into());
                None
            } else {
                match index_of_block(map, n, &inner) {
                    Ok(w) => Some(w),
                    Err(e) => {
                        winding_note = Some(format!("boundary winding not certified: {e}"));
                        None
                    }
                }
            }
        }
    };

    let matches = block_index == Some(cell.rho);
    Ok(BlockReport {
        n,
        orbits,
        block_points,
        per_point_indices,
        block_index,
        boundary_winding,
        rho: cell.rho,
        matches,
        certified,
        diagnostics: BlockDiagnostics {
            grid,
            seeds_in,
            uncertain_points,
            max_residual,
            winding_note,
        },
    })
}

/// Runs find_block for n = 1..n_max; per-n failures become
/// non-certified reports instead of aborting the sweep.
pub fn verify_theorem_a(
    map: &SmoothPlanarMap,
    cell: &HomoclinicCell,
    n_max: u32,
    grid: usize,
) -> Result<Vec<BlockReport>> {
    if n_max > 16 {
        return Err(Error::Config(format!("n_max {n_max} above the desk-scale cap of 16")));
    }
    let mut reports = Vec::new();
    for n in 1..=n_max {
        match find_block(map, cell, n, grid) {
            Ok(r) => reports.push(r),
            Err(e) => reports.push(BlockReport {
                n,
                orbits: Vec::new(),
                block_points: Vec::new(),
                per_point_indices: Vec::new(),
                block_index: None,
                boundary_winding: None,
                rho: cell.rho,
                matches: false,
                certified: false,
                diagnostics: BlockDiagnostics {
                    grid,
                    seeds_in: 0,
                    uncertain_points: 0,
                    max_residual: f64::NAN,
                    winding_note: Some(format!("search failed: {e}")),
                },
            }),
        }
    }
    Ok(reports)
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitSummary {
    pub anchor: Point,
    pub cardinality: u32,
    pub classification: Classification,
    pub borderline: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct A1LevelReport {
    pub k: u32,
    pub orbits: Vec<OrbitSummary>,
    pub has_attracting_or_repelling: bool,
    pub has_twisted_saddle: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct A1Report {
    pub r: u32,
    pub levels: Vec<A1LevelReport>,
    /// Every 2^k-orbit found in the cell is hyperbolic.
    pub hypothesis_met: bool,
    /// Some level carries an attracting or repelling orbit.
    pub alternative_a: bool,
    /// Every level carries a twisted saddle orbit of cardinality 2^k.
    pub alternative_b: bool,
}

/// Classifies the 2^k-orbits inside the cell for k = 0..r and reports
/// which alternative of the period-doubling dichotomy holds. Findings
/// only: an incomplete search or a non-hyperbolic orbit is reported,
/// never asserted away.
pub fn verify_theorem_a1(
    map: &SmoothPlanarMap,
    cell: &HomoclinicCell,
    r: u32,
    grid: usize,
) -> Result<A1Report> {
    if r > 3 {
        return Err(Error::Config(format!("r = {r} above the desk-scale cap of 3")));
    }
    let mut levels = Vec::new();
    let mut hypothesis_met = true;
    let mut alternative_a = false;
    let mut alternative_b = true;
    for k in 0..=r {
        let n = 1u32 << k;
        let report = find_block(map, cell, n, grid)?;
        let mut orbits = Vec::new();
        let mut has_ar = false;
        let mut has_tw = false;
        for rec in &report.orbits {
            if rec.minimal_period != n {
                continue;
            }
            match rec.classification {
                Classification::Sink | Classification::Source => has_ar = true,
                Classification::TwistedSaddle => has_tw = true,
                Classification::Elliptic | Classification::Nonsimple => hypothesis_met = false,
                Classification::DirectSaddle | Classification::MixedSaddle => {}
            }
            if rec.borderline {
                hypothesis_met = false;
            }
            orbits.push(OrbitSummary {
                anchor: rec.location,
                cardinality: n,
                classification: rec.classification,
                borderline: rec.borderline,
            });
        }
        alternative_a |= has_ar;
        alternative_b &= has_tw;
        levels.push(A1LevelReport {
            k,
            orbits,
            has_attracting_or_repelling: has_ar,
            has_twisted_saddle: has_tw,
        });
    }
    Ok(A1Report { r, levels, hypothesis_met, alternative_a, alternative_b })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::fixed_points::find_periodic_points;
    use crate::homoclinic::{
        build_simple_loop, cell_from_loop, find_homoclinic_points, CellSign,
        DEFAULT_EXCLUSION_RADIUS,
    };
    use crate::manifolds::{grow_branch, seed_branch, BranchKind, BranchSide, GrowSettings};
    use crate::map_model::builtin_map;

    fn duffing_cell() -> (SmoothPlanarMap, HomoclinicCell) {
        let m = builtin_map("duffing_time1", &BTreeMap::new()).unwrap();
        let saddle = find_periodic_points(
            &m,
            1,
            (Point::new(-0.5, -0.5), Point::new(0.5, 0.5)),
            6,
        )
        .unwrap()
        .into_iter()
        .find(|r| r.is_saddle())
        .unwrap();
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
        let pts = find_homoclinic_points(&wu, &ws, DEFAULT_EXCLUSION_RADIUS).unwrap();
        let l = build_simple_loop(&pts[0], &wu, &ws).unwrap();
        let cell = cell_from_loop(&l, &wu, &ws).unwrap();
        (m, cell)
    }

    use crate::map_model::SmoothPlanarMap;

    #[test]
    fn duffing_vn_membership_matches_energy_oracle() {
        let (m, cell) = duffing_cell();
        // the separatrix is invariant, so V_n = V for every n
        for n in 1..=4 {
            assert_eq!(
                vn_membership(&m, &cell, n, Point::new(1.0, 0.0)).unwrap(),
                Membership::In
            );
            assert_eq!(
                vn_membership(&m, &cell, n, Point::new(-1.0, 0.0)).unwrap(),
                Membership::Out
            );
            assert_eq!(
                vn_membership(&m, &cell, n, cell.hloop.p).unwrap(),
                Membership::Uncertain
            );
        }
        // interior samples on the energy oracle: H < 0 and x > 0 is the lobe
        for i in 0..50 {
            let x = 0.3 + 0.02 * i as f64;
            let p = Point::new(x, 0.2);
            let h = p.y * p.y / 2.0 - p.x * p.x / 2.0 + p.x.powi(4) / 4.0;
            let inside = h < -1e-4 && p.x > 0.0;
            let got = vn_membership(&m, &cell, 3, p).unwrap();
            if inside {
                assert_eq!(got, Membership::In, "at {p:?}, H = {h}");
            }
        }
    }

    #[test]
    fn vn_is_monotone_in_n() {
        let (m, cell) = duffing_cell();
        for i in 0..10 {
            for j in 0..10 {
                let p = Point::new(0.2 + 0.12 * i as f64, -0.5 + 0.11 * j as f64);
                let mut prev = vn_membership(&m, &cell, 1, p).unwrap();
                for n in 2..=5 {
                    let cur = vn_membership(&m, &cell, n, p).unwrap();
                    if prev == Membership::Out {
                        assert_eq!(cur, Membership::Out, "{p:?} re-entered V_{n}");
                    }
                    prev = cur;
                }
            }
        }
    }

    #[test]
    fn duffing_block_index_is_rho_for_n_up_to_4() {
        let (m, cell) = duffing_cell();
        assert_eq!(cell.rho, 1);
        let reports = verify_theorem_a(&m, &cell, 4, 24).unwrap();
        for rep in &reports {
            assert!(rep.certified, "n = {} not certified: {:?}", rep.n, rep.diagnostics);
            assert_eq!(rep.block_points.len(), 1, "n = {}: {:?}", rep.n, rep.block_points);
            assert!(rep.block_points[0].dist(Point::new(1.0, 0.0)) < 1e-8);
            assert_eq!(rep.block_index, Some(1));
            assert_eq!(rep.boundary_winding, Some(1), "n = {}: {:?}", rep.n, rep.diagnostics);
            assert!(rep.matches);
            // the saddle on the boundary never enters the block
            assert!(rep
                .block_points
                .iter()
                .all(|q| q.dist(cell.hloop.p) > 1e-3));
        }
    }

    #[test]
    fn duffing_a1_hypothesis_is_void() {
        let (m, cell) = duffing_cell();
        let rep = verify_theorem_a1(&m, &cell, 1, 24).unwrap();
        // the interior fixed point is elliptic: the dichotomy's
        // hyperbolicity hypothesis fails and the report says so
        assert!(!rep.hypothesis_met);
        assert_eq!(rep.levels[0].orbits.len(), 1);
        assert_eq!(rep.levels[0].orbits[0].classification, Classification::Elliptic);
    }

    #[test]
    fn small_grid_is_rejected() {
        let (m, cell) = duffing_cell();
        assert!(matches!(find_block(&m, &cell, 1, 10), Err(Error::Config(_))));
    }

    #[test]
    fn tangle_cell_block_matches_rho() {
        let mut ps = BTreeMap::new();
        ps.insert("alpha".to_string(), (0.24f64).acos());
        let m = builtin_map("area_preserving_henon", &ps).unwrap();
        let saddle = find_periodic_points(
            &m,
            1,
            (Point::new(-2.0, -2.0), Point::new(2.0, 2.0)),
            40,
        )
        .unwrap()
        .into_iter()
        .find(|r| r.is_saddle())
        .unwrap();
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
        let primary = pts.iter().find(|p| p.transversal).unwrap();
        let l = build_simple_loop(primary, &wu, &ws).unwrap();
        assert!(l.simple);
        let cell = cell_from_loop(&l, &wu, &ws).unwrap();
        let rep = find_block(&m, &cell, 1, 32).unwrap();
        assert!(rep.certified, "diagnostics: {:?}", rep.diagnostics);
        assert!(rep.matches, "block {:?} vs rho {}: {:?}", rep.block_index, rep.rho, rep.diagnostics);
        if let (Some(w), Some(b)) = (rep.boundary_winding, rep.block_index) {
            assert_eq!(w, b, "winding oracle disagrees with the index sum");
        }
        // consistency with the sign dichotomy
        match cell.sign {
            CellSign::Positive => assert_eq!(rep.block_index, Some(1)),
            CellSign::Negative => assert_eq!(rep.block_index, Some(2)),
        }
    }
}
