//! Growth of the four stable/unstable branches at a saddle as refined
//! polylines with parametrizations.
//!
//! The branch is built from a fundamental arc near the saddle whose
//! forward images tile the branch. Seeds are placed on the eigenline at
//! distance delta and pushed through one corrective iterate, so the
//! transverse seeding error is contracted before any arc is emitted.
//! Vertex parameters satisfy the equivariance f(zeta(t)) = zeta(t+1)
//! exactly at vertices by construction: the image of the seed at (k, s)
//! is the seed at (k+1, s).
//!
//! ```
//! use homcell::fixed_points::find_periodic_points;
//! use homcell::geom::Point;
//! use homcell::manifolds::{grow_branch, seed_branch, BranchKind, BranchSide, GrowSettings};
//! use homcell::map_model::builtin_map;
//! use std::collections::BTreeMap;
//!
//! let map = builtin_map("duffing_time1", &BTreeMap::new()).unwrap();
//! let region = (Point::new(-2.0, -2.0), Point::new(2.0, 2.0));
//! let records = find_periodic_points(&map, 1, region, 10).unwrap();
//! let saddle = records.iter().find(|r| r.is_saddle()).unwrap();
//! let seed = seed_branch(&map, saddle, BranchKind::Unstable, BranchSide::Plus, 1e-6).unwrap();
//! let branch = grow_branch(&map, seed, 1.0, &GrowSettings::default()).unwrap();
//! assert!(branch.arclength >= 1.0);
//! ```

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixed_points::{Classification, FixedPointRecord};
use crate::geom::Point;
use crate::map_model::SmoothPlanarMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchKind {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchSide {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Seeded,
    TargetReached,
    /// Fundamental-domain images stopped adding arclength (homoclinic
    /// return to the saddle).
    Stagnated,
    RefinementExhausted,
    LeftWorkingRectangle,
    MaxGenerations,
}

#[derive(Debug, Clone, Copy)]
pub struct GrowSettings {
    pub alpha_max: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_generations: u32,
    /// A generation adding less than this arclength stops the growth.
    pub stagnation_arclength: f64,
}

impl Default for GrowSettings {
    fn default() -> Self {
        GrowSettings {
            alpha_max: 0.2,
            h_max: 0.05,
            h_min: 1e-9,
            max_generations: 100,
            stagnation_arclength: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ManifoldBranch {
    pub saddle: Point,
    pub kind: BranchKind,
    pub side: BranchSide,
    /// Unit eigenvector of the branch direction (already signed by side).
    pub eigenvector: Point,
    /// Expansion rate of the growth map along the branch (> 1).
    pub eigenvalue: f64,
    /// Iterate of the base map used for growth: the orbit period, doubled
    /// for twisted saddles so eigenvalues are positive.
    pub power: u32,
    pub polyline: Vec<Point>,
    /// Parameter of each polyline vertex; 0 at the saddle.
    pub params: Vec<f64>,
    pub arclength: f64,
    pub stop: StopReason,
    delta: f64,
    seeds: Vec<f64>,
    points: Vec<Point>,
    closing: Point,
    generation: u32,
}

impl ManifoldBranch {
    fn apply(&self, map: &SmoothPlanarMap, p: Point) -> Result<Point> {
        match self.kind {
            BranchKind::Unstable => map.iterate(p, self.power),
            BranchKind::Stable => map.iterate_inverse(p, self.power),
        }
    }

    /// Seed point for parameter s in [0, 1): eigenline point pushed
    /// through one corrective iterate of the growth map.
    fn seed_point(&self, map: &SmoothPlanarMap, s: f64) -> Result<Point> {
        let r = self.delta / self.eigenvalue * (1.0 + s * (self.eigenvalue - 1.0));
        let on_line = self.saddle + self.eigenvector.scale(r);
        self.apply(map, on_line)
    }

    fn point_at(&self, map: &SmoothPlanarMap, generation: u32, s: f64) -> Result<Point> {
        let mut p = self.seed_point(map, s)?;
        for _ in 0..generation {
            p = self.apply(map, p)?;
        }
        Ok(p)
    }

    /// Piecewise-linear parametrization lookup; zeta(0) is the saddle.
    pub fn zeta(&self, t: f64) -> Result<Point> {
        if t == 0.0 {
            return Ok(self.saddle);
        }
        let last = *self.params.last().ok_or_else(|| Error::OutOfRange("empty branch".into()))?;
        if t < 0.0 || t > last {
            return Err(Error::OutOfRange(format!("t = {t} outside [0, {last}]")));
        }
        let idx = match self.params.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => return Ok(self.polyline[i]),
            Err(i) => i,
        };
        let (t0, t1) = (self.params[idx - 1], self.params[idx]);
        let frac = (t - t0) / (t1 - t0);
        Ok(self.polyline[idx - 1].lerp(self.polyline[idx], frac))
    }

    pub fn param_range(&self) -> (f64, f64) {
        (0.0, self.params.last().copied().unwrap_or(0.0))
    }

    /// Parameter of the polyline vertex nearest in position to `p`,
    /// refined over the two adjacent segments.
    pub fn project(&self, p: Point) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for i in 0..self.polyline.len().saturating_sub(1) {
            let a = self.polyline[i];
            let b = self.polyline[i + 1];
            let ab = b - a;
            let len_sq = ab.norm_sq();
            let s = if len_sq == 0.0 { 0.0 } else { ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0) };
            let cand = a.lerp(b, s);
            let d = cand.dist(p);
            let t = self.params[i] + s * (self.params[i + 1] - self.params[i]);
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((t, d));
            }
        }
        best
    }
}

/// Builds the fundamental arc of a branch: 16 seed points spanning
/// [q, g(q)] with q at distance `delta` along the eigenvector.
pub fn seed_branch(
    map: &SmoothPlanarMap,
    saddle: &FixedPointRecord,
    kind: BranchKind,
    side: BranchSide,
    delta: f64,
) -> Result<ManifoldBranch> {
    if !(1e-8..=1e-3).contains(&delta) {
        return Err(Error::Config(format!("seed delta {delta:e} outside [1e-8, 1e-3]")));
    }
    let power = match saddle.classification {
        Classification::DirectSaddle => saddle.n,
        // twisted/mixed saddles: grow for the square, whose eigenvalues
        // are positive
        Classification::TwistedSaddle | Classification::MixedSaddle => 2 * saddle.n,
        other => {
            return Err(Error::NotASaddle(format!("classification {other:?} at {:?}", saddle.location)))
        }
    };
    if kind == BranchKind::Stable && !map.has_inverse() {
        return Err(Error::NoInverse(format!(
            "stable branch growth at {:?} needs an inverse evaluator",
            saddle.location
        )));
    }
    let jac = map.iterate_jacobian(saddle.location, power)?;
    let eigs = jac.eigenvalues();
    let (mu, lambda) = (eigs[0].0, eigs[1].0);
    if eigs[0].1.abs() > 1e-9 || !(mu > 1.0 && lambda > 0.0 && lambda < 1.0) {
        return Err(Error::NotASaddle(format!(
            "eigenvalues {eigs:?} of df^{power} are not a direct-saddle pair"
        )));
    }
    let (growth_eig, vector_eig) = match kind {
        BranchKind::Unstable => (mu, mu),
        BranchKind::Stable => (1.0 / lambda, lambda),
    };
    let mut v = jac
        .eigenvector(vector_eig)
        .ok_or_else(|| Error::NotASaddle("defective Jacobian".into()))?;
    // canonical sign: positive x, break ties by positive y
    if v.x < 0.0 || (v.x == 0.0 && v.y < 0.0) {
        v = -v;
    }
    if side == BranchSide::Minus {
        v = -v;
    }
    let mut branch = ManifoldBranch {
        saddle: saddle.location,
        kind,
        side,
        eigenvector: v,
        eigenvalue: growth_eig,
        power,
        polyline: vec![saddle.location],
        params: vec![0.0],
        arclength: 0.0,
        stop: StopReason::Seeded,
        delta,
        seeds: (0..16).map(|i| i as f64 / 16.0).collect(),
        points: Vec::new(),
        closing: Point::ZERO,
        generation: 0,
    };
    branch.points = branch
        .seeds
        .clone()
        .iter()
        .map(|s| branch.seed_point(map, *s))
        .collect::<Result<Vec<_>>>()?;
    branch.closing = branch.apply(map, branch.points[0])?;
    // first segment should follow the eigenvector
    let dir = (branch.points[0] - saddle.location).normalized();
    let angle = dir.cross(v).atan2(dir.dot(v)).abs();
    if angle > 1e-3 {
        return Err(Error::NotASaddle(format!(
            "fundamental arc departs {angle:.2e} rad from the eigenvector"
        )));
    }
    Ok(branch)
}

/// Grows a seeded branch to `target_arclength`, adaptively refining each
/// fundamental-domain image so that no segment exceeds `h_max` or turns
/// more than `alpha_max`.
pub fn grow_branch(
    map: &SmoothPlanarMap,
    mut branch: ManifoldBranch,
    target_arclength: f64,
    settings: &GrowSettings,
) -> Result<ManifoldBranch> {
    // emit the seeded fundamental domain as generation 0 (params [1, 2])
    if branch.generation == 0 && branch.polyline.len() == 1 {
        refine_generation(map, &mut branch, settings)?;
        emit_generation(&mut branch);
    }
    let mut prev_gain = f64::INFINITY;
    while branch.arclength < target_arclength {
        if branch.generation + 1 >= settings.max_generations {
            branch.stop = StopReason::MaxGenerations;
            return Ok(branch);
        }
        // advance every seed one application of the growth map
        let mut next = Vec::with_capacity(branch.points.len());
        for p in &branch.points {
            let q = branch.apply(map, *p)?;
            next.push(q);
        }
        let new_closing = branch.apply(map, next[0])?;
        branch.points = next;
        branch.closing = new_closing;
        branch.generation += 1;
        if branch.points.iter().chain([&branch.closing]).any(|p| !map.in_working_rect(*p)) {
            branch.stop = StopReason::LeftWorkingRectangle;
            return Ok(branch);
        }
        // stop before refinement when the advanced generation contributes no
        // meaningful arclength; otherwise accumulated integration noise near a
        // limiting fixed point drives a runaway subdivision cascade
        let raw_gain: f64 = branch
            .points
            .iter()
            .chain([&branch.closing])
            .zip(branch.points.iter().skip(1).chain([&branch.closing]))
            .map(|(a, b)| (*b - *a).norm())
            .sum();
        if raw_gain < settings.stagnation_arclength {
            branch.stop = StopReason::Stagnated;
            return Ok(branch);
        }
        let exhausted = refine_generation(map, &mut branch, settings)?;
        let before = branch.arclength;
        let polyline_len = branch.polyline.len();
        emit_generation(&mut branch);
        if exhausted {
            branch.stop = StopReason::RefinementExhausted;
            return Ok(branch);
        }
        let gain = branch.arclength - before;
        // once gains have decayed to a negligible share of the total length,
        // a rise can only come from accumulated integration noise; drop the
        // noisy generation and report convergence
        if gain > prev_gain && prev_gain < 1e-6 * branch.arclength {
            branch.polyline.truncate(polyline_len);
            branch.params.truncate(polyline_len);
            branch.arclength = before;
            branch.stop = StopReason::Stagnated;
            return Ok(branch);
        }
        prev_gain = gain;
        if gain < settings.stagnation_arclength {
            branch.stop = StopReason::Stagnated;
            return Ok(branch);
        }
    }
    branch.stop = StopReason::TargetReached;
    Ok(branch)
}

/// Inserts midpoint preimages until the current generation satisfies the
/// length and turn bounds. Returns true when h_min stopped refinement.
fn refine_generation(
    map: &SmoothPlanarMap,
    branch: &mut ManifoldBranch,
    settings: &GrowSettings,
) -> Result<bool> {
    let mut exhausted = false;
    loop {
        let n = branch.points.len();
        let mut insert_at: Option<usize> = None;
        {
            let pt = |i: usize| -> Point {
                if i < n {
                    branch.points[i]
                } else {
                    branch.closing
                }
            };
            'scan: for i in 0..n {
                let a = pt(i);
                let b = pt(i + 1);
                let seg = b - a;
                if seg.norm() > settings.h_max && gap_refinable(branch, i, settings) {
                    insert_at = Some(i);
                    break 'scan;
                }
                if i + 1 <= n {
                    // turn at vertex i (needs a predecessor)
                    if i > 0 {
                        let prev = pt(i - 1);
                        let d0 = a - prev;
                        let d1 = seg;
                        // below ~100 h_min the vertex positions are dominated by
                        // integration noise and the turn angle is meaningless
                        let noise_floor = 100.0 * settings.h_min;
                        if d0.norm() > noise_floor && d1.norm() > noise_floor {
                            let turn = d0.cross(d1).atan2(d0.dot(d1)).abs();
                            if turn > settings.alpha_max {
                                // refine the longer adjacent gap
                                let j = if d0.norm() >= d1.norm() { i - 1 } else { i };
                                if gap_refinable(branch, j, settings) {
                                    insert_at = Some(j);
                                    break 'scan;
                                }
                            }
                        }
                    }
                }
            }
        }
        let Some(i) = insert_at else { break };
        if branch.points.len() > 400_000 {
            exhausted = true;
            break;
        }
        let s0 = branch.seeds[i];
        let s1 = if i + 1 < branch.seeds.len() { branch.seeds[i + 1] } else { 1.0 };
        let s_mid = 0.5 * (s0 + s1);
        let p = branch.point_at(map, branch.generation, s_mid)?;
        branch.seeds.insert(i + 1, s_mid);
        branch.points.insert(i + 1, p);
    }
    // second pass purely for bookkeeping: if any unrefinable gap still
    // violates the bounds, report exhaustion
    if !exhausted {
        let n = branch.points.len();
        for i in 0..n {
            let a = branch.points[i];
            let b = if i + 1 < n { branch.points[i + 1] } else { branch.closing };
            if (b - a).norm() > settings.h_max && !gap_refinable(branch, i, settings) {
                exhausted = true;
                break;
            }
        }
    }
    Ok(exhausted)
}

fn gap_refinable(branch: &ManifoldBranch, i: usize, settings: &GrowSettings) -> bool {
    let n = branch.points.len();
    let a = branch.points[i];
    let b = if i + 1 < n { branch.points[i + 1] } else { branch.closing };
    let s0 = branch.seeds[i];
    let s1 = if i + 1 < branch.seeds.len() { branch.seeds[i + 1] } else { 1.0 };
    (b - a).norm() > settings.h_min && (s1 - s0) > 1e-14
}

/// Appends the current generation (seeds plus closing point) to the
/// polyline with parameters k + s.
fn emit_generation(branch: &mut ManifoldBranch) {
    let base = 1.0 + branch.generation as f64;
    let mut prev = *branch.polyline.last().unwrap();
    for (s, p) in branch.seeds.iter().zip(&branch.points) {
        // skip the generation's first point when it duplicates the joint
        if *s == 0.0 && branch.generation > 0 {
            prev = *p;
            continue;
        }
        branch.arclength += prev.dist(*p);
        branch.polyline.push(*p);
        branch.params.push(base + s);
        prev = *p;
    }
    branch.arclength += prev.dist(branch.closing);
    branch.polyline.push(branch.closing);
    branch.params.push(base + 1.0);
}
