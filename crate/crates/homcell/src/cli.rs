//! The `homcell` binary: runs JSON scenarios and lists the map zoo.
//!
//! Exit codes: 0 all requested verifications hold, 1 a verification
//! mismatched, 2 the configuration is unusable, 3 a numeric
//! certification failed (e.g. an index refused to certify or no
//! homoclinic point exists).

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::error::Error;
use crate::fixed_points::{find_periodic_points, Classification, FixedPointRecord};
use crate::geom::Point;
use crate::homoclinic::{build_simple_loop, cell_from_loop, find_homoclinic_points, HomoclinicCell};
use crate::index::index_at_point;
use crate::manifolds::{grow_branch, seed_branch, BranchKind, GrowSettings, ManifoldBranch};
use crate::map_model::{zoo_catalog, SmoothPlanarMap};
use crate::periodic_cell::{verify_theorem_a, verify_theorem_a1};
use crate::report::{
    assemble_report, branch_csv, branch_csv_name, config_hash, render_portrait, validate_report,
    ScenarioConfig, SphereConfig, Task,
};
use crate::sphere::{
    component_indices, lefschetz_bound_check, sphere_fixed_points, sphere_fixture, SphereMap,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Parser)]
#[command(name = "homcell", version, about = "Fixed-point indices and homoclinic cells")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write report.json plus artifacts.
    Run {
        /// Path to a scenario JSON file.
        config: PathBuf,
        /// Output directory (default: out/<scenario name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override analysis.seed_grid.
        #[arg(long)]
        seed_grid: Option<usize>,
        /// Suppress the per-task progress lines.
        #[arg(long)]
        quiet: bool,
    },
    /// List the built-in map zoo and sphere fixtures.
    Zoo,
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Syntax { .. }
        | Error::UnknownFunction(_)
        | Error::UnknownIdentifier(_)
        | Error::UnknownBuiltin(_)
        | Error::BadParameter { .. }
        | Error::Config(_)
        | Error::Io(_)
        | Error::Json(_) => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

pub fn main_impl() -> i32 {
    let cli = Cli::parse();
    match cli.command {
        Command::Zoo => {
            for (name, desc, params) in zoo_catalog() {
                if params.is_empty() {
                    println!("{name:24} {desc}");
                } else {
                    println!("{name:24} {desc}  [params: {}]", params.join(", "));
                }
            }
            println!();
            for name in ["north_south", "rotation", "tangle"] {
                println!("sphere:{name:18} sphere fixture");
            }
            EXIT_OK
        }
        Command::Run { config, out, seed_grid, quiet } => {
            let bytes = match fs::read(&config) {
                Ok(b) => b,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return EXIT_CONFIG;
                }
            };
            let mut cfg = match ScenarioConfig::from_bytes(&bytes) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_CONFIG;
                }
            };
            if let Some(g) = seed_grid {
                cfg.analysis.seed_grid = g;
            }
            let name = cfg
                .name
                .clone()
                .or_else(|| {
                    config.file_stem().map(|s| s.to_string_lossy().into_owned())
                })
                .unwrap_or_else(|| "scenario".into());
            let out_dir = out.unwrap_or_else(|| PathBuf::from("out").join(&name));
            // HOMCELL_THREADS is accepted for interface stability; the
            // pipeline is single-threaded so any positive value is fine.
            if let Ok(v) = std::env::var("HOMCELL_THREADS") {
                if v.parse::<usize>().map(|n| n == 0).unwrap_or(true) {
                    eprintln!("error: HOMCELL_THREADS must be a positive integer, got `{v}`");
                    return EXIT_CONFIG;
                }
            }
            match run_scenario(&cfg, &name, &bytes, &out_dir, quiet) {
                Ok(code) => code,
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code_for(&e)
                }
            }
        }
    }
}

/// Mutable pipeline state threaded through the tasks of a scenario.
struct Pipeline {
    map: Option<SmoothPlanarMap>,
    sphere: Option<SphereMap>,
    fixed_points: Vec<FixedPointRecord>,
    sphere_points: Vec<i64>,
    unstable: Option<ManifoldBranch>,
    stable: Option<ManifoldBranch>,
    cell: Option<HomoclinicCell>,
}

fn point_json(p: Point) -> Value {
    json!([p.x, p.y])
}

fn run_scenario(
    cfg: &ScenarioConfig,
    name: &str,
    config_bytes: &[u8],
    out_dir: &Path,
    quiet: bool,
) -> crate::error::Result<i32> {
    let hash = config_hash(config_bytes);
    let sphere = match &cfg.sphere {
        Some(SphereConfig::Fixture(f)) => Some(sphere_fixture(f)?),
        Some(SphereConfig::Charts(spec)) => Some(spec.build()?),
        None => None,
    };
    // planar tasks on a sphere scenario operate in the north chart
    let map = match (&cfg.map, &sphere) {
        (Some(spec), _) => Some(spec.build()?),
        (None, Some(g)) => Some(g.north.clone()),
        (None, None) => None,
    };
    let mut state = Pipeline {
        map,
        sphere,
        fixed_points: Vec::new(),
        sphere_points: Vec::new(),
        unstable: None,
        stable: None,
        cell: None,
    };
    let mut entries: Vec<Value> = Vec::new();
    let mut timings: Vec<(String, u128)> = Vec::new();
    let mut mismatches = 0usize;
    let mut failure: Option<Error> = None;

    for task in &cfg.tasks {
        let started = Instant::now();
        let outcome = run_task(*task, cfg, &mut state);
        timings.push((task.name().to_string(), started.elapsed().as_millis()));
        match outcome {
            Ok((ok, detail)) => {
                let status = if ok { "ok" } else { "mismatch" };
                if !ok {
                    mismatches += 1;
                }
                if !quiet {
                    println!("{:<20} {status}", task.name());
                }
                entries.push(json!({"task": task.name(), "status": status, "result": detail}));
            }
            Err(e) => {
                if exit_code_for(&e) == EXIT_CONFIG {
                    return Err(e);
                }
                if !quiet {
                    println!("{:<20} error: {e}", task.name());
                }
                entries
                    .push(json!({"task": task.name(), "status": "error", "error": e.to_string()}));
                failure = Some(e);
                break;
            }
        }
    }

    let verified = failure.is_none() && mismatches == 0;
    let report = assemble_report(name, &hash, entries, timings, verified);
    validate_report(&report).expect("assembled report matches the schema");
    write_artifacts(out_dir, &report, &state)?;
    if !quiet {
        println!("report: {}", out_dir.join("report.json").display());
    }
    Ok(if let Some(e) = failure {
        exit_code_for(&e)
    } else if mismatches > 0 {
        EXIT_MISMATCH
    } else {
        EXIT_OK
    })
}

fn write_artifacts(
    out_dir: &Path,
    report: &Value,
    state: &Pipeline,
) -> crate::error::Result<()> {
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("report.json"), serde_json::to_string_pretty(report)? + "\n")?;
    let branches: Vec<&ManifoldBranch> =
        state.unstable.iter().chain(state.stable.iter()).collect();
    if !branches.is_empty() {
        let dir = out_dir.join("branches");
        fs::create_dir_all(&dir)?;
        for b in &branches {
            fs::write(dir.join(branch_csv_name(b)), branch_csv(b))?;
        }
    }
    if !branches.is_empty() || !state.fixed_points.is_empty() {
        let svg = render_portrait(&branches, state.cell.as_ref(), &state.fixed_points)?;
        fs::write(out_dir.join("portrait.svg"), svg)?;
    }
    Ok(())
}

fn require_map<'a>(state: &'a Pipeline, task: Task) -> crate::error::Result<&'a SmoothPlanarMap> {
    state
        .map
        .as_ref()
        .ok_or_else(|| Error::Config(format!("{} needs a planar map", task.name())))
}

/// Returns (verification ok, detail). Errors abort the scenario.
fn run_task(
    task: Task,
    cfg: &ScenarioConfig,
    state: &mut Pipeline,
) -> crate::error::Result<(bool, Value)> {
    let a = &cfg.analysis;
    match task {
        Task::FindFixedPoints => {
            let map = require_map(state, task)?;
            let region = (
                Point::new(a.region[0][0], a.region[0][1]),
                Point::new(a.region[1][0], a.region[1][1]),
            );
            let mut records = find_periodic_points(map, 1, region, a.fixed_point_grid)?;
            for rec in &mut records {
                rec.index = Some(index_at_point(map, 1, rec.location)?);
            }
            let detail = serde_json::to_value(&records)?;
            state.fixed_points = records;
            Ok((true, json!({"count": state.fixed_points.len(), "records": detail})))
        }
        Task::GrowManifolds => {
            let map = require_map(state, task)?.clone();
            let saddle = state
                .fixed_points
                .iter()
                .find(|r| r.is_saddle() || r.classification == Classification::MixedSaddle)
                .cloned()
                .ok_or_else(|| Error::NotASaddle("no saddle among the fixed points".into()))?;
            let settings = GrowSettings { alpha_max: a.alpha_max, h_max: a.h_max, ..Default::default() };
            let mut detail = serde_json::Map::new();
            for kind in [BranchKind::Unstable, BranchKind::Stable] {
                let seed = seed_branch(&map, &saddle, kind, a.side(kind), a.delta)?;
                let branch = grow_branch(&map, seed, a.target_arclength, &settings)?;
                let key = match kind {
                    BranchKind::Unstable => "unstable",
                    BranchKind::Stable => "stable",
                };
                detail.insert(
                    key.to_string(),
                    json!({
                        "side": branch.side,
                        "arclength": branch.arclength,
                        "vertices": branch.polyline.len(),
                        "stop": branch.stop,
                    }),
                );
                match kind {
                    BranchKind::Unstable => state.unstable = Some(branch),
                    BranchKind::Stable => state.stable = Some(branch),
                }
            }
            Ok((true, Value::Object(detail)))
        }
        Task::FindCell => {
            let (wu, ws) = match (&state.unstable, &state.stable) {
                (Some(u), Some(s)) => (u, s),
                _ => return Err(Error::Config("find_cell needs grown manifolds".into())),
            };
            let points = find_homoclinic_points(wu, ws, a.exclusion_radius)?;
            let transversal: Vec<_> = points.iter().filter(|p| p.transversal).collect();
            let chosen = if transversal.is_empty() {
                points.first()
            } else {
                transversal.get(a.homoclinic_index).copied()
            }
            .ok_or_else(|| Error::NoHomoclinicPoint("no usable intersection".into()))?
            .clone();
            let hloop = build_simple_loop(&chosen, wu, ws)?;
            let cell = cell_from_loop(&hloop, wu, ws)?;
            let detail = json!({
                "intersections": points.len(),
                "transversal": transversal.len(),
                "p": point_json(cell.hloop.p),
                "p_prime": point_json(cell.hloop.p_prime),
                "sign": cell.sign,
                "rho": cell.rho,
                "area": cell.polygon.signed_area(),
                "vertices": cell.polygon.vertices.len(),
            });
            state.cell = Some(cell);
            Ok((true, detail))
        }
        Task::VerifyTheoremA => {
            let map = require_map(state, task)?;
            let cell = state
                .cell
                .as_ref()
                .ok_or_else(|| Error::Config("verify_theorem_a needs a cell".into()))?;
            let reports = verify_theorem_a(map, cell, a.n_max, a.seed_grid)?;
            if let Some(bad) = reports.iter().find(|r| !r.certified) {
                return Err(Error::RefinementExhausted(format!(
                    "block search for n = {} did not certify: {}",
                    bad.n,
                    bad.diagnostics
                        .winding_note
                        .clone()
                        .unwrap_or_else(|| "see diagnostics".into())
                )));
            }
            let ok = reports.iter().all(|r| r.matches);
            Ok((ok, serde_json::to_value(&reports)?))
        }
        Task::VerifyTheoremA1 => {
            let map = require_map(state, task)?;
            let cell = state
                .cell
                .as_ref()
                .ok_or_else(|| Error::Config("verify_theorem_a1 needs a cell".into()))?;
            let report = verify_theorem_a1(map, cell, a.a1_r, a.seed_grid)?;
            // findings, not a verdict: the dichotomy only speaks under
            // its hyperbolicity hypothesis
            let ok = !report.hypothesis_met || report.alternative_a || report.alternative_b;
            Ok((ok, serde_json::to_value(&report)?))
        }
        Task::SphereCheck => {
            let g = state
                .sphere
                .as_ref()
                .ok_or_else(|| Error::Config("sphere_check needs a sphere block".into()))?;
            let points = sphere_fixed_points(g, a.sphere_grid)?;
            let total: i64 = points.iter().map(|(_, r)| r.index.unwrap_or(0)).sum();
            state.sphere_points = points.iter().filter_map(|(_, r)| r.index).collect();
            let mut ok = total == 2;
            let mut detail = serde_json::Map::new();
            detail.insert("fixed_points".into(), serde_json::to_value(&points)?);
            detail.insert("total_index".into(), json!(total));
            if let Some(cell) = &state.cell {
                let (inner, outer) = component_indices(g, cell, a.sphere_grid)?;
                // the two complementary components of the loop carry
                // indices 1 and 2 and the consistency sum 1 + 2 - 1 = 2
                let consistency = inner + outer + index_at_point(&g.north, 1, cell.hloop.p)?;
                ok = ok
                    && (inner.min(outer), inner.max(outer)) == (1, 2)
                    && consistency == 2;
                detail.insert("component_indices".into(), json!([inner, outer]));
                detail.insert("consistency_sum".into(), json!(consistency));
            }
            Ok((ok, Value::Object(detail)))
        }
        Task::LefschetzCheck => {
            let cell = state
                .cell
                .as_ref()
                .ok_or_else(|| Error::Config("lefschetz_check needs a cell".into()))?;
            let indices: Vec<i64> = if state.sphere.is_some() {
                if state.sphere_points.is_empty() {
                    return Err(Error::Config(
                        "lefschetz_check on a sphere needs sphere_check first".into(),
                    ));
                }
                state.sphere_points.clone()
            } else {
                state
                    .fixed_points
                    .iter()
                    .filter_map(|r| r.index)
                    .collect()
            };
            if indices.is_empty() {
                return Err(Error::Config("lefschetz_check needs fixed-point indices".into()));
            }
            let report = lefschetz_bound_check(&indices, cell.rho)?;
            let ok = report.strong_satisfied && report.weak_satisfied;
            Ok((ok, serde_json::to_value(&report)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_partition_the_errors() {
        assert_eq!(exit_code_for(&Error::Config("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code_for(&Error::UnknownBuiltin("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code_for(&Error::NoHomoclinicPoint("x".into())), EXIT_NUMERIC);
        assert_eq!(exit_code_for(&Error::NotIsolated(1e-8)), EXIT_NUMERIC);
        assert_eq!(exit_code_for(&Error::AmbiguousSign("x".into())), EXIT_NUMERIC);
    }
}
