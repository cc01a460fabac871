//! Scenario configuration, run reports, and artifact rendering (CSV
//! polylines, SVG portraits).

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fixed_points::{Classification, FixedPointRecord};
use crate::homoclinic::HomoclinicCell;
use crate::manifolds::{BranchKind, BranchSide, ManifoldBranch};
use crate::map_model::MapSpec;
use crate::sphere::SphereSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    FindFixedPoints,
    GrowManifolds,
    FindCell,
    VerifyTheoremA,
    VerifyTheoremA1,
    SphereCheck,
    LefschetzCheck,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::FindFixedPoints => "find_fixed_points",
            Task::GrowManifolds => "grow_manifolds",
            Task::FindCell => "find_cell",
            Task::VerifyTheoremA => "verify_theorem_a",
            Task::VerifyTheoremA1 => "verify_theorem_a1",
            Task::SphereCheck => "sphere_check",
            Task::LefschetzCheck => "lefschetz_check",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum SphereConfig {
    #[serde(rename = "fixture")]
    Fixture(String),
    #[serde(rename = "charts")]
    Charts(Box<SphereSpec>),
}

fn side_default() -> String {
    "plus".to_string()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Search rectangle [[x0, y0], [x1, y1]] for fixed points.
    pub region: [[f64; 2]; 2],
    pub fixed_point_grid: usize,
    /// Seeding grid for block searches inside the cell.
    pub seed_grid: usize,
    pub target_arclength: f64,
    pub h_max: f64,
    pub alpha_max: f64,
    /// Seeding distance for manifold branches.
    pub delta: f64,
    pub unstable_side: String,
    pub stable_side: String,
    pub exclusion_radius: f64,
    /// Which transversal intersection becomes p' (0 = smallest t_u).
    pub homoclinic_index: usize,
    pub n_max: u32,
    pub a1_r: u32,
    pub sphere_grid: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            region: [[-2.0, -2.0], [2.0, 2.0]],
            fixed_point_grid: 20,
            seed_grid: 24,
            target_arclength: 6.0,
            h_max: 0.01,
            alpha_max: 0.2,
            delta: 1e-6,
            unstable_side: side_default(),
            stable_side: side_default(),
            exclusion_radius: 1e-3,
            homoclinic_index: 0,
            n_max: 4,
            a1_r: 1,
            sphere_grid: 30,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        let positives = [
            ("target_arclength", self.target_arclength),
            ("h_max", self.h_max),
            ("alpha_max", self.alpha_max),
            ("delta", self.delta),
            ("exclusion_radius", self.exclusion_radius),
        ];
        for (name, v) in positives {
            if !(v > 0.0) {
                return Err(Error::Config(format!("analysis.{name} must be positive, got {v}")));
            }
        }
        if self.region[0][0] >= self.region[1][0] || self.region[0][1] >= self.region[1][1] {
            return Err(Error::Config("analysis.region has empty extent".into()));
        }
        for side in [&self.unstable_side, &self.stable_side] {
            if side != "plus" && side != "minus" {
                return Err(Error::Config(format!("branch side `{side}` is not plus/minus")));
            }
        }
        Ok(())
    }

    pub fn side(&self, kind: BranchKind) -> BranchSide {
        let s = match kind {
            BranchKind::Unstable => &self.unstable_side,
            BranchKind::Stable => &self.stable_side,
        };
        if s == "minus" {
            BranchSide::Minus
        } else {
            BranchSide::Plus
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub map: Option<MapSpec>,
    #[serde(default)]
    pub sphere: Option<SphereConfig>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    pub tasks: Vec<Task>,
}

impl ScenarioConfig {
    pub fn from_bytes(bytes: &[u8]) -> Result<ScenarioConfig> {
        let cfg: ScenarioConfig = serde_json::from_slice(bytes)?;
        cfg.analysis.validate()?;
        if cfg.map.is_none() && cfg.sphere.is_none() {
            return Err(Error::Config("scenario needs a `map` or a `sphere` block".into()));
        }
        Ok(cfg)
    }
}

pub fn config_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    format!("sha256:{:x}", h.finalize())
}

/// Assembles the final report document. Timings live in their own
/// block so that reruns are byte-identical everywhere else.
pub fn assemble_report(
    scenario: &str,
    hash: &str,
    tasks: Vec<Value>,
    timings_ms: Vec<(String, u128)>,
    verified: bool,
) -> Value {
    let mut timings = serde_json::Map::new();
    for (k, v) in timings_ms {
        timings.insert(k, json!(v));
    }
    json!({
        "tool": {"name": "homcell", "version": env!("CARGO_PKG_VERSION")},
        "scenario": scenario,
        "config_hash": hash,
        "tasks": tasks,
        "verified": verified,
        "timings_ms": Value::Object(timings),
    })
}

/// Structural validation against the published schema
/// (schema/report.schema.json): required keys and basic shapes.
pub fn validate_report(v: &Value) -> Result<()> {
    let obj = v.as_object().ok_or_else(|| Error::Config("report is not an object".into()))?;
    for key in ["tool", "scenario", "config_hash", "tasks", "verified", "timings_ms"] {
        if !obj.contains_key(key) {
            return Err(Error::Config(format!("report misses required key `{key}`")));
        }
    }
    let tool = obj["tool"]
        .as_object()
        .ok_or_else(|| Error::Config("report.tool is not an object".into()))?;
    if !tool.contains_key("name") || !tool.contains_key("version") {
        return Err(Error::Config("report.tool needs name and version".into()));
    }
    let tasks = obj["tasks"]
        .as_array()
        .ok_or_else(|| Error::Config("report.tasks is not an array".into()))?;
    for t in tasks {
        let t = t.as_object().ok_or_else(|| Error::Config("task entry not an object".into()))?;
        if !t.contains_key("task") || !t.contains_key("status") {
            return Err(Error::Config("task entry needs `task` and `status`".into()));
        }
    }
    if !obj["verified"].is_boolean() {
        return Err(Error::Config("report.verified is not a boolean".into()));
    }
    Ok(())
}

pub fn branch_csv_name(branch: &ManifoldBranch) -> String {
    let kind = match branch.kind {
        BranchKind::Unstable => "unstable",
        BranchKind::Stable => "stable",
    };
    let side = match branch.side {
        BranchSide::Plus => "plus",
        BranchSide::Minus => "minus",
    };
    format!("{kind}_{side}.csv")
}

pub fn branch_csv(branch: &ManifoldBranch) -> String {
    let mut out = String::from("t,x,y\n");
    for (t, p) in branch.params.iter().zip(&branch.polyline) {
        out.push_str(&format!("{t:e},{:e},{:e}\n", p.x, p.y));
    }
    out
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

/// Deterministic SVG phase portrait: stable/unstable branches with
/// distinct stroke classes, the cell interior shaded, and fixed points
/// glyph-coded by classification. The y axis points up.
pub fn render_portrait(
    branches: &[&ManifoldBranch],
    cell: Option<&HomoclinicCell>,
    fixed_points: &[FixedPointRecord],
) -> Result<String> {
    if branches.is_empty() && cell.is_none() && fixed_points.is_empty() {
        return Err(Error::Config("nothing to draw".into()));
    }
    let mut lo = crate::geom::Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = crate::geom::Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut cover = |p: &crate::geom::Point| {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    };
    for b in branches {
        b.polyline.iter().for_each(&mut cover);
    }
    if let Some(c) = cell {
        c.polygon.vertices.iter().for_each(&mut cover);
    }
    fixed_points.iter().for_each(|r| cover(&r.location));
    if !lo.x.is_finite() {
        return Err(Error::Config("no drawable geometry".into()));
    }
    let span = (hi.x - lo.x).max(hi.y - lo.y).max(1e-6);
    let pad = 0.05 * span;
    let (x0, y0) = (lo.x - pad, -(hi.y + pad));
    let (w, h) = (hi.x - lo.x + 2.0 * pad, hi.y - lo.y + 2.0 * pad);
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">\n",
        fmt(x0),
        fmt(y0),
        fmt(w),
        fmt(h)
    ));
    svg.push_str(
        "<style>.unstable{stroke:#c0392b;fill:none}.stable{stroke:#2471a3;fill:none}\
         .cell{fill:#f9e79f;fill-opacity:0.6;stroke:none}\
         .saddle{fill:#000}.elliptic{fill:#27ae60}.sink{fill:#2471a3}.source{fill:#c0392b}\
         .other{fill:#7f8c8d}</style>\n",
    );
    let sw = fmt(0.004 * span);
    if let Some(c) = cell {
        svg.push_str("<path class=\"cell\" d=\"");
        for (i, v) in c.polygon.vertices.iter().enumerate() {
            svg.push_str(if i == 0 { "M" } else { "L" });
            svg.push_str(&format!("{},{} ", fmt(v.x), fmt(-v.y)));
        }
        svg.push_str("Z\"/>\n");
    }
    for b in branches {
        let class = match b.kind {
            BranchKind::Unstable => "unstable",
            BranchKind::Stable => "stable",
        };
        svg.push_str(&format!("<polyline class=\"{class}\" stroke-width=\"{sw}\" points=\""));
        for p in &b.polyline {
            svg.push_str(&format!("{},{} ", fmt(p.x), fmt(-p.y)));
        }
        svg.push_str("\"/>\n");
    }
    let r_glyph = fmt(0.012 * span);
    for rec in fixed_points {
        let class = match rec.classification {
            Classification::DirectSaddle
            | Classification::TwistedSaddle
            | Classification::MixedSaddle => "saddle",
            Classification::Elliptic => "elliptic",
            Classification::Sink => "sink",
            Classification::Source => "source",
            Classification::Nonsimple => "other",
        };
        svg.push_str(&format!(
            "<circle class=\"{class}\" cx=\"{}\" cy=\"{}\" r=\"{r_glyph}\"/>\n",
            fmt(rec.location.x),
            fmt(-rec.location.y)
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let cfg = ScenarioConfig::from_bytes(
            br#"{"map": {"kind": "builtin", "name": "duffing_time1"}, "tasks": [], "zzz": 1}"#,
        );
        assert!(cfg.is_err());
        let cfg = ScenarioConfig::from_bytes(
            br#"{"map": {"kind": "builtin", "name": "duffing_time1"},
                 "analysis": {"h_max": -1.0}, "tasks": []}"#,
        );
        assert!(matches!(cfg, Err(Error::Config(_))));
    }

    #[test]
    fn config_requires_some_map() {
        let cfg = ScenarioConfig::from_bytes(br#"{"tasks": ["find_fixed_points"]}"#);
        assert!(matches!(cfg, Err(Error::Config(_))));
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(config_hash(b"abc"), config_hash(b"abc"));
        assert_ne!(config_hash(b"abc"), config_hash(b"abd"));
        assert!(config_hash(b"abc").starts_with("sha256:"));
    }

    #[test]
    fn report_validates_against_schema_shape() {
        let rep = assemble_report(
            "demo",
            "sha256:00",
            vec![serde_json::json!({"task": "find_fixed_points", "status": "ok"})],
            vec![("find_fixed_points".into(), 3)],
            true,
        );
        validate_report(&rep).unwrap();
        let mut broken = rep.clone();
        broken.as_object_mut().unwrap().remove("verified");
        assert!(validate_report(&broken).is_err());
    }

    #[test]
    fn empty_portrait_is_refused() {
        assert!(render_portrait(&[], None, &[]).is_err());
    }
}
