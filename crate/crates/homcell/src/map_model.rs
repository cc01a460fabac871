//! Orientation-preserving planar maps with first derivatives, from a
//! builtin zoo, parsed expressions, or time-T flows of planar fields.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::expr::{parse_expression, Expr};
use crate::geom::{Mat2, Point};
use crate::ode::{self, OdeSettings};

pub const DEFAULT_WORKING_RECT: (Point, Point) =
    (Point { x: -10.0, y: -10.0 }, Point { x: 10.0, y: 10.0 });

/// Minimal evaluation interface: enough for winding-number work, where
/// the probed map is often an iterate or a raw closure fixture.
pub trait Map2D: Sync {
    fn eval(&self, p: Point) -> Result<Point>;
}

impl<F: Fn(Point) -> Point + Sync> Map2D for F {
    fn eval(&self, p: Point) -> Result<Point> {
        Ok(self(p))
    }
}

type PointFn = Arc<dyn Fn(Point) -> Point + Send + Sync>;
type MatFn = Arc<dyn Fn(Point) -> Mat2 + Send + Sync>;

/// A planar vector field (dx/dt, dy/dt).
#[derive(Clone)]
pub struct VectorField {
    imp: FieldImpl,
}

#[derive(Clone)]
enum FieldImpl {
    Expression { fx: Expr, fy: Expr, params: BTreeMap<String, f64> },
    Native { name: String, f: PointFn, jac: MatFn },
}

impl VectorField {
    pub fn from_expressions(fx: &str, fy: &str, params: BTreeMap<String, f64>) -> Result<Self> {
        let names: Vec<&str> = params.keys().map(|s| s.as_str()).collect();
        let fx = parse_expression(fx, &names)?;
        let fy = parse_expression(fy, &names)?;
        Ok(VectorField { imp: FieldImpl::Expression { fx, fy, params } })
    }

    pub fn native(
        name: &str,
        f: impl Fn(Point) -> Point + Send + Sync + 'static,
        jac: impl Fn(Point) -> Mat2 + Send + Sync + 'static,
    ) -> Self {
        VectorField {
            imp: FieldImpl::Native { name: name.to_string(), f: Arc::new(f), jac: Arc::new(jac) },
        }
    }

    pub fn eval(&self, p: Point) -> Result<Point> {
        match &self.imp {
            FieldImpl::Expression { fx, fy, params } => {
                Ok(Point::new(fx.eval(p.x, p.y, params)?, fy.eval(p.x, p.y, params)?))
            }
            FieldImpl::Native { f, .. } => Ok(f(p)),
        }
    }

    pub fn jacobian(&self, p: Point) -> Result<Mat2> {
        match &self.imp {
            FieldImpl::Expression { fx, fy, params } => {
                let dx = fx.eval_dual(p.x, p.y, params)?;
                let dy = fy.eval_dual(p.x, p.y, params)?;
                Ok(Mat2::new(dx.dx, dx.dy, dy.dx, dy.dy))
            }
            FieldImpl::Native { jac, .. } => Ok(jac(p)),
        }
    }

    pub fn name(&self) -> &str {
        match &self.imp {
            FieldImpl::Expression { .. } => "expression field",
            FieldImpl::Native { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    Builtin,
    Expression,
    OdeTimeT,
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapKind::Builtin => write!(f, "builtin"),
            MapKind::Expression => write!(f, "expression"),
            MapKind::OdeTimeT => write!(f, "ode_time_T"),
        }
    }
}

#[derive(Clone)]
enum MapImpl {
    /// Closed-form forward/Jacobian/(inverse) evaluators.
    Explicit { f: PointFn, jac: MatFn, inv: Option<PointFn> },
    Expression { fx: Expr, fy: Expr, params: BTreeMap<String, f64> },
    TimeT { field: VectorField, t: f64, settings: OdeSettings },
}

/// An evaluatable planar map f with Jacobian and optional inverse.
#[derive(Clone)]
pub struct SmoothPlanarMap {
    pub name: String,
    pub kind: MapKind,
    pub params: BTreeMap<String, f64>,
    pub working_rect: (Point, Point),
    imp: MapImpl,
}

impl fmt::Debug for SmoothPlanarMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothPlanarMap")
            .field("name", &self.name)
            .field("kind", &self.kind.to_string())
            .field("params", &self.params)
            .finish()
    }
}

impl Map2D for SmoothPlanarMap {
    fn eval(&self, p: Point) -> Result<Point> {
        SmoothPlanarMap::eval(self, p)
    }
}

impl SmoothPlanarMap {
    pub fn from_closures(
        name: &str,
        f: impl Fn(Point) -> Point + Send + Sync + 'static,
        jac: impl Fn(Point) -> Mat2 + Send + Sync + 'static,
        inv: Option<PointFn>,
    ) -> Self {
        SmoothPlanarMap {
            name: name.to_string(),
            kind: MapKind::Builtin,
            params: BTreeMap::new(),
            working_rect: DEFAULT_WORKING_RECT,
            imp: MapImpl::Explicit { f: Arc::new(f), jac: Arc::new(jac), inv },
        }
    }

    pub fn from_expressions(
        name: &str,
        fx: &str,
        fy: &str,
        params: BTreeMap<String, f64>,
    ) -> Result<Self> {
        let names: Vec<&str> = params.keys().map(|s| s.as_str()).collect();
        let fx = parse_expression(fx, &names)?;
        let fy = parse_expression(fy, &names)?;
        Ok(SmoothPlanarMap {
            name: name.to_string(),
            kind: MapKind::Expression,
            params: params.clone(),
            working_rect: DEFAULT_WORKING_RECT,
            imp: MapImpl::Expression { fx, fy, params },
        })
    }

    pub fn eval(&self, p: Point) -> Result<Point> {
        match &self.imp {
            MapImpl::Explicit { f, .. } => Ok(f(p)),
            MapImpl::Expression { fx, fy, params } => {
                Ok(Point::new(fx.eval(p.x, p.y, params)?, fy.eval(p.x, p.y, params)?))
            }
            MapImpl::TimeT { field, t, settings } => {
                ode::flow(&|q| field.eval(q).unwrap_or(Point::new(f64::NAN, f64::NAN)), p, *t, settings)
            }
        }
    }

    pub fn jacobian(&self, p: Point) -> Result<Mat2> {
        match &self.imp {
            MapImpl::Explicit { jac, .. } => Ok(jac(p)),
            MapImpl::Expression { fx, fy, params } => {
                let dx = fx.eval_dual(p.x, p.y, params)?;
                let dy = fy.eval_dual(p.x, p.y, params)?;
                Ok(Mat2::new(dx.dx, dx.dy, dy.dx, dy.dy))
            }
            MapImpl::TimeT { field, t, settings } => {
                let (_, m) = ode::flow_with_jacobian(
                    &|q| field.eval(q).unwrap_or(Point::new(f64::NAN, f64::NAN)),
                    &|q| field.jacobian(q).unwrap_or(Mat2::new(f64::NAN, 0.0, 0.0, f64::NAN)),
                    p,
                    *t,
                    settings,
                )?;
                Ok(m)
            }
        }
    }

    pub fn has_inverse(&self) -> bool {
        match &self.imp {
            MapImpl::Explicit { inv, .. } => inv.is_some(),
            MapImpl::Expression { .. } => true, // Newton inversion
            MapImpl::TimeT { .. } => true,      // time reversal
        }
    }

    /// Inverse evaluation: closed form for builtins that have one, time
    /// reversal for flow maps, damped Newton on the forward map for
    /// expression maps.
    pub fn eval_inverse(&self, p: Point) -> Result<Point> {
        match &self.imp {
            MapImpl::Explicit { inv, .. } => match inv {
                Some(g) => Ok(g(p)),
                None => Err(Error::NoInverse(format!("map `{}`", self.name))),
            },
            MapImpl::TimeT { field, t, settings } => ode::flow(
                &|q| field.eval(q).unwrap_or(Point::new(f64::NAN, f64::NAN)),
                p,
                -*t,
                settings,
            ),
            MapImpl::Expression { .. } => self.newton_invert(p),
        }
    }

    fn newton_invert(&self, target: Point) -> Result<Point> {
        let mut x = target;
        for _ in 0..50 {
            let fx = self.eval(x)?;
            let r = fx - target;
            if r.norm() < 1e-13 {
                return Ok(x);
            }
            let j = self.jacobian(x)?;
            let step = j
                .solve(r)
                .ok_or_else(|| Error::NoInverse("singular Jacobian while inverting".into()))?;
            x = x - step;
            if !x.is_finite() {
                return Err(Error::NoInverse("Newton inversion diverged".into()));
            }
        }
        Err(Error::NoInverse("Newton inversion did not converge in 50 steps".into()))
    }

    /// n-fold composition f^n (n >= 1).
    pub fn iterate(&self, p: Point, n: u32) -> Result<Point> {
        let mut q = p;
        for _ in 0..n {
            q = self.eval(q)?;
        }
        Ok(q)
    }

    pub fn iterate_inverse(&self, p: Point, n: u32) -> Result<Point> {
        let mut q = p;
        for _ in 0..n {
            q = self.eval_inverse(q)?;
        }
        Ok(q)
    }

    /// Jacobian of f^n by the chain rule along the orbit.
    pub fn iterate_jacobian(&self, p: Point, n: u32) -> Result<Mat2> {
        let mut q = p;
        let mut m = Mat2::IDENTITY;
        for _ in 0..n {
            m = self.jacobian(q)?.mul(m);
            q = self.eval(q)?;
        }
        Ok(m)
    }

    pub fn in_working_rect(&self, p: Point) -> bool {
        let (lo, hi) = self.working_rect;
        p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y
    }

    pub fn with_working_rect(mut self, lo: Point, hi: Point) -> Self {
        self.working_rect = (lo, hi);
        self
    }
}

/// Builds the time-T map of a field. The inverse evaluator is the
/// time-(-T) map.
pub fn make_time_t_map(field: VectorField, t: f64) -> Result<SmoothPlanarMap> {
    if t == 0.0 {
        return Err(Error::Config("time-T map requires T != 0".into()));
    }
    let name = format!("time-{t} map of {}", field.name());
    Ok(SmoothPlanarMap {
        name,
        kind: MapKind::OdeTimeT,
        params: BTreeMap::new(),
        working_rect: DEFAULT_WORKING_RECT,
        imp: MapImpl::TimeT { field, t, settings: OdeSettings::default() },
    })
}

pub fn duffing_field() -> VectorField {
    VectorField::native(
        "duffing field (y, x - x^3)",
        |p| Point::new(p.y, p.x - p.x.powi(3)),
        |p| Mat2::new(0.0, 1.0, 1.0 - 3.0 * p.x * p.x, 0.0),
    )
}

/// Descriptions for `homcell zoo`.
pub fn zoo_catalog() -> Vec<(&'static str, &'static str, &'static [&'static str])> {
    vec![
        ("linear_saddle", "(x,y) -> (lambda*x, mu*y), mu > 1 > lambda > 0", &["lambda", "mu"]),
        (
            "twisted_linear_saddle",
            "(x,y) -> (lambda*x, mu*y), mu < -1 < lambda < 0",
            &["lambda", "mu"],
        ),
        ("henon", "(x,y) -> (a - x^2 + b*y, x)", &["a", "b"]),
        (
            "area_preserving_henon",
            "rotation by alpha of (x, y - x^2); det = 1",
            &["alpha"],
        ),
        ("duffing_time1", "time-1 flow of (y, x - x^3)", &[]),
    ]
}

fn get_param(params: &BTreeMap<String, f64>, map: &str, key: &str) -> Result<f64> {
    params
        .get(key)
        .copied()
        .ok_or_else(|| Error::BadParameter { map: map.into(), detail: format!("missing `{key}`") })
}

/// Configures a zoo map by name.
pub fn builtin_map(name: &str, params: &BTreeMap<String, f64>) -> Result<SmoothPlanarMap> {
    let mut map = match name {
        "linear_saddle" => {
            let lambda = get_param(params, name, "lambda")?;
            let mu = get_param(params, name, "mu")?;
            if !(mu > 1.0 && 1.0 > lambda && lambda > 0.0) {
                return Err(Error::BadParameter {
                    map: name.into(),
                    detail: format!("requires mu > 1 > lambda > 0, got lambda={lambda}, mu={mu}"),
                });
            }
            linear_map("linear_saddle", lambda, mu)
        }
        "twisted_linear_saddle" => {
            let lambda = get_param(params, name, "lambda")?;
            let mu = get_param(params, name, "mu")?;
            if !(mu < -1.0 && -1.0 < lambda && lambda < 0.0) {
                return Err(Error::BadParameter {
                    map: name.into(),
                    detail: format!("requires mu < -1 < lambda < 0, got lambda={lambda}, mu={mu}"),
                });
            }
            linear_map("twisted_linear_saddle", lambda, mu)
        }
        "henon" => {
            let a = get_param(params, name, "a")?;
            let b = get_param(params, name, "b")?;
            if b == 0.0 {
                return Err(Error::BadParameter {
                    map: name.into(),
                    detail: "b must be nonzero for invertibility".into(),
                });
            }
            SmoothPlanarMap::from_closures(
                "henon",
                move |p| Point::new(a - p.x * p.x + b * p.y, p.x),
                move |p| Mat2::new(-2.0 * p.x, b, 1.0, 0.0),
                Some(Arc::new(move |p: Point| Point::new(p.y, (p.x - a + p.y * p.y) / b))),
            )
        }
        "area_preserving_henon" => {
            let alpha = get_param(params, name, "alpha")?;
            let (s, c) = alpha.sin_cos();
            SmoothPlanarMap::from_closures(
                "area_preserving_henon",
                move |p| {
                    let w = p.y - p.x * p.x;
                    Point::new(p.x * c - w * s, p.x * s + w * c)
                },
                move |p| Mat2::new(c + 2.0 * p.x * s, -s, s - 2.0 * p.x * c, c),
                Some(Arc::new(move |p: Point| {
                    let x = p.x * c + p.y * s;
                    Point::new(x, x * x - p.x * s + p.y * c)
                })),
            )
        }
        "duffing_time1" => make_time_t_map(duffing_field(), 1.0)?,
        other => return Err(Error::UnknownBuiltin(other.into())),
    };
    map.params = params.clone();
    Ok(map)
}

fn linear_map(name: &str, lambda: f64, mu: f64) -> SmoothPlanarMap {
    SmoothPlanarMap::from_closures(
        name,
        move |p| Point::new(lambda * p.x, mu * p.y),
        move |_| Mat2::new(lambda, 0.0, 0.0, mu),
        Some(Arc::new(move |p: Point| Point::new(p.x / lambda, p.y / mu))),
    )
}

// ---------------------------------------------------------------------------
// JSON map specification

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub kind: String,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub params: Option<BTreeMap<String, f64>>,
    #[serde(default)]
    pub fx: Option<String>,
    #[serde(default)]
    pub fy: Option<String>,
    #[serde(rename = "T", default)]
    pub t: Option<f64>,
}

impl MapSpec {
    pub fn build(&self) -> Result<SmoothPlanarMap> {
        let params = self.params.clone().unwrap_or_default();
        match self.kind.as_str() {
            "builtin" => {
                let name = self
                    .name
                    .as_deref()
                    .ok_or_else(|| Error::Config("builtin map spec needs `name`".into()))?;
                builtin_map(name, &params)
            }
            "expression" => {
                let fx = self
                    .fx
                    .as_deref()
                    .ok_or_else(|| Error::Config("expression map spec needs `fx`".into()))?;
                let fy = self
                    .fy
                    .as_deref()
                    .ok_or_else(|| Error::Config("expression map spec needs `fy`".into()))?;
                SmoothPlanarMap::from_expressions("expression map", fx, fy, params)
            }
            "ode" => {
                let fx = self
                    .fx
                    .as_deref()
                    .ok_or_else(|| Error::Config("ode map spec needs `fx`".into()))?;
                let fy = self
                    .fy
                    .as_deref()
                    .ok_or_else(|| Error::Config("ode map spec needs `fy`".into()))?;
                let t = self.t.ok_or_else(|| Error::Config("ode map spec needs `T`".into()))?;
                let field = VectorField::from_expressions(fx, fy, params)?;
                make_time_t_map(field, t)
            }
            other => Err(Error::Config(format!("unknown map kind `{other}`"))),
        }
    }
}

// ---------------------------------------------------------------------------
// Probe-based consistency checks

/// Max |det df - positive| violation probe: returns the minimal Jacobian
/// determinant over a grid on `rect`.
pub fn min_jacobian_det(map: &SmoothPlanarMap, rect: (Point, Point), n: usize) -> Result<f64> {
    let mut min_det = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            let p = grid_point(rect, i, j, n);
            min_det = min_det.min(map.jacobian(p)?.det());
        }
    }
    Ok(min_det)
}

/// Max over a grid of ||f^-1(f(x)) - x||.
pub fn max_inverse_residual(
    map: &SmoothPlanarMap,
    rect: (Point, Point),
    n: usize,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let p = grid_point(rect, i, j, n);
            let round_trip = map.eval_inverse(map.eval(p)?)?;
            worst = worst.max(round_trip.dist(p));
        }
    }
    Ok(worst)
}

/// Max relative disagreement between the analytic Jacobian and central
/// finite differences with step `h`.
pub fn max_jacobian_fd_error(
    map: &SmoothPlanarMap,
    rect: (Point, Point),
    n: usize,
    h: f64,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let p = grid_point(rect, i, j, n);
            let jac = map.jacobian(p)?;
            let fxp = map.eval(Point::new(p.x + h, p.y))?;
            let fxm = map.eval(Point::new(p.x - h, p.y))?;
            let fyp = map.eval(Point::new(p.x, p.y + h))?;
            let fym = map.eval(Point::new(p.x, p.y - h))?;
            let fd = Mat2::new(
                (fxp.x - fxm.x) / (2.0 * h),
                (fyp.x - fym.x) / (2.0 * h),
                (fxp.y - fxm.y) / (2.0 * h),
                (fyp.y - fym.y) / (2.0 * h),
            );
            let scale = [jac.a, jac.b, jac.c, jac.d]
                .iter()
                .fold(1.0f64, |m, v| m.max(v.abs()));
            let diff = [fd.a - jac.a, fd.b - jac.b, fd.c - jac.c, fd.d - jac.d]
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            worst = worst.max(diff / scale);
        }
    }
    Ok(worst)
}

fn grid_point(rect: (Point, Point), i: usize, j: usize, n: usize) -> Point {
    let fx = (i as f64 + 0.5) / n as f64;
    let fy = (j as f64 + 0.5) / n as f64;
    Point::new(
        rect.0.x + fx * (rect.1.x - rect.0.x),
        rect.0.y + fy * (rect.1.y - rect.0.y),
    )
}
