//! Adaptive Dormand-Prince 5(4) integration for autonomous planar
//! fields, with the 2x2 variational system carried alongside when the
//! Jacobian of the flow is needed.

use crate::error::{Error, Result};
use crate::geom::{Mat2, Point};

/// Dormand-Prince coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct OdeSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_steps: usize,
}

impl Default for OdeSettings {
    fn default() -> Self {
        OdeSettings { abs_tol: 1e-12, rel_tol: 1e-12, max_steps: 1_000_000 }
    }
}

/// Integrates dy/dt = rhs(y) over total time `t` (sign gives direction).
pub fn integrate<const N: usize>(
    rhs: &dyn Fn(&[f64; N]) -> [f64; N],
    y0: [f64; N],
    t: f64,
    settings: &OdeSettings,
) -> Result<[f64; N]> {
    if t == 0.0 {
        return Ok(y0);
    }
    let dir = t.signum();
    let t_end = t.abs();
    let mut y = y0;
    let mut s = 0.0;
    let mut h = (t_end / 100.0).min(1e-2).max(1e-10);
    let mut k: [[f64; N]; 7] = [[0.0; N]; 7];
    let mut steps = 0usize;
    while s < t_end {
        if steps > settings.max_steps {
            return Err(Error::Integration(format!("step budget exhausted at t = {:.3e}", s)));
        }
        steps += 1;
        if s + h > t_end {
            h = t_end - s;
        }
        let hd = h * dir;
        k[0] = rhs(&y);
        for stage in 0..6 {
            let mut ys = y;
            for i in 0..N {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(stage + 1) {
                    acc += A[stage][j] * kj[i];
                }
                ys[i] += hd * acc;
            }
            k[stage + 1] = rhs(&ys);
        }
        let mut y5 = y;
        let mut err: f64 = 0.0;
        for i in 0..N {
            let mut acc5 = 0.0;
            let mut acc4 = 0.0;
            for j in 0..7 {
                acc5 += B5[j] * k[j][i];
                acc4 += B4[j] * k[j][i];
            }
            y5[i] += hd * acc5;
            let scale = settings.abs_tol + settings.rel_tol * y[i].abs().max(y5[i].abs());
            err = err.max((hd * (acc5 - acc4)).abs() / scale);
        }
        if !err.is_finite() {
            return Err(Error::Integration(format!("non-finite step at t = {:.3e}", s)));
        }
        if err <= 1.0 {
            s += h;
            y = y5;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < 1e-15 * t_end.max(1.0) {
            return Err(Error::Integration(format!("step size underflow at t = {:.3e}", s)));
        }
    }
    Ok(y)
}

/// Time-`t` flow of a planar field.
pub fn flow(
    field: &dyn Fn(Point) -> Point,
    start: Point,
    t: f64,
    settings: &OdeSettings,
) -> Result<Point> {
    let rhs = |y: &[f64; 2]| {
        let v = field(Point::new(y[0], y[1]));
        [v.x, v.y]
    };
    let out = integrate(&rhs, [start.x, start.y], t, settings)?;
    Ok(Point::new(out[0], out[1]))
}

/// Time-`t` flow together with the Jacobian of the flow map, obtained by
/// integrating the 2x2 variational system as a 6-dimensional augmented
/// system with the same step control.
pub fn flow_with_jacobian(
    field: &dyn Fn(Point) -> Point,
    field_jacobian: &dyn Fn(Point) -> Mat2,
    start: Point,
    t: f64,
    settings: &OdeSettings,
) -> Result<(Point, Mat2)> {
    let rhs = |y: &[f64; 6]| {
        let p = Point::new(y[0], y[1]);
        let v = field(p);
        let j = field_jacobian(p);
        // columns of the variational matrix evolve by dM/dt = J M
        [
            v.x,
            v.y,
            j.a * y[2] + j.b * y[4],
            j.a * y[3] + j.b * y[5],
            j.c * y[2] + j.d * y[4],
            j.c * y[3] + j.d * y[5],
        ]
    };
    let out = integrate(&rhs, [start.x, start.y, 1.0, 0.0, 0.0, 1.0], t, settings)?;
    Ok((Point::new(out[0], out[1]), Mat2::new(out[2], out[3], out[4], out[5])))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        let field = |p: Point| Point::new(p.y, -p.x);
        let settings = OdeSettings::default();
        let end = flow(&field, Point::new(1.0, 0.0), 2.0 * std::f64::consts::PI, &settings).unwrap();
        assert!(end.dist(Point::new(1.0, 0.0)) < 1e-9);
    }

    #[test]
    fn variational_matrix_of_linear_field() {
        // field (y, x): flow-1 Jacobian is exp([[0,1],[1,0]]) = [[cosh 1, sinh 1],[sinh 1, cosh 1]]
        let field = |p: Point| Point::new(p.y, p.x);
        let jac = |_: Point| Mat2::new(0.0, 1.0, 1.0, 0.0);
        let (_, m) =
            flow_with_jacobian(&field, &jac, Point::ZERO, 1.0, &OdeSettings::default()).unwrap();
        let c = 1.0f64.cosh();
        let s = 1.0f64.sinh();
        assert!((m.a - c).abs() < 1e-9 && (m.d - c).abs() < 1e-9);
        assert!((m.b - s).abs() < 1e-9 && (m.c - s).abs() < 1e-9);
        // eigenvalues e, 1/e
        let eig = m.eigenvalues();
        assert!((eig[0].0 - 1.0f64.exp()).abs() < 1e-8);
        assert!((eig[1].0 - (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn rotation_field_variational_matrix() {
        // J = [[0,-1],[1,0]] is antisymmetric, so it distinguishes the
        // row/column layout of the augmented system
        let field = |p: Point| Point::new(-p.y, p.x);
        let jac = |_: Point| Mat2::new(0.0, -1.0, 1.0, 0.0);
        let (_, m) =
            flow_with_jacobian(&field, &jac, Point::new(0.2, 0.1), 1.0, &OdeSettings::default())
                .unwrap();
        let (c, s) = (1.0f64.cos(), 1.0f64.sin());
        assert!((m.a - c).abs() < 1e-9 && (m.d - c).abs() < 1e-9);
        assert!((m.b + s).abs() < 1e-9 && (m.c - s).abs() < 1e-9);
    }

    #[test]
    fn backward_flow_inverts_forward() {
        let field = |p: Point| Point::new(p.y, p.x - p.x.powi(3));
        let settings = OdeSettings::default();
        let start = Point::new(0.4, -0.3);
        let fwd = flow(&field, start, 1.0, &settings).unwrap();
        let back = flow(&field, fwd, -1.0, &settings).unwrap();
        assert!(back.dist(start) < 1e-10);
    }
}
