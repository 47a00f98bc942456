//! The asymptotic shape ODE `Y'' = 2/((m+1) Y^(m+1))`, `Y(0)=1`, `Y'(0)=0`,
//! together with the basis of its linearization `T'' = -2T / Y^(m+2)`.
//!
//! The solution is tabulated on the accepted steps of an adaptive integrator
//! and interpolated with quintic Hermite pieces; the ODE supplies the second
//! derivative at every node, so no extra storage is needed for it.

use serde::Serialize;
use thiserror::Error;

use crate::ode::{dopri5, OdeError, Tolerances};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShapeError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("integration failed: {0}")]
    ToleranceNotMet(#[from] OdeError),
    #[error("|x| = {x} is beyond the tabulated range {x_max}")]
    OutOfRange { x: f64, x_max: f64 },
}

/// Which tabulated function to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeQuantity {
    Y,
    Yp,
    Yflat,
    Te,
    Tep,
    Teflat,
    To,
    Top,
    Toflat,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShapeSolution {
    pub m: f64,
    pub x_max: f64,
    pub tol: f64,
    pub grid: Vec<f64>,
    pub y: Vec<f64>,
    pub yp: Vec<f64>,
    pub te: Vec<f64>,
    pub tep: Vec<f64>,
    pub to: Vec<f64>,
    pub top: Vec<f64>,
    pub yp_inf: f64,
    pub yflat_inf: f64,
    pub te_p_inf: f64,
    pub te_flat_inf: f64,
    pub to_inf: f64,
    pub to_flat_inf: f64,
}

/// `Y'(∞) = 2/√(m(m+1))`.
pub fn slope_at_infinity(m: f64) -> f64 {
    2.0 / (m * (m + 1.0)).sqrt()
}

/// Default tabulation length for a downstream half-width `xi`.
pub fn default_x_max(xi: f64) -> f64 {
    (10.0 * xi).max(100.0)
}

fn rhs(m: f64, s: &[f64; 6]) -> [f64; 6] {
    let y = s[0];
    let inv = y.powf(-(m + 2.0));
    [s[1], 2.0 / (m + 1.0) * y * inv, s[3], -2.0 * s[2] * inv, s[5], -2.0 * s[4] * inv]
}

pub fn solve_shape(m: f64, x_max: f64, tol: f64) -> Result<ShapeSolution, ShapeError> {
    if !(m > 1.0) || !m.is_finite() {
        return Err(ShapeError::InvalidParameter(format!("m = {m} must exceed 1")));
    }
    if !(x_max > 0.0) || !x_max.is_finite() {
        return Err(ShapeError::InvalidParameter(format!("x_max = {x_max} must be positive")));
    }
    if !(tol > 0.0) {
        return Err(ShapeError::InvalidParameter(format!("tol = {tol} must be positive")));
    }
    let tols = Tolerances { rtol: tol, atol: tol * 1e-2, ..Tolerances::default() };
    let nodes = dopri5(
        |_, s| rhs(m, s),
        0.0,
        [1.0, 0.0, 1.0, 0.0, 0.0, 1.0],
        x_max,
        tols,
        |x| 0.04 * (1.0 + 0.25 * x),
    )?;
    let n = nodes.len();
    let mut sol = ShapeSolution {
        m,
        x_max,
        tol,
        grid: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
        yp: Vec::with_capacity(n),
        te: Vec::with_capacity(n),
        tep: Vec::with_capacity(n),
        to: Vec::with_capacity(n),
        top: Vec::with_capacity(n),
        yp_inf: 0.0,
        yflat_inf: 0.0,
        te_p_inf: 0.0,
        te_flat_inf: 0.0,
        to_inf: 0.0,
        to_flat_inf: 0.0,
    };
    for (x, s) in nodes {
        sol.grid.push(x);
        sol.y.push(s[0]);
        sol.yp.push(s[1]);
        sol.te.push(s[2]);
        sol.tep.push(s[3]);
        sol.to.push(s[4]);
        sol.top.push(s[5]);
    }
    let (x1, x2) = (0.5 * x_max, x_max);
    let fit = |q: ShapeQuantity, p: f64| -> f64 {
        let f1 = sol.eval(x1, q).expect("in range");
        let f2 = sol.eval(x2, q).expect("in range");
        let (w1, w2) = (x1.powf(p), x2.powf(p));
        (f2 * w2 - f1 * w1) / (w2 - w1)
    };
    let consts = [
        fit(ShapeQuantity::Yp, m),
        fit(ShapeQuantity::Yflat, m - 1.0),
        fit(ShapeQuantity::Tep, m),
        fit(ShapeQuantity::Teflat, m - 1.0),
        fit(ShapeQuantity::To, m),
        fit(ShapeQuantity::Toflat, m),
    ];
    [sol.yp_inf, sol.yflat_inf, sol.te_p_inf, sol.te_flat_inf, sol.to_inf, sol.to_flat_inf] = consts;
    Ok(sol)
}

impl ShapeSolution {
    /// `Y''` from the ODE.
    pub fn ypp(&self, x: f64) -> Result<f64, ShapeError> {
        let y = self.eval(x, ShapeQuantity::Y)?;
        Ok(2.0 / ((self.m + 1.0) * y.powf(self.m + 1.0)))
    }

    pub fn eval(&self, x: f64, which: ShapeQuantity) -> Result<f64, ShapeError> {
        use ShapeQuantity::*;
        let ax = x.abs();
        if ax > self.x_max * (1.0 + 1e-14) || !x.is_finite() {
            return Err(ShapeError::OutOfRange { x, x_max: self.x_max });
        }
        let ax = ax.min(self.x_max);
        let sgn = if x < 0.0 { -1.0 } else { 1.0 };
        let v = match which {
            Y => self.interp(ax, Component::Y),
            Yp => sgn * self.interp(ax, Component::Yp),
            Te => self.interp(ax, Component::Te),
            Tep => sgn * self.interp(ax, Component::Tep),
            To => sgn * self.interp(ax, Component::To),
            Top => self.interp(ax, Component::Top),
            Yflat => ax * self.interp(ax, Component::Yp) - self.interp(ax, Component::Y),
            Teflat => ax * self.interp(ax, Component::Tep) - self.interp(ax, Component::Te),
            Toflat => sgn * (ax * self.interp(ax, Component::Top) - self.interp(ax, Component::To)),
        };
        Ok(v)
    }

    /// Conservation defect `½Y'² + 2/(m(m+1)Y^m) - 2/(m(m+1))` at node `i`.
    pub fn energy_defect(&self, i: usize) -> f64 {
        let m = self.m;
        let c = 2.0 / (m * (m + 1.0));
        0.5 * self.yp[i].powi(2) + c * self.y[i].powf(-m) - c
    }

    /// Wronskian `To' Te - Te' To - 1` at node `i`.
    pub fn wronskian_defect(&self, i: usize) -> f64 {
        self.top[i] * self.te[i] - self.tep[i] * self.to[i] - 1.0
    }

    fn jets(&self, i: usize, c: Component) -> [f64; 3] {
        let m = self.m;
        let y = self.y[i];
        let yp = self.yp[i];
        let inv = y.powf(-(m + 2.0));
        let ypp = 2.0 / (m + 1.0) * y * inv;
        let second = |f: f64| -2.0 * f * inv;
        let third = |f: f64, fp: f64| -2.0 * fp * inv + 2.0 * (m + 2.0) * f * yp * inv / y;
        match c {
            Component::Y => [y, yp, ypp],
            Component::Yp => [yp, ypp, -2.0 * yp * inv],
            Component::Te => [self.te[i], self.tep[i], second(self.te[i])],
            Component::Tep => [self.tep[i], second(self.te[i]), third(self.te[i], self.tep[i])],
            Component::To => [self.to[i], self.top[i], second(self.to[i])],
            Component::Top => [self.top[i], second(self.to[i]), third(self.to[i], self.top[i])],
        }
    }

    fn interp(&self, x: f64, c: Component) -> f64 {
        let g = &self.grid;
        let j = g.partition_point(|&v| v <= x).clamp(1, g.len() - 1) - 1;
        let (x0, x1) = (g[j], g[j + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let [f0, d0, s0] = self.jets(j, c);
        let [f1, d1, s1] = self.jets(j + 1, c);
        let (t2, t3) = (t * t, t * t * t);
        let (t4, t5) = (t3 * t, t3 * t2);
        let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
        let h3 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        let h5 = 0.5 * t3 - t4 + 0.5 * t5;
        f0 * h0 + h * d0 * h1 + h * h * s0 * h2 + f1 * h3 + h * d1 * h4 + h * h * s1 * h5
    }
}

#[derive(Clone, Copy)]
enum Component {
    Y,
    Yp,
    Te,
    Tep,
    To,
    Top,
}

#[cfg(test)]
mod tests {
    use super::*;
    use ShapeQuantity::*;

    fn closed_y(x: f64) -> f64 {
        (9.0 + 6.0 * x * x).sqrt() / 3.0
    }

    #[test]
    fn initial_values() {
        let s = solve_shape(3.0, 20.0, 1e-10).unwrap();
        assert_eq!(s.eval(0.0, Y).unwrap(), 1.0);
        assert_eq!(s.eval(0.0, Yp).unwrap(), 0.0);
        assert_eq!(s.eval(0.0, Te).unwrap(), 1.0);
        assert_eq!(s.eval(0.0, Top).unwrap(), 1.0);
    }

    #[test]
    fn m2_anchor_values() {
        let s = solve_shape(2.0, 400.0, 1e-11).unwrap();
        assert!((s.eval(1.0, Y).unwrap() - 15f64.sqrt() / 3.0).abs() < 1e-9);
        assert!((s.eval(1.0, Te).unwrap() - 1.0 / 15f64.sqrt()).abs() < 1e-9);
        assert!((s.eval(-1.0, To).unwrap() + 3.0 / 15f64.sqrt()).abs() < 1e-9);
        assert!((s.yp_inf - 2.0 / 6f64.sqrt()).abs() < 1e-8, "{}", s.yp_inf - 2.0 / 6f64.sqrt());
        assert!(s.yflat_inf.abs() < 1e-6, "gamma = {}", s.yflat_inf);
        assert!((s.eval(7.3, Y).unwrap() - closed_y(7.3)).abs() < 1e-9);
    }

    #[test]
    fn parity() {
        let s = solve_shape(4.0, 10.0, 1e-10).unwrap();
        for q in [Y, Te, Top, Yflat, Teflat] {
            assert_eq!(s.eval(-2.5, q).unwrap(), s.eval(2.5, q).unwrap());
        }
        for q in [Yp, Tep, To, Toflat] {
            assert_eq!(s.eval(-2.5, q).unwrap(), -s.eval(2.5, q).unwrap());
        }
    }

    #[test]
    fn out_of_range_and_bad_input() {
        let s = solve_shape(2.0, 5.0, 1e-8).unwrap();
        assert!(matches!(s.eval(5.5, Y), Err(ShapeError::OutOfRange { .. })));
        assert!(matches!(solve_shape(1.0, 5.0, 1e-8), Err(ShapeError::InvalidParameter(_))));
        assert!(matches!(solve_shape(2.0, -1.0, 1e-8), Err(ShapeError::InvalidParameter(_))));
    }

    #[test]
    fn asymptotic_constants_match_closed_forms() {
        for m in [2.0, 3.0, 6.0] {
            let s = solve_shape(m, 200.0, 1e-11).unwrap();
            assert!((s.yp_inf - slope_at_infinity(m)).abs() < 1e-7, "m={m}");
            assert!((s.te_p_inf + (m / (m + 1.0)).sqrt()).abs() < 1e-6, "m={m}");
            assert!((s.to_inf - ((m + 1.0) / m).sqrt()).abs() < 1e-6, "m={m}");
            assert!((s.to_flat_inf + s.to_inf).abs() < 1e-6, "m={m}");
            assert!((s.te_flat_inf - s.yflat_inf).abs() < 1e-5, "m={m}");
        }
    }
}
