//! The scaling bundle `(δ, α, β, ξ)` for a wave speed `ω`.
//!
//! `ξ` is the larger root of
//! `g(ξ) = δ^(m/(m+2)) (ξȲ'(ξ) + Ȳ(ξ)) − (2ξ)^(2/(m+2))`, after which
//! `α = (2δξ)^(−2/(m+2))` and `β = α^((m+2)/2) = 1/(2δξ)`.
//! Lattice and tip coordinates are related by `x = δβ x̃`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::shape_ode::{default_x_max, slope_at_infinity, solve_shape, ShapeError, ShapeQuantity, ShapeSolution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalingError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no admissible large root for omega = {omega}; need omega above about {omega_min:.6}")]
    NoLargeRoot { omega: f64, omega_min: f64 },
    #[error("shape tabulation ends at {x_max}, root search needs {needed}")]
    ShapeRange { x_max: f64, needed: f64 },
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub m: f64,
    pub omega: f64,
    pub delta: f64,
    pub xi: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl ScalingParams {
    /// `δβ`, the lattice length of one tip unit.
    pub fn unit(&self) -> f64 {
        self.delta * self.beta
    }

    pub fn to_tilde(&self, x: f64) -> f64 {
        x / self.unit()
    }

    pub fn from_tilde(&self, xt: f64) -> f64 {
        xt * self.unit()
    }

    /// `δα`, the tip depth scale.
    pub fn depth(&self) -> f64 {
        self.delta * self.alpha
    }
}

/// `δ = ω^(−2/m)`.
pub fn delta_of(omega: f64, m: f64) -> f64 {
    omega.powf(-2.0 / m)
}

/// Leading-order guess `ξ₀ = 1 / (2δ Y'(∞)^((m+2)/m))` for the larger root.
pub fn initial_guess(omega: f64, m: f64) -> f64 {
    let d = delta_of(omega, m);
    1.0 / (2.0 * d * slope_at_infinity(m).powf((m + 2.0) / m))
}

/// Limit of `α` as `ω → ∞`.
pub fn alpha_limit(m: f64) -> f64 {
    (4.0 / (m * (m + 1.0))).powf(1.0 / m)
}

fn g(shape: &ShapeSolution, d: f64, xi: f64) -> Result<(f64, f64), ShapeError> {
    let m = shape.m;
    let y = shape.eval(xi, ShapeQuantity::Y)?;
    let yp = shape.eval(xi, ShapeQuantity::Yp)?;
    let ypp = shape.ypp(xi)?;
    let e = 2.0 / (m + 2.0);
    let c = d.powf(m / (m + 2.0));
    let val = c * (xi * yp + y) - (2.0 * xi).powf(e);
    let der = c * (xi * ypp + 2.0 * yp) - 2.0 * e * (2.0 * xi).powf(e - 1.0);
    Ok((val, der))
}

/// Estimate of the smallest speed for which a root `ξ ≥ 1` exists, from
/// `δ^(m/(m+2)) ≤ max_{ξ≥1} (2ξ)^(2/(m+2)) / (ξȲ'+Ȳ)`.
pub fn minimal_omega(shape: &ShapeSolution) -> f64 {
    let m = shape.m;
    let f = |xi: f64| {
        let y = shape.eval(xi, ShapeQuantity::Y).unwrap_or(f64::NAN);
        let yp = shape.eval(xi, ShapeQuantity::Yp).unwrap_or(f64::NAN);
        (2.0 * xi).powf(2.0 / (m + 2.0)) / (xi * yp + y)
    };
    let hi = shape.x_max.clamp(1.0, 50.0);
    let n = 2000;
    let mut best = f(1.0);
    let mut arg = 1.0;
    for i in 0..=n {
        let xi = 1.0 + (hi - 1.0) * i as f64 / n as f64;
        let v = f(xi);
        if v > best {
            best = v;
            arg = xi;
        }
    }
    // golden-section polish around the grid maximum
    let step = (hi - 1.0) / n as f64;
    let (mut a, mut b) = ((arg - step).max(1.0), (arg + step).min(hi));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best = best.max(f(0.5 * (a + b)));
    best.powf(-(m + 2.0) / 2.0)
}

/// Solves for the scaling bundle at speed `omega` using a shape solution for the same `m`.
pub fn solve_scaling(omega: f64, shape: &ShapeSolution) -> Result<ScalingParams, ScalingError> {
    let m = shape.m;
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(ScalingError::InvalidParameter(format!("omega = {omega} must be positive")));
    }
    let d = delta_of(omega, m);
    let no_root = || ScalingError::NoLargeRoot { omega, omega_min: minimal_omega(shape) };
    let xi0 = initial_guess(omega, m);
    if xi0 > shape.x_max {
        return Err(ScalingError::ShapeRange { x_max: shape.x_max, needed: xi0 });
    }
    let gv = |xi: f64| g(shape, d, xi).map(|p| p.0);

    // bracket [lo, hi] with g(lo) < 0 < g(hi)
    let mut hi = xi0;
    while gv(hi)? <= 0.0 {
        hi *= 2.0;
        if hi > shape.x_max {
            return Err(ScalingError::ShapeRange { x_max: shape.x_max, needed: hi });
        }
    }
    let mut lo = hi;
    loop {
        lo *= 0.5;
        if lo < 1e-3 {
            return Err(no_root());
        }
        if gv(lo)? < 0.0 {
            break;
        }
    }

    // safeguarded Newton; bisection whenever the step leaves the bracket
    let mut xi = 0.5 * (lo + hi);
    let scale = |xi: f64| (2.0 * xi).powf(2.0 / (m + 2.0));
    for _ in 0..200 {
        let (val, der) = g(shape, d, xi)?;
        if val.abs() <= 1e-14 * scale(xi) {
            break;
        }
        if val < 0.0 {
            lo = xi;
        } else {
            hi = xi;
        }
        let nx = xi - val / der;
        xi = if der > 0.0 && nx > lo && nx < hi { nx } else { 0.5 * (lo + hi) };
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    if xi < 1.0 {
        return Err(no_root());
    }
    let alpha = (2.0 * d * xi).powf(-2.0 / (m + 2.0));
    let beta = 1.0 / (2.0 * d * xi);
    Ok(ScalingParams { m, omega, delta: d, xi, alpha, beta })
}

/// Relative residual `|g(ξ)| / (2ξ)^(2/(m+2))` of a computed bundle.
pub fn relative_residual(p: &ScalingParams, shape: &ShapeSolution) -> Result<f64, ShapeError> {
    let (val, _) = g(shape, p.delta, p.xi)?;
    Ok(val.abs() / (2.0 * p.xi).powf(2.0 / (p.m + 2.0)))
}

/// `dξ/dω` from the implicit function theorem applied to `g(ξ, δ(ω)) = 0`.
pub fn dxi_domega(p: &ScalingParams, shape: &ShapeSolution) -> Result<f64, ShapeError> {
    let m = p.m;
    let (_, g_xi) = g(shape, p.delta, p.xi)?;
    let y = shape.eval(p.xi, ShapeQuantity::Y)?;
    let yp = shape.eval(p.xi, ShapeQuantity::Yp)?;
    let g_delta = m / (m + 2.0) * p.delta.powf(m / (m + 2.0) - 1.0) * (p.xi * yp + y);
    let ddelta = -2.0 / m * p.omega.powf(-2.0 / m - 1.0);
    Ok(-g_delta * ddelta / g_xi)
}

/// Solves the shape ODE on a range long enough for speed `omega` and returns
/// it together with the scaling bundle.
pub fn shape_for_speed(m: f64, omega: f64, tol: f64) -> Result<(ShapeSolution, ScalingParams), ScalingError> {
    let xi0 = initial_guess(omega, m);
    let shape = solve_shape(m, default_x_max(1.5 * xi0), tol)?;
    let p = solve_scaling(omega, &shape)?;
    Ok((shape, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identities_hold() {
        let (shape, p) = shape_for_speed(2.0, 10.0, 1e-10).unwrap();
        assert_eq!(p.delta, 0.1);
        assert!((p.xi - 1.0 / (2.0 * p.delta * p.beta)).abs() <= 1e-13 * p.xi);
        assert!((p.beta * p.beta / p.alpha.powf(p.m + 2.0) - 1.0).abs() < 1e-13);
        assert!(p.xi >= 1.0);
        assert!(relative_residual(&p, &shape).unwrap() <= 1e-12);
        let tip = p.depth() * shape.eval(p.xi, ShapeQuantity::Y).unwrap();
        assert!((tip - 0.5).abs() < 0.025, "{tip}");
    }

    #[test]
    fn larger_root_is_selected() {
        let (shape, p) = shape_for_speed(3.0, 30.0, 1e-10).unwrap();
        let (val, der) = g(&shape, p.delta, p.xi).unwrap();
        assert!(val.abs() < 1e-10);
        assert!(der > 0.0);
    }

    #[test]
    fn too_slow_is_rejected() {
        let shape = solve_shape(2.0, 100.0, 1e-10).unwrap();
        let err = solve_scaling(0.5, &shape).unwrap_err();
        match err {
            ScalingError::NoLargeRoot { omega_min, .. } => {
                assert!(omega_min > 0.5 && omega_min < 10.0, "{omega_min}");
                assert!(solve_scaling(omega_min * 1.01, &shape).is_ok());
            }
            e => panic!("unexpected {e}"),
        }
    }
}
