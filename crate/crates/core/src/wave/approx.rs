//! Explicit approximations `R̆`, `V̆`, `Q̆` built from the shape ODE.
//! All take the tip coordinate `x̃` and are even.

use crate::scaling::ScalingParams;
use crate::shape_ode::{ShapeQuantity as Sq, ShapeSolution};

use super::WaveError;

fn check(p: &ScalingParams, s: &ShapeSolution) -> Result<(), WaveError> {
    if (p.m - s.m).abs() > 1e-12 {
        return Err(WaveError::InvalidParameter(format!("scaling has m = {}, shape has m = {}", p.m, s.m)));
    }
    if s.x_max < p.xi {
        return Err(WaveError::ShapeRange { x_max: s.x_max, needed: p.xi });
    }
    Ok(())
}

/// The extension `½U(ξ) − ½U(x−2ξ) + ½U'(ξ)(x−3ξ)` on `[ξ, 3ξ]`, zero beyond.
fn base(x: f64, xi: f64, u: impl Fn(f64) -> f64, u_xi: f64, up_xi: f64) -> f64 {
    if x >= 3.0 * xi {
        0.0
    } else {
        0.5 * u_xi - 0.5 * u(x - 2.0 * xi) + 0.5 * up_xi * (x - 3.0 * xi)
    }
}

/// `R̆(x̃)`: `−1 + δαȲ` on `[0, ξ]`, the base extension on `[ξ, 3ξ]`.
pub fn approx_distance_at(p: &ScalingParams, s: &ShapeSolution, xt: f64) -> Result<f64, WaveError> {
    check(p, s)?;
    let x = xt.abs();
    let da = p.depth();
    let y = |z: f64| s.eval(z, Sq::Y).expect("checked range");
    if x <= p.xi {
        return Ok(-1.0 + da * y(x));
    }
    let yp = s.eval(p.xi, Sq::Yp)?;
    Ok(base(x, p.xi, |z| da * y(z), da * y(p.xi), da * yp))
}

/// `V̆(x̃) = −½ωα^(−m/2)(Ȳ'(x̃−ξ) − Ȳ'(ξ))` on `[0, 2ξ]`, zero beyond.
pub fn approx_velocity_at(p: &ScalingParams, s: &ShapeSolution, xt: f64) -> Result<f64, WaveError> {
    check(p, s)?;
    let x = xt.abs();
    if x >= 2.0 * p.xi {
        return Ok(0.0);
    }
    let c = -0.5 * p.omega * p.alpha.powf(-0.5 * p.m);
    Ok(c * (s.eval(x - p.xi, Sq::Yp)? - s.eval(p.xi, Sq::Yp)?))
}

/// The constant `c` fixed by `ξQ̆'(ξ) + Q̆(ξ) = 0`.
pub fn q_breve_constant(p: &ScalingParams, s: &ShapeSolution) -> Result<f64, WaveError> {
    check(p, s)?;
    let (m, xi) = (p.m, p.xi);
    let y = s.eval(xi, Sq::Y)?;
    let yp = s.eval(xi, Sq::Yp)?;
    let ypp = s.ypp(xi)?;
    let a = xi * yp + y;
    Ok(-a / (m * a + (m + 2.0) * (xi * xi * ypp + xi * yp - y)))
}

/// `Q̆(x̃)` with `(m+2)Q̆ = (1+mc)Ȳ + (m+2)cȲ♭` on `[0, ξ]` and the base extension beyond.
pub fn approx_q_at(p: &ScalingParams, s: &ShapeSolution, xt: f64) -> Result<f64, WaveError> {
    let c = q_breve_constant(p, s)?;
    Ok(approx_q_with(p, s, c, xt))
}

pub(crate) fn approx_q_with(p: &ScalingParams, s: &ShapeSolution, c: f64, xt: f64) -> f64 {
    let m = p.m;
    let inner = |z: f64| {
        let y = s.eval(z, Sq::Y).expect("checked range");
        let yf = s.eval(z, Sq::Yflat).expect("checked range");
        ((1.0 + m * c) * y + (m + 2.0) * c * yf) / (m + 2.0)
    };
    let inner_p = |z: f64| {
        // d/dx Ȳ♭ = x Ȳ''
        let yp = s.eval(z, Sq::Yp).expect("checked range");
        let ypp = s.ypp(z).expect("checked range");
        ((1.0 + m * c) * yp + (m + 2.0) * c * z * ypp) / (m + 2.0)
    };
    let x = xt.abs();
    if x <= p.xi {
        inner(x)
    } else {
        base(x, p.xi, inner, inner(p.xi), inner_p(p.xi))
    }
}

/// Samples a function of `x̃` on a grid.
pub fn sample(grid: &[f64], f: impl Fn(f64) -> Result<f64, WaveError>) -> Result<Vec<f64>, WaveError> {
    grid.iter().map(|&x| f(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling::shape_for_speed;

    #[test]
    fn distance_anchor_values() {
        let (s, p) = shape_for_speed(2.0, 40.0, 1e-10).unwrap();
        let r0 = approx_distance_at(&p, &s, 0.0).unwrap();
        assert!((r0 - (-1.0 + p.depth())).abs() < 1e-15);
        assert_eq!(approx_distance_at(&p, &s, 4.0 * p.xi).unwrap(), 0.0);
        // ξR̆'(ξ) = −R̆(ξ) from both sides
        let h = 1e-5 * p.xi;
        let rxi = approx_distance_at(&p, &s, p.xi).unwrap();
        let left = (rxi - approx_distance_at(&p, &s, p.xi - h).unwrap()) / h;
        let right = (approx_distance_at(&p, &s, p.xi + h).unwrap() - rxi) / h;
        assert!((p.xi * left + rxi).abs() < 1e-4);
        assert!((p.xi * right + rxi).abs() < 1e-4);
        assert!((rxi + 0.5).abs() < 0.02);
    }

    #[test]
    fn distance_is_c1_at_three_xi() {
        let (s, p) = shape_for_speed(4.0, 30.0, 1e-10).unwrap();
        let x = 3.0 * p.xi;
        let h = 1e-4;
        let d = (approx_distance_at(&p, &s, x - h).unwrap() - approx_distance_at(&p, &s, x - 2.0 * h).unwrap()) / h;
        assert!(d.abs() < 1e-6, "{d}");
    }

    #[test]
    fn velocity_support_and_sign() {
        let (s, p) = shape_for_speed(2.0, 20.0, 1e-10).unwrap();
        assert_eq!(approx_velocity_at(&p, &s, 2.0 * p.xi).unwrap(), 0.0);
        for k in 0..50 {
            let x = 2.0 * p.xi * k as f64 / 50.0;
            assert!(approx_velocity_at(&p, &s, x).unwrap() >= 0.0);
        }
        let v0 = approx_velocity_at(&p, &s, 0.0).unwrap() / p.omega;
        let yp = s.eval(p.xi, Sq::Yp).unwrap();
        assert!((v0 - p.alpha.powf(-1.0) * yp).abs() < 1e-14);
    }

    #[test]
    fn q_breve_boundary_condition() {
        let (s, p) = shape_for_speed(3.0, 50.0, 1e-10).unwrap();
        let c = q_breve_constant(&p, &s).unwrap();
        let h = 1e-5;
        let q = |x| approx_q_with(&p, &s, c, x);
        let qp = (q(p.xi) - q(p.xi - h)) / h;
        assert!((p.xi * qp + q(p.xi)).abs() < 1e-4 * q(p.xi).abs().max(1.0));
        assert!(q(3.0 * p.xi).abs() < 1e-14);
    }
}
