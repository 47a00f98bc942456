//! Embedded Dormand-Prince 5(4) integrator for small fixed-size systems.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at x = {x} (h = {h})")]
    StepUnderflow { x: f64, h: f64 },
    #[error("exceeded {0} steps")]
    TooManySteps(usize),
    #[error("non-finite state at x = {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1e-10, atol: 1e-12, max_steps: 2_000_000 }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `y' = f(x, y)` from `x0` to `x_end > x0` and returns every
/// accepted node. `h_max(x)` caps the step locally.
pub fn dopri5<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    x0: f64,
    y0: [f64; N],
    x_end: f64,
    tol: Tolerances,
    h_max: impl Fn(f64) -> f64,
) -> Result<Vec<(f64, [f64; N])>, OdeError> {
    let mut out = vec![(x0, y0)];
    let mut x = x0;
    let mut y = y0;
    let mut k0 = f(x, &y);
    let mut h = (1e-3f64).min(h_max(x)).min(x_end - x0);
    let mut steps = 0usize;
    while x < x_end {
        steps += 1;
        if steps > tol.max_steps {
            return Err(OdeError::TooManySteps(tol.max_steps));
        }
        h = h.min(h_max(x));
        let last = x + h >= x_end;
        if last {
            h = x_end - x;
        }
        let mut k = [[0.0; N]; 7];
        k[0] = k0;
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[s] = f(x + C[s] * h, &ys);
        }
        // stage 7 is evaluated at the 5th-order solution (FSAL)
        let mut y_new = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            for i in 0..N {
                y_new[i] += h * A[6][j] * kj[i];
            }
        }
        let mut err = 0.0;
        for i in 0..N {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            err += (h * e / sc).powi(2);
        }
        let err = (err / N as f64).sqrt();
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            h *= 0.25;
            if h < 1e-14 * x.abs().max(1.0) {
                return Err(OdeError::NonFinite(x));
            }
            continue;
        }
        if err <= 1.0 {
            x = if last { x_end } else { x + h };
            y = y_new;
            k0 = k[6];
            out.push((x, y));
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            if h < 1e-14 * x.abs().max(1.0) {
                return Err(OdeError::StepUnderflow { x, h });
            }
        }
    }
    Ok(out)
}
