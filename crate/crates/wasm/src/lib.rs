//! Browser bindings: scaling parameters, wave profiles and the essential
//! spectrum, each returned as a flat `Float64Array`.

use fput_core::potentials::Potential;
use fput_core::scaling::shape_for_speed;
use fput_core::spectral::essential_spectrum;
use fput_core::wave::{solve_exact, WaveOptions};
use wasm_bindgen::prelude::*;

fn js<E: std::fmt::Display>(e: E) -> JsError {
    JsError::new(&e.to_string())
}

/// `[delta, xi, alpha, beta]` for the inverse monomial of order `m`.
#[wasm_bindgen]
pub fn scaling(m: f64, omega: f64) -> Result<Vec<f64>, JsError> {
    let (_, p) = shape_for_speed(m, omega, 1e-10).map_err(js)?;
    Ok(vec![p.delta, p.xi, p.alpha, p.beta])
}

/// Exact wave sampled at `samples` points of `[-1.5, 1.5]`, laid out as
/// `x, R, V/ω, x, R, V/ω, ...`.
#[wasm_bindgen]
pub fn wave_profile(m: f64, omega: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    let pot = Potential::inverse_monomial(m).map_err(js)?;
    let (shape, p) = shape_for_speed(m, omega, 1e-10).map_err(js)?;
    let w = solve_exact(&p, &shape, &pot, &WaveOptions::default()).map_err(js)?;
    let n = samples.max(2);
    let mut out = Vec::with_capacity(3 * n);
    for i in 0..n {
        let x = -1.5 + 3.0 * i as f64 / (n - 1) as f64;
        out.extend([x, w.r_at(x), w.v_at(x) / omega]);
    }
    Ok(out)
}

/// Both branches of the essential spectrum, `re+, im+, re-, im-` per sample.
#[wasm_bindgen]
pub fn essential_curves(omega: f64, a: f64, c: f64, samples: usize) -> Vec<f64> {
    essential_spectrum(omega, a, c, samples.max(2)).iter().flat_map(|p| [p.plus[0], p.plus[1], p.minus[0], p.minus[1]]).collect()
}
