//! Linear tail decay rate: the positive root of `ω² = c·4sinh²(a/2)/a²`.

use super::WaveError;

/// `ln(sinh s / s)` without overflow or cancellation.
fn log_sinhc(s: f64) -> f64 {
    if s < 1e-3 {
        let s2 = s * s;
        s2 / 6.0 - s2 * s2 / 180.0
    } else if s < 20.0 {
        (s.sinh() / s).ln()
    } else {
        s + (-(-2.0 * s).exp()).ln_1p() - std::f64::consts::LN_2 - s.ln()
    }
}

fn d_log_sinhc(s: f64) -> f64 {
    if s < 1e-3 {
        s / 3.0 - s * s * s / 45.0
    } else {
        1.0 / s.tanh() - 1.0 / s
    }
}

/// Decay rate `a` of the linear tail for speed `omega` and `c = Φ''(0)`.
pub fn tail_rate_for(omega: f64, c: f64) -> Result<f64, WaveError> {
    if !(c > 0.0) || !omega.is_finite() {
        return Err(WaveError::InvalidParameter(format!("omega = {omega}, c = {c}")));
    }
    let speed = c.sqrt();
    if !(omega > speed) {
        return Err(WaveError::Subsonic { omega, sound_speed: speed });
    }
    let target = (omega / speed).ln();
    let g = |s: f64| log_sinhc(s) - target;
    let mut lo = 0.0;
    let mut hi = 1.0;
    while g(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..200 {
        let v = g(s);
        if v == 0.0 {
            break;
        }
        if v < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let ns = s - v / d_log_sinhc(s);
        s = if ns > lo && ns < hi { ns } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-15 * hi || (v.abs() < 1e-16 && (ns - s).abs() < 1e-15 * s) {
            break;
        }
    }
    Ok(2.0 * s)
}

/// Decay rate for a potential.
pub fn tail_rate(omega: f64, p: &crate::Potential) -> Result<f64, WaveError> {
    tail_rate_for(omega, p.curvature())
}
