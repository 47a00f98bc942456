//! Exact traveling waves in the tip coordinate `x̃ = x/(δβ)`.
//!
//! The distance profile solves `R̃ = T ∗ (s Φ'(R̃))` with the tent
//! `T(x̃) = max(2ξ − |x̃|, 0)` and `s = (δα)^(m+2)`. The velocity is
//! `Ṽ = −δ^(m/2+1)β ∫_{x̃−ξ}^{x̃+ξ} Φ'(R̃)` and the parameter derivative
//! `Q̃ = ∂_δR/(mα)` solves `Q̃ = T ∗ (P̃Q̃ + K̃)` with `P̃ = sΦ''(R̃)`,
//! `K̃ = (δα)^(m+1)Φ'(R̃)`.
//!
//! Profiles are even, so only `x̃ ≥ 0` is stored. Off-grid values come from
//! the integral equations themselves (Nyström interpolation).

mod approx;
mod quadrature;
mod tail;

pub use approx::{approx_distance_at, approx_q_at, approx_velocity_at, q_breve_constant, sample};
pub use quadrature::EvenField;
pub use tail::{tail_rate, tail_rate_for};

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parallel::{fill_indexed, map_indexed};
use crate::potentials::Potential;
use crate::scaling::{solve_scaling, ScalingError, ScalingParams};
use crate::shape_ode::{ShapeError, ShapeSolution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape tabulation ends at {x_max}, need {needed}")]
    ShapeRange { x_max: f64, needed: f64 },
    #[error("Newton iteration stalled after {iterations} steps at residual {residual:e}")]
    NewtonDiverged { iterations: usize, residual: f64, log: Vec<NewtonRecord> },
    #[error("iterate left the admissible range R > -1 twice (iteration {iteration})")]
    RangeViolation { iteration: usize },
    #[error("linear system is numerically singular")]
    SingularSystem,
    #[error("omega = {omega} does not exceed the sound speed {sound_speed}")]
    Subsonic { omega: f64, sound_speed: f64 },
    #[error("energy derivative needs at least 3 waves, got {0}")]
    InsufficientLadder(usize),
    #[error(transparent)]
    Scaling(#[from] ScalingError),
}

impl From<ShapeError> for WaveError {
    fn from(e: ShapeError) -> Self {
        match e {
            ShapeError::OutOfRange { x, x_max } => WaveError::ShapeRange { x_max, needed: x.abs() },
            other => WaveError::Scaling(ScalingError::Shape(other)),
        }
    }
}

/// Grid layout: `cells` cells per `2ξ` and nodes `0..=nodes`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveGrid {
    pub cells: usize,
    pub nodes: usize,
}

impl WaveGrid {
    /// Spacing at most `h_max` (default `min(0.05, ξ/200)`) with `ξ` on a node, and
    /// a domain `L = (1.5 + max(20/a, 1))·2ξ`.
    pub fn choose(xi: f64, tail_rate: f64, h_max: Option<f64>) -> Self {
        let h_max = h_max.unwrap_or((xi / 200.0).min(0.05));
        let mut cells = (2.0 * xi / h_max).ceil() as usize;
        cells += cells % 2;
        let span = 1.5 + (20.0 / tail_rate).max(1.0);
        let nodes = (span * cells as f64).ceil() as usize;
        WaveGrid { cells: cells.max(2), nodes }
    }

    pub fn spacing(&self, xi: f64) -> f64 {
        2.0 * xi / self.cells as f64
    }
}

#[derive(Debug, Clone, Copy)]
pub struct WaveOptions {
    /// Sup-norm bound on the fixed-point defect.
    pub tol: f64,
    pub max_iter: usize,
    pub h_max: Option<f64>,
    /// Reuse a fixed layout (keeps ladders comparable).
    pub grid: Option<WaveGrid>,
    /// Nodes with `sΦ''(R)(2ξ)² above this` enter the dense Jacobian block.
    pub active_threshold: f64,
}

impl Default for WaveOptions {
    fn default() -> Self {
        WaveOptions { tol: 1e-12, max_iter: 80, h_max: None, grid: None, active_threshold: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonRecord {
    pub iteration: usize,
    pub residual: f64,
    pub damping: f64,
    pub refactored: bool,
}

/// A converged wave with its parameter derivative.
#[derive(Debug, Clone)]
pub struct WaveProfile {
    pub potential: Potential,
    pub scaling: ScalingParams,
    pub grid: WaveGrid,
    /// Spacing in `x̃`.
    pub h: f64,
    /// Nodes `x̃_i = i h`, `i = 0..=grid.nodes`.
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub v: Vec<f64>,
    pub q: Vec<f64>,
    pub energy: f64,
    pub tail_rate: f64,
    pub residual: f64,
    pub q_residual: f64,
    pub newton: Vec<NewtonRecord>,
    d1: EvenField,
    dq: EvenField,
    d2q: EvenField,
}

struct System<'a> {
    pot: &'a Potential,
    h: f64,
    cells: usize,
    n: usize,
    s: f64,
    xi: f64,
}

impl System<'_> {
    fn tent(&self, g: Vec<f64>) -> Vec<f64> {
        let f = EvenField::new(self.h, g);
        let mut out = vec![0.0; self.n + 1];
        fill_indexed(&mut out, |i| f.tent_node(i, self.cells));
        out
    }

    fn residual(&self, r: &[f64]) -> Vec<f64> {
        let f: Vec<f64> = r.iter().map(|&x| self.s * self.pot.d1(x)).collect();
        let c = self.tent(f);
        r.iter().zip(c).map(|(a, b)| a - b).collect()
    }

    fn curvature(&self, r: &[f64]) -> Vec<f64> {
        r.iter().map(|&x| self.s * self.pot.d2(x)).collect()
    }
}

/// Approximate inverse of `I − W P` that keeps `P` only on the tip block.
struct Chord {
    na: usize,
    lu: PartialPivLu<f64>,
    p: Vec<f64>,
}

impl Chord {
    fn build(sys: &System, p: &[f64], threshold: f64) -> Result<Self, WaveError> {
        let scale = (2.0 * sys.xi).powi(2);
        let na = p.iter().rposition(|&v| v * scale > threshold).map_or(1, |i| i + 1).min(sys.n + 1);
        let w = quadrature::tent_weights(sys.h, sys.cells, na, sys.n);
        let a = Mat::<f64>::from_fn(na, na, |i, j| {
            let d = if i == j { 1.0 } else { 0.0 };
            d - w[i * na + j] * p[j]
        });
        let lu = a.partial_piv_lu();
        Ok(Chord { na, lu, p: p[..na].to_vec() })
    }

    /// `u` with `u − W(P_A u) = b`.
    fn apply(&self, sys: &System, b: &[f64]) -> Result<Vec<f64>, WaveError> {
        let mut rhs = Mat::<f64>::from_fn(self.na, 1, |i, _| b[i]);
        self.lu.solve_in_place(rhs.as_mut());
        let mut g = vec![0.0; sys.n + 1];
        for i in 0..self.na {
            let u = rhs[(i, 0)];
            if !u.is_finite() {
                return Err(WaveError::SingularSystem);
            }
            g[i] = self.p[i] * u;
        }
        let c = sys.tent(g);
        Ok(b.iter().zip(c).map(|(x, y)| x + y).collect())
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
}

/// Solves the distance equation by Newton's method from `R̆`, then the
/// velocity, energy and parameter derivative.
pub fn solve_exact(
    scaling: &ScalingParams,
    shape: &ShapeSolution,
    potential: &Potential,
    opts: &WaveOptions,
) -> Result<WaveProfile, WaveError> {
    let p = *scaling;
    if (potential.m() - p.m).abs() > 1e-12 {
        return Err(WaveError::InvalidParameter(format!(
            "potential has m = {}, scaling has m = {}",
            potential.m(),
            p.m
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(WaveError::InvalidParameter(format!("tol = {} must be positive", opts.tol)));
    }
    let a = tail_rate(p.omega, potential)?;
    let grid = opts.grid.unwrap_or_else(|| WaveGrid::choose(p.xi, a, opts.h_max));
    if !grid.cells.is_multiple_of(2) || grid.nodes < grid.cells {
        return Err(WaveError::InvalidParameter(format!("bad grid {grid:?}")));
    }
    let h = grid.spacing(p.xi);
    let sys = System { pot: potential, h, cells: grid.cells, n: grid.nodes, s: p.depth().powf(p.m + 2.0), xi: p.xi };
    let x: Vec<f64> = (0..=grid.nodes).map(|i| i as f64 * h).collect();
    let mut r = sample(&x, |z| approx_distance_at(&p, shape, z))?;

    let mut log = Vec::new();
    let mut f = sys.residual(&r);
    let mut res = sup(&f);
    let mut chord = Chord::build(&sys, &sys.curvature(&r), opts.active_threshold)?;
    let mut fresh = true;
    let mut clipped = false;
    let mut polish = 0;
    for it in 0..opts.max_iter {
        if res <= opts.tol {
            if polish >= 4 {
                break;
            }
            polish += 1;
        }
        let neg: Vec<f64> = f.iter().map(|v| -v).collect();
        let u = chord.apply(&sys, &neg)?;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=30 {
            let mut trial: Vec<f64> = r.iter().zip(&u).map(|(a, b)| a + lambda * b).collect();
            if trial.iter().any(|&v| !(v > -1.0)) {
                if clipped {
                    return Err(WaveError::RangeViolation { iteration: it });
                }
                clipped = true;
                for v in trial.iter_mut() {
                    if !(*v > -1.0) {
                        *v = -1.0 + 1e-12;
                    }
                }
            }
            let ft = sys.residual(&trial);
            let rt = sup(&ft);
            if rt < res || (polish > 0 && rt <= res.max(opts.tol)) {
                accepted = Some((trial, ft, rt));
                break;
            }
            lambda *= 0.5;
        }
        let Some((nr, nf, nres)) = accepted else {
            if res <= opts.tol {
                break;
            }
            return Err(WaveError::NewtonDiverged { iterations: it, residual: res, log });
        };
        let ratio = nres / res;
        r = nr;
        f = nf;
        let old = res;
        res = nres;
        let refactor = ratio > 0.3 && !fresh && res > opts.tol;
        if refactor {
            chord = Chord::build(&sys, &sys.curvature(&r), opts.active_threshold)?;
        }
        fresh = refactor;
        log.push(NewtonRecord { iteration: it, residual: res, damping: lambda, refactored: refactor });
        if polish > 0 && nres > 0.5 * old {
            break;
        }
    }
    if res > opts.tol {
        return Err(WaveError::NewtonDiverged { iterations: log.len(), residual: res, log });
    }

    let d1 = EvenField::new(h, r.iter().map(|&v| potential.d1(v)).collect());
    let cv = p.delta.powf(0.5 * p.m + 1.0) * p.beta;
    let half = grid.cells / 2;
    let mut v = vec![0.0; grid.nodes + 1];
    fill_indexed(&mut v, |i| -cv * d1.box_node(i, half));
    let dens: Vec<f64> = r.iter().zip(&v).map(|(&ri, &vi)| 0.5 * vi * vi + potential.phi(ri)).collect();
    let energy = p.unit() * EvenField::new(h, dens).integral();

    // parameter derivative, with the chord rebuilt at the converged profile
    let chord = Chord::build(&sys, &sys.curvature(&r), opts.active_threshold)?;
    let pv = sys.curvature(&r);
    let kv: Vec<f64> = r.iter().map(|&v| p.depth().powf(p.m + 1.0) * potential.d1(v)).collect();
    let qsys = |q: &[f64]| -> Vec<f64> {
        let g: Vec<f64> = q.iter().zip(&pv).zip(&kv).map(|((q, p), k)| p * q + k).collect();
        let c = sys.tent(g);
        q.iter().zip(c).map(|(a, b)| a - b).collect()
    };
    let mut q = vec![0.0; grid.nodes + 1];
    let mut qres_v = qsys(&q);
    let mut qres = sup(&qres_v);
    let qscale = sup(&sys.tent(kv.clone())).max(1e-300);
    let mut extra = 0;
    for _ in 0..opts.max_iter {
        let du = chord.apply(&sys, &qres_v)?;
        let nq: Vec<f64> = q.iter().zip(&du).map(|(a, b)| a - b).collect();
        let nv = qsys(&nq);
        let nres = sup(&nv);
        if !nres.is_finite() || nres > 10.0 * qres.max(opts.tol * qscale) {
            return Err(WaveError::SingularSystem);
        }
        let improved = nres < 0.5 * qres;
        if nres <= qres {
            q = nq;
            qres_v = nv;
            qres = nres;
        }
        if qres <= opts.tol * qscale {
            extra += 1;
            if extra > 2 || !improved {
                break;
            }
        } else if !improved && nres >= qres {
            break;
        }
    }
    if qres > opts.tol * qscale * 10.0 {
        return Err(WaveError::SingularSystem);
    }
    let dq = EvenField::new(h, q.iter().zip(&pv).zip(&kv).map(|((q, p), k)| p * q + k).collect());
    let d2q = EvenField::new(h, q.iter().zip(&r).map(|(q, &rr)| potential.d2(rr) * q).collect());

    Ok(WaveProfile {
        potential: *potential,
        scaling: p,
        grid,
        h,
        x,
        r,
        v,
        q,
        energy,
        tail_rate: a,
        residual: res,
        q_residual: qres,
        newton: log,
        d1,
        dq,
        d2q,
    })
}

/// Solves the parameter derivative for a converged wave; returns `(Q̃, Q̆)` on the nodes.
pub fn solve_parameter_derivative(wave: &WaveProfile, shape: &ShapeSolution) -> Result<(Vec<f64>, Vec<f64>), WaveError> {
    let c = q_breve_constant(&wave.scaling, shape)?;
    let qb = wave.x.iter().map(|&x| approx::approx_q_with(&wave.scaling, shape, c, x)).collect();
    Ok((wave.q.clone(), qb))
}

impl WaveProfile {
    fn s(&self) -> f64 {
        self.scaling.depth().powf(self.scaling.m + 2.0)
    }

    fn cv(&self) -> f64 {
        self.scaling.delta.powf(0.5 * self.scaling.m + 1.0) * self.scaling.beta
    }

    /// `R̃(x̃)` anywhere.
    pub fn r_tilde(&self, xt: f64) -> f64 {
        self.s() * self.d1.tent(xt, 2.0 * self.scaling.xi)
    }

    pub fn v_tilde(&self, xt: f64) -> f64 {
        -self.cv() * self.d1.boxed(xt, self.scaling.xi)
    }

    pub fn q_tilde(&self, xt: f64) -> f64 {
        self.dq.tent(xt, 2.0 * self.scaling.xi)
    }

    /// `dR̃/dx̃`.
    pub fn r_tilde_prime(&self, xt: f64) -> f64 {
        self.s() * self.d1.tent_slope(xt, 2.0 * self.scaling.xi)
    }

    /// `dṼ/dx̃`.
    pub fn v_tilde_prime(&self, xt: f64) -> f64 {
        let xi = self.scaling.xi;
        let d = |z: f64| self.potential.d1(self.r_tilde(z));
        -self.cv() * (d(xt + xi) - d(xt - xi))
    }

    pub fn q_tilde_prime(&self, xt: f64) -> f64 {
        self.dq.tent_slope(xt, 2.0 * self.scaling.xi)
    }

    /// Distance profile in lattice units.
    pub fn r_at(&self, x: f64) -> f64 {
        self.r_tilde(self.scaling.to_tilde(x))
    }

    pub fn v_at(&self, x: f64) -> f64 {
        self.v_tilde(self.scaling.to_tilde(x))
    }

    pub fn dr_dx(&self, x: f64) -> f64 {
        self.r_tilde_prime(self.scaling.to_tilde(x)) / self.scaling.unit()
    }

    pub fn dv_dx(&self, x: f64) -> f64 {
        self.v_tilde_prime(self.scaling.to_tilde(x)) / self.scaling.unit()
    }

    /// `∂_δ R = mα Q̃`.
    pub fn dr_ddelta(&self, x: f64) -> f64 {
        self.scaling.m * self.scaling.alpha * self.q_tilde(self.scaling.to_tilde(x))
    }

    /// `∂_δ V = −χ∗((m/2)δ^(m/2−1)Φ'(R) + δ^(m/2)Φ''(R)∂_δR)`.
    pub fn dv_ddelta(&self, x: f64) -> f64 {
        let p = &self.scaling;
        let xt = p.to_tilde(x);
        let m = p.m;
        let b1 = self.d1.boxed(xt, p.xi);
        let b2 = self.d2q.boxed(xt, p.xi);
        -p.unit() * (0.5 * m * p.delta.powf(0.5 * m - 1.0) * b1 + p.delta.powf(0.5 * m) * m * p.alpha * b2)
    }

    /// Half-width of the computational domain in `x̃`.
    pub fn half_length(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    /// Largest `|R̃|, |Ṽ|` at the domain edge.
    pub fn edge_values(&self) -> (f64, f64) {
        let n = self.r.len() - 1;
        (self.r[n].abs(), self.v[n].abs())
    }

    /// Max over interior nodes of `|D²R̃ − s(Φ'(R̃(x̃+2ξ)) + Φ'(R̃(x̃−2ξ)) − 2Φ'(R̃))|`,
    /// with `D²` the sixth-order central difference.
    pub fn second_order_defect(&self) -> f64 {
        const C: [f64; 4] = [-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];
        let n = self.r.len() as isize - 1;
        let c2 = self.grid.cells as isize;
        let rv = |j: isize| self.r[j.unsigned_abs()];
        let f = |j: isize| self.d1.node(j);
        let s = self.s();
        let mut worst = 0.0f64;
        for i in 0..=(n - c2 - 3) {
            let mut d2 = C[0] * rv(i);
            for (k, ck) in C.iter().enumerate().skip(1) {
                d2 += ck * (rv(i + k as isize) + rv(i - k as isize));
            }
            d2 /= self.h * self.h;
            let rhs = s * (f(i + c2) + f(i - c2) - 2.0 * f(i));
            worst = worst.max((d2 - rhs).abs());
        }
        worst
    }

    /// Least-squares slope of `ln|R|` over `[x0, x1]` in lattice units.
    pub fn tail_slope(&self, x0: f64, x1: f64, samples: usize) -> f64 {
        let pts: Vec<(f64, f64)> = (0..samples)
            .map(|k| {
                let x = x0 + (x1 - x0) * k as f64 / (samples - 1) as f64;
                (x, self.r_at(x).abs().ln())
            })
            .collect();
        slope(&pts)
    }

    /// Sup-norm gaps to the explicit approximations.
    pub fn approximation_errors(&self, shape: &ShapeSolution) -> Result<ApproxErrors, WaveError> {
        let p = &self.scaling;
        let c = q_breve_constant(p, shape)?;
        let mut e = ApproxErrors::default();
        for (i, &x) in self.x.iter().enumerate() {
            let dr = (self.r[i] - approx_distance_at(p, shape, x)?).abs();
            let dv = (self.v[i] - approx_velocity_at(p, shape, x)?).abs() / p.omega;
            let dq = (self.q[i] - approx::approx_q_with(p, shape, c, x)).abs();
            e.r_inf = e.r_inf.max(dr);
            e.v_inf = e.v_inf.max(dv);
            e.q_inf = e.q_inf.max(dq);
            if x <= 1.0 {
                e.r_local = e.r_local.max(dr);
            }
        }
        Ok(e)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ApproxErrors {
    /// `‖R̃ − R̆‖_∞`.
    pub r_inf: f64,
    /// `sup_{|x̃|≤1} |R̃ − R̆|`.
    pub r_local: f64,
    /// `‖Ṽ − V̆‖_∞ / ω`.
    pub v_inf: f64,
    pub q_inf: f64,
}

/// Least-squares slope of `y` against `x`.
pub fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Solves waves for several speeds sharing one shape solution.
pub fn solve_ladder(
    omegas: &[f64],
    shape: &ShapeSolution,
    potential: &Potential,
    opts: &WaveOptions,
) -> Vec<Result<WaveProfile, WaveError>> {
    map_indexed(omegas.len(), |i| {
        let p = solve_scaling(omegas[i], shape)?;
        solve_exact(&p, shape, potential, opts)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySlope {
    pub delta: f64,
    pub omega: f64,
    /// `∂_δ h`.
    pub dh_ddelta: f64,
    /// `δ^(m+1) ∂_δ h`, which tends to `−m/2`.
    pub normalized: f64,
}

/// Three-point differences of the energy over `δ` at every interior member
/// of a ladder (any order; sorted internally).
pub fn energy_derivative(waves: &[&WaveProfile]) -> Result<Vec<EnergySlope>, WaveError> {
    if waves.len() < 3 {
        return Err(WaveError::InsufficientLadder(waves.len()));
    }
    let mut pts: Vec<(f64, f64, f64, f64)> =
        waves.iter().map(|w| (w.scaling.delta, w.energy, w.scaling.omega, w.scaling.m)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pts
        .windows(3)
        .map(|w| {
            let (x0, y0, _, _) = w[0];
            let (x1, y1, om, m) = w[1];
            let (x2, y2, _, _) = w[2];
            let (h0, h1) = (x1 - x0, x2 - x1);
            let d = -h1 / (h0 * (h0 + h1)) * y0 + (h1 - h0) / (h0 * h1) * y1 + h0 / (h1 * (h0 + h1)) * y2;
            EnergySlope { delta: x1, omega: om, dh_ddelta: d, normalized: x1.powf(m + 1.0) * d }
        })
        .collect())
}

/// Energy slope `∂_δh` at `omega` from waves at `δ(1 ± eps)` on the grid
/// layout of the central wave. Returns the slope and the three waves.
pub fn energy_slope_at(
    omega: f64,
    shape: &ShapeSolution,
    potential: &Potential,
    opts: &WaveOptions,
    eps: f64,
) -> Result<(EnergySlope, [WaveProfile; 3]), WaveError> {
    let m = shape.m;
    let centre = solve_scaling(omega, shape)?;
    let base = solve_exact(&centre, shape, potential, opts)?;
    let o2 = WaveOptions { grid: Some(base.grid), ..*opts };
    let shifted = map_indexed(2, |k| {
        let d = centre.delta * if k == 0 { 1.0 - eps } else { 1.0 + eps };
        let p = solve_scaling(d.powf(-0.5 * m), shape)?;
        solve_exact(&p, shape, potential, &o2)
    });
    let mut it = shifted.into_iter();
    let lo = it.next().expect("two")?;
    let hi = it.next().expect("two")?;
    let s = energy_derivative(&[&lo, &base, &hi])?[0];
    Ok((s, [lo, base, hi]))
}
